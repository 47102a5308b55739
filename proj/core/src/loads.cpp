#include "gridswitch/loads.hpp"

#include <cmath>
#include <string>

#include "gridswitch/error.hpp"

namespace gridswitch {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void validate(const SwitchingLoad& l) {
    if (!finite(l.d_up) || !finite(l.d_down) || !finite(l.omega_up) || !finite(l.omega_down)) {
        throw Error(Errc::InvalidArgument, "switching load has non-finite parameters");
    }
    if (l.d_up < 0.0 || l.d_down > 0.0) {
        throw Error(Errc::InvalidArgument, "switching load needs d_down <= 0 <= d_up");
    }
    if (!(l.omega_up > 0.0) || !(l.omega_down < 0.0)) {
        throw Error(Errc::NonPositiveParameter, "switching load needs omega_down < 0 < omega_up");
    }
}

void validate(const HystereticLoad& l) {
    if (!finite(l.d_up) || !finite(l.omega0) || !finite(l.omega1)) {
        throw Error(Errc::InvalidArgument, "hysteretic load has non-finite parameters");
    }
    if (l.d_up < 0.0) {
        throw Error(Errc::InvalidArgument, "hysteretic load needs d_up >= 0");
    }
    if (!(l.omega0 > 0.0) || !(l.omega1 > l.omega0)) {
        throw Error(Errc::NonPositiveParameter, "hysteretic load needs omega1 > omega0 > 0");
    }
}

void validate(const LoadControl& load) {
    std::visit(overloaded{
                   [](const NoLoad&) {},
                   [](const SwitchingLoad& l) { validate(l); },
                   [](const HystereticLoad& l) { validate(l); },
               },
               load);
}

double switching_demand(const SwitchingLoad& l, double omega) noexcept {
    if (omega > l.omega_up) return l.d_up;
    if (omega > l.omega_down) return 0.0;
    return l.d_down;
}

FilippovInterval filippov_demand(const SwitchingLoad& l, double omega) noexcept {
    if (omega == l.omega_up) return {0.0, l.d_up};
    if (omega == l.omega_down) return {l.d_down, 0.0};
    const double d = switching_demand(l, omega);
    return {d, d};
}

std::vector<int> hysteresis_flow_set(const HystereticLoad& l, double omega) {
    const double a = std::abs(omega);
    if (a > l.omega1) return {sgn(omega)};
    if (a < l.omega0) return {0};
    const int s = sgn(omega);
    return s < 0 ? std::vector<int>{s, 0} : std::vector<int>{0, s};
}

bool in_flow_set(const HystereticLoad& l, double omega, int sigma) noexcept {
    const double a = std::abs(omega);
    if (a > l.omega1) return sigma == sgn(omega);
    if (a < l.omega0) return sigma == 0;
    return sigma == 0 || sigma == sgn(omega);
}

bool hysteresis_jump_set(const HystereticLoad& l, double omega, int sigma, double tol) noexcept {
    const double a = std::abs(omega);
    if (std::abs(a - l.omega1) <= tol && sigma == 0) return true;
    return std::abs(a - l.omega0) <= tol && sigma != 0 && sigma == sgn(omega);
}

int hysteresis_jump(const HystereticLoad& l, double omega, int sigma, double tol) {
    if (!hysteresis_jump_set(l, omega, sigma, tol)) {
        throw Error(Errc::NotInJumpSet, "state (omega=" + std::to_string(omega) + ", sigma=" +
                                            std::to_string(sigma) + ") is not in the jump set");
    }
    if (std::abs(std::abs(omega) - l.omega1) <= tol && sigma == 0) return sgn(omega);
    return 0;
}

}  // namespace gridswitch
