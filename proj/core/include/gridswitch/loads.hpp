#pragma once

// Controllable demand policies: the instantaneous on-off map, its Filippov
// relaxation, and the hysteretic automaton with its flow and jump sets.

#include <variant>
#include <vector>

namespace gridswitch {

/// On-off load. Switches on (d_up) above omega_up, on (d_down) at or below
/// omega_down, off in between.
struct SwitchingLoad {
    double d_up = 0.0;        ///< >= 0
    double d_down = 0.0;      ///< <= 0
    double omega_up = 0.0;    ///< > 0, rad/s
    double omega_down = 0.0;  ///< < 0, rad/s
};

/// Symmetric hysteretic load: switches on at |omega| = omega1, off at
/// |omega| = omega0. The discrete state sigma lives in HybridState.
struct HystereticLoad {
    double d_up = 0.0;   ///< >= 0
    double omega1 = 0.0; ///< outer threshold, rad/s
    double omega0 = 0.0; ///< inner threshold, 0 < omega0 < omega1
};

struct NoLoad {};

using LoadControl = std::variant<NoLoad, SwitchingLoad, HystereticLoad>;

/// Closed interval [lo, hi] of admissible demand values.
struct FilippovInterval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool contains(double v) const noexcept { return lo <= v && v <= hi; }
    [[nodiscard]] bool is_point() const noexcept { return lo == hi; }
};

/// Throws NonPositiveParameter / InvalidArgument on threshold or magnitude errors.
void validate(const SwitchingLoad& load);
void validate(const HystereticLoad& load);
void validate(const LoadControl& load);

[[nodiscard]] double switching_demand(const SwitchingLoad& load, double omega) noexcept;

/// Set-valued relaxation; threshold equality is exact (tolerance 0).
[[nodiscard]] FilippovInterval filippov_demand(const SwitchingLoad& load, double omega) noexcept;

/// I(omega) as a list of admissible sigma values, in ascending order.
[[nodiscard]] std::vector<int> hysteresis_flow_set(const HystereticLoad& load, double omega);

[[nodiscard]] bool in_flow_set(const HystereticLoad& load, double omega, int sigma) noexcept;

/// Membership in the jump set. `tol` widens the threshold equalities; the
/// solver passes its event tolerance, everything else uses exact equality.
[[nodiscard]] bool hysteresis_jump_set(const HystereticLoad& load, double omega, int sigma,
                                       double tol = 0.0) noexcept;

/// sigma after the jump; the continuous state is unchanged. Throws NotInJumpSet.
int hysteresis_jump(const HystereticLoad& load, double omega, int sigma, double tol = 0.0);

[[nodiscard]] constexpr double hysteretic_demand(const HystereticLoad& load, int sigma) noexcept {
    return load.d_up * static_cast<double>(sigma);
}

[[nodiscard]] constexpr int sgn(double v) noexcept { return (v > 0.0) - (v < 0.0); }

}  // namespace gridswitch
