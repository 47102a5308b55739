#include "gridswitch/supply.hpp"

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

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(Errc::NonPositiveParameter, std::string(what) + " must be positive and finite");
    }
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

// Degree ignoring trailing (highest-power) zeros; -1 for the zero polynomial.
int effective_degree(const std::vector<double>& p) {
    for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) {
        if (p[static_cast<std::size_t>(i)] != 0.0) return i;
    }
    return -1;
}

bool lss_has_integrator(const LinearStateSpace& m) {
    if (m.a.rows() == 0) return false;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m.a);
    lu.setThreshold(1e-12);
    return lu.rank() < m.a.rows();
}

}  // namespace

std::complex<double> polyval_ascending(std::span<const double> coeffs, std::complex<double> x) {
    std::complex<double> acc{0.0, 0.0};
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

TransferFunction turbine_governor(const GovernorParams& p) {
    require_positive(p.gain, "governor gain K");
    require_positive(p.damping, "governor damping D");
    require_positive(p.t_s, "T_s");
    require_positive(p.t_c, "T_c");
    require_positive(p.t_5, "T_5");
    if (p.t_3 < 0.0 || p.t_4 < 0.0) {
        throw Error(Errc::NonPositiveParameter, "T_3 and T_4 must be non-negative");
    }
    const std::vector<double> zeros = poly_mul({1.0, p.t_3}, {1.0, p.t_4});
    const std::vector<double> den = poly_mul(poly_mul({1.0, p.t_s}, {1.0, p.t_c}), {1.0, p.t_5});
    std::vector<double> num(den.size(), 0.0);
    for (std::size_t i = 0; i < zeros.size(); ++i) num[i] += p.gain * zeros[i];
    for (std::size_t i = 0; i < den.size(); ++i) num[i] += p.damping * den[i];
    return TransferFunction{num, den, false};
}

void validate(const SupplyModel& model) {
    std::visit(overloaded{
                   [](const StaticDamping& m) { require_positive(m.damping, "damping D"); },
                   [](const PILag& m) {
                       require_positive(m.gain, "integral gain K");
                       require_positive(m.damping, "damping D");
                       require_positive(m.tau_beta, "tau_beta");
                       if (!(m.droop_gain >= 0.0) || !std::isfinite(m.droop_gain)) {
                           throw Error(Errc::NonPositiveParameter, "droop gain K~ must be non-negative");
                       }
                   },
                   [](const PISecondOrder& m) {
                       require_positive(m.gain, "integral gain K");
                       require_positive(m.damping, "damping D");
                       require_positive(m.tau_beta, "tau_beta");
                       require_positive(m.tau_gamma, "tau_gamma");
                   },
                   [](const LinearStateSpace& m) {
                       const auto n = m.a.rows();
                       if (m.a.cols() != n || m.b.size() != n || m.c.size() != n) {
                           throw Error(Errc::DimensionMismatch, "state-space matrices have inconsistent sizes");
                       }
                       if (!m.a.allFinite() || !m.b.allFinite() || !m.c.allFinite() || !std::isfinite(m.d)) {
                           throw Error(Errc::InvalidArgument, "state-space matrices must be finite");
                       }
                   },
                   [](const TransferFunction& m) { (void)realize_transfer_function(m); },
                   [](const NonlinearSupply& m) {
                       if (!m.vector_field || !m.output) {
                           throw Error(Errc::InvalidArgument, "nonlinear supply needs a vector field and output map");
                       }
                       if (m.rest_state.size() != m.order) {
                           throw Error(Errc::DimensionMismatch, "nonlinear supply rest state has the wrong size");
                       }
                   },
               },
               model);
}

std::size_t order(const SupplyModel& model) {
    return std::visit(overloaded{
                          [](const StaticDamping&) -> std::size_t { return 0; },
                          [](const PILag&) -> std::size_t { return 2; },
                          [](const PISecondOrder&) -> std::size_t { return 3; },
                          [](const LinearStateSpace& m) -> std::size_t { return static_cast<std::size_t>(m.a.rows()); },
                          [](const TransferFunction& m) -> std::size_t {
                              const int deg = effective_degree(m.denominator);
                              return deg < 0 ? 0 : static_cast<std::size_t>(deg);
                          },
                          [](const NonlinearSupply& m) -> std::size_t { return m.order; },
                      },
                      model);
}

bool restores_frequency(const SupplyModel& model) {
    return std::visit(overloaded{
                          [](const StaticDamping&) { return false; },
                          [](const PILag&) { return true; },
                          [](const PISecondOrder&) { return true; },
                          [](const LinearStateSpace& m) { return lss_has_integrator(m); },
                          [](const TransferFunction& m) {
                              return !m.denominator.empty() && m.denominator.front() == 0.0;
                          },
                          [](const NonlinearSupply&) { return false; },
                      },
                      model);
}

bool is_linear(const SupplyModel& model) noexcept {
    return !std::holds_alternative<NonlinearSupply>(model);
}

const char* variant_name(const SupplyModel& model) noexcept {
    static constexpr const char* names[] = {"static_damping", "pi_lag", "pi_second_order",
                                            "state_space",    "transfer_function", "nonlinear"};
    return names[model.index()];
}

double supply_flow_into(const SupplyModel& model, std::span<const double> x, double omega,
                        std::span<double> x_dot) {
    const double u = -omega;
    return std::visit(
        overloaded{
            [&](const StaticDamping& m) { return m.damping * u; },
            [&](const PILag& m) {
                x_dot[0] = m.gain * u;
                x_dot[1] = (-x[1] + x[0] + m.droop_gain * u) / m.tau_beta;
                return x[1] + m.damping * u;
            },
            [&](const PISecondOrder& m) {
                x_dot[0] = m.gain * u;
                x_dot[1] = (-x[1] + x[0]) / m.tau_beta;
                x_dot[2] = (-x[2] + x[1]) / m.tau_gamma;
                return x[2] + m.damping * u;
            },
            [&](const LinearStateSpace& m) {
                const auto n = m.a.rows();
                Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
                Eigen::Map<Eigen::VectorXd> dv(x_dot.data(), n);
                dv.noalias() = m.a * xv;
                dv += m.b * u;
                return n == 0 ? m.d * u : m.c.dot(xv) + m.d * u;
            },
            [&](const TransferFunction&) -> double {
                throw Error(Errc::UnsupportedVariant, "transfer functions must be realized before integration");
            },
            [&](const NonlinearSupply& m) {
                m.vector_field(x, u, x_dot);
                return m.output(x, u);
            },
        },
        model);
}

SupplyFlow supply_flow(const SupplyModel& model, std::span<const double> x_s, double omega) {
    if (const auto* tf = std::get_if<TransferFunction>(&model)) {
        return supply_flow(SupplyModel{realize_transfer_function(*tf)}, x_s, omega);
    }
    const std::size_t n = order(model);
    if (x_s.size() != n) {
        throw Error(Errc::DimensionMismatch, std::string(variant_name(model)) + " expects " +
                                                 std::to_string(n) + " states, got " + std::to_string(x_s.size()));
    }
    SupplyFlow out;
    out.x_dot.assign(n, 0.0);
    out.s = supply_flow_into(model, x_s, omega, out.x_dot);
    return out;
}

LinearStateSpace realize_transfer_function(const TransferFunction& tf) {
    if (tf.denominator.empty()) {
        throw Error(Errc::DegenerateLeadingCoefficient, "empty denominator");
    }
    for (double c : tf.numerator) {
        if (!std::isfinite(c)) throw Error(Errc::InvalidArgument, "non-finite numerator coefficient");
    }
    for (double c : tf.denominator) {
        if (!std::isfinite(c)) throw Error(Errc::InvalidArgument, "non-finite denominator coefficient");
    }
    const double lead = tf.denominator.back();
    if (lead == 0.0) {
        throw Error(Errc::DegenerateLeadingCoefficient, "highest-power denominator coefficient is zero");
    }
    const auto n = static_cast<Eigen::Index>(tf.denominator.size() - 1);
    if (effective_degree(tf.numerator) > n) {
        throw Error(Errc::ImproperTransferFunction, "numerator degree exceeds denominator degree");
    }

    Eigen::VectorXd a(n + 1), b = Eigen::VectorXd::Zero(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) a[i] = tf.denominator[static_cast<std::size_t>(i)] / lead;
    for (std::size_t i = 0; i < tf.numerator.size() && static_cast<Eigen::Index>(i) <= n; ++i) {
        b[static_cast<Eigen::Index>(i)] = tf.numerator[i] / lead;
    }

    LinearStateSpace ss;
    ss.d = b[n];
    ss.a = Eigen::MatrixXd::Zero(n, n);
    ss.b = Eigen::VectorXd::Zero(n);
    ss.c = Eigen::RowVectorXd::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) ss.a(i, i + 1) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        ss.a(n - 1, i) = -a[i];
        ss.c[i] = b[i] - ss.d * a[i];
    }
    if (n > 0) ss.b[n - 1] = 1.0;
    return ss;
}

LinearStateSpace as_state_space(const SupplyModel& model) {
    return std::visit(
        overloaded{
            [](const StaticDamping& m) {
                LinearStateSpace ss;
                ss.a.resize(0, 0);
                ss.b.resize(0);
                ss.c.resize(0);
                ss.d = m.damping;
                return ss;
            },
            [](const PILag& m) {
                LinearStateSpace ss;
                ss.a = Eigen::MatrixXd::Zero(2, 2);
                ss.a(1, 0) = 1.0 / m.tau_beta;
                ss.a(1, 1) = -1.0 / m.tau_beta;
                ss.b = Eigen::Vector2d(m.gain, m.droop_gain / m.tau_beta);
                ss.c = Eigen::RowVector2d(0.0, 1.0);
                ss.d = m.damping;
                return ss;
            },
            [](const PISecondOrder& m) {
                LinearStateSpace ss;
                ss.a = Eigen::MatrixXd::Zero(3, 3);
                ss.a(1, 0) = 1.0 / m.tau_beta;
                ss.a(1, 1) = -1.0 / m.tau_beta;
                ss.a(2, 1) = 1.0 / m.tau_gamma;
                ss.a(2, 2) = -1.0 / m.tau_gamma;
                ss.b = Eigen::Vector3d(m.gain, 0.0, 0.0);
                ss.c = Eigen::RowVector3d(0.0, 0.0, 1.0);
                ss.d = m.damping;
                return ss;
            },
            [](const LinearStateSpace& m) { return m; },
            [](const TransferFunction& m) { return realize_transfer_function(m); },
            [](const NonlinearSupply&) -> LinearStateSpace {
                throw Error(Errc::NonlinearModelUnsupported, "nonlinear supply has no state-space form");
            },
        },
        model);
}

SupplyModel simulation_form(const SupplyModel& model) {
    if (const auto* tf = std::get_if<TransferFunction>(&model)) {
        return realize_transfer_function(*tf);
    }
    return model;
}

std::complex<double> frequency_response(const SupplyModel& model, double w) {
    using cd = std::complex<double>;
    const cd s{0.0, w};
    return std::visit(
        overloaded{
            [&](const StaticDamping& m) { return cd{m.damping, 0.0}; },
            [&](const PILag& m) { return (m.gain / s + m.droop_gain) / (1.0 + s * m.tau_beta) + m.damping; },
            [&](const PISecondOrder& m) {
                return m.gain / (s * (1.0 + s * m.tau_beta) * (1.0 + s * m.tau_gamma)) + m.damping;
            },
            [&](const LinearStateSpace& m) {
                const auto n = m.a.rows();
                if (n == 0) return cd{m.d, 0.0};
                Eigen::MatrixXcd resolvent = s * Eigen::MatrixXcd::Identity(n, n) - m.a.cast<cd>();
                Eigen::VectorXcd x = resolvent.partialPivLu().solve(m.b.cast<cd>());
                return (m.c.cast<cd>() * x)(0) + m.d;
            },
            [&](const TransferFunction& m) {
                return polyval_ascending(m.numerator, s) / polyval_ascending(m.denominator, s);
            },
            [&](const NonlinearSupply&) -> cd {
                throw Error(Errc::NonlinearModelUnsupported, "no frequency response for a nonlinear supply");
            },
        },
        model);
}

std::vector<double> rest_state(const SupplyModel& model, double s_target) {
    const bool restoring = restores_frequency(model);
    if (!restoring && s_target != 0.0) {
        throw Error(Errc::NoEquilibriumFound,
                    std::string(variant_name(model)) + " cannot hold a non-zero output at nominal frequency");
    }
    return std::visit(
        overloaded{
            [](const StaticDamping&) { return std::vector<double>{}; },
            [&](const PILag&) { return std::vector<double>{s_target, s_target}; },
            [&](const PISecondOrder&) { return std::vector<double>{s_target, s_target, s_target}; },
            [&](const LinearStateSpace& m) {
                const auto n = m.a.rows();
                std::vector<double> x(static_cast<std::size_t>(n), 0.0);
                if (!restoring || n == 0) return x;
                Eigen::FullPivLU<Eigen::MatrixXd> lu(m.a);
                lu.setThreshold(1e-12);
                const Eigen::MatrixXd kernel = lu.kernel();
                Eigen::Index best = -1;
                double best_gain = 0.0;
                for (Eigen::Index k = 0; k < kernel.cols(); ++k) {
                    const double g = std::abs(m.c.dot(kernel.col(k)));
                    if (g > best_gain) {
                        best_gain = g;
                        best = k;
                    }
                }
                if (best < 0 || best_gain < 1e-12) {
                    throw Error(Errc::NoEquilibriumFound, "integrator state is not observable at the output");
                }
                const Eigen::VectorXd v = kernel.col(best) * (s_target / m.c.dot(kernel.col(best)));
                for (Eigen::Index i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = v[i];
                return x;
            },
            [&](const TransferFunction& m) { return rest_state(SupplyModel{realize_transfer_function(m)}, s_target); },
            [](const NonlinearSupply& m) { return m.rest_state; },
        },
        model);
}

}  // namespace gridswitch
