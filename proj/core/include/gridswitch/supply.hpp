#pragma once

// Net-supply dynamics driven by the negative frequency deviation u = -omega.
// Every variant maps (x_s, u) to (x_s_dot, s).

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace gridswitch {

/// s = -D omega; no internal state.
struct StaticDamping {
    double damping = 1.0;
};

/// PI control acting through a first-order lag, state (alpha, beta):
///   alpha' = -K omega,  tau_b beta' = -beta + alpha - K~ omega,  s = beta - D omega
struct PILag {
    double gain = 1.0;        ///< K
    double droop_gain = 0.0;  ///< K~
    double damping = 1.0;     ///< D
    double tau_beta = 1.0;
};

/// Integrator in series with two lags, state (alpha, beta, gamma):
///   alpha' = -K omega,  tau_b beta' = -beta + alpha,  tau_g gamma' = -gamma + beta,
///   s = gamma - D omega
struct PISecondOrder {
    double gain = 1.0;
    double damping = 1.0;
    double tau_beta = 1.0;
    double tau_gamma = 1.0;
};

/// x' = A x + B u, s = C x + D u with u = -omega.
struct LinearStateSpace {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::RowVectorXd c;
    double d = 0.0;
};

/// Rational S(s) from u = -omega to s, coefficients in ascending powers of s.
/// Analysis representation; simulation uses its realization.
struct TransferFunction {
    std::vector<double> numerator;
    std::vector<double> denominator;
    bool integrator = false;  ///< declares an intentional pole at the origin
};

/// Plug-in for general nonlinear dynamics. Simulation only: passivity
/// certificates are not available for it.
struct NonlinearSupply {
    std::size_t order = 0;
    std::function<void(std::span<const double> x, double u, std::span<double> x_dot)> vector_field;
    std::function<double(std::span<const double> x, double u)> output;
    std::vector<double> rest_state;  ///< x* with f(x*, 0) = 0
};

using SupplyModel =
    std::variant<StaticDamping, PILag, PISecondOrder, LinearStateSpace, TransferFunction, NonlinearSupply>;

/// Parameters of the five-time-constant turbine-governor model
///   G(s) = K / (1 + s Ts) * (1 + s T3) / (1 + s Tc) * (1 + s T4) / (1 + s T5) + D
struct GovernorParams {
    double gain = 25.0;
    double damping = 1.0;
    double t_s = 0.04;
    double t_3 = 0.25;
    double t_c = 0.4;
    double t_4 = 0.3;
    double t_5 = 8.0;
};

TransferFunction turbine_governor(const GovernorParams& params);

/// Throws NonPositiveParameter / DimensionMismatch / ImproperTransferFunction.
void validate(const SupplyModel& model);

[[nodiscard]] std::size_t order(const SupplyModel& model);

/// True for models whose only rest points have omega = 0 (integral action).
[[nodiscard]] bool restores_frequency(const SupplyModel& model);

[[nodiscard]] bool is_linear(const SupplyModel& model) noexcept;

[[nodiscard]] const char* variant_name(const SupplyModel& model) noexcept;

struct SupplyFlow {
    std::vector<double> x_dot;
    double s = 0.0;
};

/// Vector field and output at (x_s, omega). Throws DimensionMismatch.
SupplyFlow supply_flow(const SupplyModel& model, std::span<const double> x_s, double omega);

/// Allocation-free variant used by the integrator; `x_dot` must have order(model)
/// entries. Transfer functions must be realized first (UnsupportedVariant).
double supply_flow_into(const SupplyModel& model, std::span<const double> x_s, double omega,
                        std::span<double> x_dot);

/// Controllable-canonical realization. Throws ImproperTransferFunction when the
/// numerator degree exceeds the denominator's, DegenerateLeadingCoefficient when
/// the highest denominator coefficient is zero.
LinearStateSpace realize_transfer_function(const TransferFunction& tf);

/// State-space form of any linear variant. Throws NonlinearModelUnsupported.
LinearStateSpace as_state_space(const SupplyModel& model);

/// The form the solver integrates: transfer functions become state space.
SupplyModel simulation_form(const SupplyModel& model);

/// S(jw) from -omega to s. Direct rational evaluation for transfer functions,
/// closed forms for the PI variants, resolvent for state space.
std::complex<double> frequency_response(const SupplyModel& model, double w);

/// Rest state at omega = 0 producing output `s_target`. Only frequency-restoring
/// models can hold a non-zero output at rest; others require s_target == 0 and
/// return their unique rest state.
std::vector<double> rest_state(const SupplyModel& model, double s_target);

/// Evaluates a polynomial given in ascending powers at a complex point.
std::complex<double> polyval_ascending(std::span<const double> coeffs, std::complex<double> x);

}  // namespace gridswitch
