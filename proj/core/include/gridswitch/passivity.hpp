#pragma once

// Passivity certificates for linear supply models.
//
// The certificate is a sampled frequency sweep of Re S(jw) against a margin
// epsilon (a necessary check of positive-realness of S - epsilon, not a proof).
// Storage functions come from the Kalman-Yakubovich-Popov Riccati equation and
// are re-verified against the dissipation matrix before being returned.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridswitch/supply.hpp"

namespace gridswitch {

inline constexpr const char* kLocalValidityNote =
    "local certificate: holds on unquantified neighbourhoods of the equilibrium input and state";

struct PassivityCertificate {
    double epsilon = 0.0;
    std::vector<double> freq_grid;  ///< rad/s, strictly increasing, positive
    double min_real_part = 0.0;     ///< min over the grid of Re S(jw)
    double argmin_frequency = 0.0;
    bool pass = false;              ///< min_real_part >= epsilon
    std::string validity_note = kLocalValidityNote;
};

/// `points` log-spaced frequencies on [lo, hi]. Defaults match the sweep used by
/// check_passivity when no grid is given.
std::vector<double> log_frequency_grid(double lo = 1e-3, double hi = 1e3, std::size_t points = 10000);

/// Throws NonlinearModelUnsupported, EmptyGrid, or InvalidArgument for a grid
/// that is not positive and strictly increasing.
PassivityCertificate check_passivity(const SupplyModel& model, double epsilon,
                                     std::span<const double> freq_grid);
PassivityCertificate check_passivity(const SupplyModel& model, double epsilon);

/// Closed-form sufficient condition for the PI variants:
///   PILag:          K tau_b < D + K~
///   PISecondOrder:  K (tau_b + tau_g) < D
/// Throws UnsupportedVariant for everything else.
bool gain_condition(const SupplyModel& model);

/// Quadratic storage V(x) = (x - center)^T weight (x - center).
struct StorageFunction {
    Eigen::MatrixXd weight;
    Eigen::VectorXd center;
    double epsilon = 0.0;
    double dissipation_residual = 0.0;  ///< max eigenvalue of the dissipation matrix

    [[nodiscard]] double operator()(std::span<const double> x) const;
    [[nodiscard]] std::size_t order() const noexcept { return static_cast<std::size_t>(weight.rows()); }
};

/// Symmetric matrix whose negative semidefiniteness is equivalent to
///   d/dt (x^T P x) <= u y - epsilon u^2   for all (x, u)
/// along x' = A x + B u, y = C x + D u.
Eigen::MatrixXd dissipation_matrix(const LinearStateSpace& model, const Eigen::MatrixXd& weight,
                                   double epsilon);

/// Finds P >= 0 satisfying the dissipation inequality with phi(v) = epsilon v^2.
/// The center is zero; callers shift it to the equilibrium state.
/// Throws StorageSearchFailed (or NonlinearModelUnsupported).
StorageFunction derive_storage(const SupplyModel& model, double epsilon);

}  // namespace gridswitch
