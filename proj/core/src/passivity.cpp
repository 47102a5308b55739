#include "gridswitch/passivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "gridswitch/error.hpp"

namespace gridswitch {

std::vector<double> log_frequency_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0.0) || !(hi > lo) || points == 0) {
        throw Error(Errc::InvalidArgument, "frequency grid needs 0 < lo < hi and at least one point");
    }
    std::vector<double> grid(points);
    if (points == 1) {
        grid[0] = lo;
        return grid;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    return grid;
}

PassivityCertificate check_passivity(const SupplyModel& model, double epsilon,
                                     std::span<const double> freq_grid) {
    if (!is_linear(model)) {
        throw Error(Errc::NonlinearModelUnsupported, "passivity certificates cover linear supplies only");
    }
    if (freq_grid.empty()) {
        throw Error(Errc::EmptyGrid, "frequency grid is empty");
    }
    for (std::size_t i = 0; i < freq_grid.size(); ++i) {
        if (!(freq_grid[i] > 0.0) || !std::isfinite(freq_grid[i]) ||
            (i > 0 && !(freq_grid[i] > freq_grid[i - 1]))) {
            throw Error(Errc::InvalidArgument, "frequency grid must be positive and strictly increasing");
        }
    }
    validate(model);

    PassivityCertificate cert;
    cert.epsilon = epsilon;
    cert.freq_grid.assign(freq_grid.begin(), freq_grid.end());
    cert.min_real_part = std::numeric_limits<double>::infinity();
    for (double w : freq_grid) {
        const double re = frequency_response(model, w).real();
        if (re < cert.min_real_part) {
            cert.min_real_part = re;
            cert.argmin_frequency = w;
        }
    }
    cert.pass = cert.min_real_part >= epsilon;
    return cert;
}

PassivityCertificate check_passivity(const SupplyModel& model, double epsilon) {
    const auto grid = log_frequency_grid();
    return check_passivity(model, epsilon, grid);
}

bool gain_condition(const SupplyModel& model) {
    if (const auto* m = std::get_if<PILag>(&model)) {
        return m->gain * m->tau_beta < m->damping + m->droop_gain;
    }
    if (const auto* m = std::get_if<PISecondOrder>(&model)) {
        return m->gain * (m->tau_beta + m->tau_gamma) < m->damping;
    }
    throw Error(Errc::UnsupportedVariant,
                std::string("no closed-form gain condition for ") + variant_name(model));
}

double StorageFunction::operator()(std::span<const double> x) const {
    const auto n = weight.rows();
    if (static_cast<Eigen::Index>(x.size()) != n) {
        throw Error(Errc::DimensionMismatch, "storage expects " + std::to_string(n) + " states");
    }
    if (n == 0) return 0.0;
    Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    if (center.size() == n) e -= center;
    return e.dot(weight * e);
}

Eigen::MatrixXd dissipation_matrix(const LinearStateSpace& m, const Eigen::MatrixXd& p, double epsilon) {
    const auto n = m.a.rows();
    Eigen::MatrixXd out(n + 1, n + 1);
    out.topLeftCorner(n, n) = m.a.transpose() * p + p * m.a;
    const Eigen::VectorXd cross = p * m.b - 0.5 * m.c.transpose();
    out.topRightCorner(n, 1) = cross;
    out.bottomLeftCorner(1, n) = cross.transpose();
    out(n, n) = -(m.d - epsilon);
    return 0.5 * (out + out.transpose());
}

namespace {

/// Matrix sign function by scaled Newton iteration. Empty when an iterate is
/// singular (eigenvalues on the imaginary axis).
std::optional<Eigen::MatrixXd> matrix_sign(Eigen::MatrixXd z) {
    const auto n = z.rows();
    for (int it = 0; it < 100; ++it) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(z);
        const double det = lu.determinant();
        if (!std::isfinite(det) || det == 0.0) return std::nullopt;
        const double c = std::pow(std::abs(det), 1.0 / static_cast<double>(n));
        Eigen::MatrixXd next = 0.5 * (z / c + c * lu.inverse());
        if (!next.allFinite()) return std::nullopt;
        const double change = (next - z).norm();
        z = std::move(next);
        if (change <= 1e-12 * z.norm()) break;
    }
    return z;
}

/// Solves [top; bottom] P = -rhs in the least-squares sense and symmetrizes.
Eigen::MatrixXd subspace_solution(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom,
                                  const Eigen::MatrixXd& rhs_top, const Eigen::MatrixXd& rhs_bottom) {
    const auto n = top.cols();
    Eigen::MatrixXd lhs(2 * n, n), rhs(2 * n, n);
    lhs << top, bottom;
    rhs << rhs_top, rhs_bottom;
    Eigen::MatrixXd p = lhs.colPivHouseholderQr().solve(-rhs);
    return 0.5 * (p + p.transpose());
}

struct Candidate {
    Eigen::MatrixXd p;
    double violation = std::numeric_limits<double>::infinity();
};

}  // namespace

StorageFunction derive_storage(const SupplyModel& model, double epsilon) {
    const LinearStateSpace m = as_state_space(model);
    validate(model);
    const auto n = m.a.rows();
    const double r = m.d - epsilon;

    StorageFunction out;
    out.epsilon = epsilon;
    out.center = Eigen::VectorXd::Zero(n);
    if (n == 0) {
        if (r < 0.0) {
            throw Error(Errc::StorageSearchFailed, "feedthrough is below the requested margin");
        }
        out.weight.resize(0, 0);
        out.dissipation_residual = -r;
        return out;
    }
    if (r < 0.0) {
        throw Error(Errc::StorageSearchFailed, "feedthrough D is below the margin epsilon");
    }

    const double scale = std::max(1.0, m.a.norm());
    const double r_eff = std::max(r, 1e-10 * scale);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd g = m.b * m.b.transpose() / r_eff;
    const Eigen::MatrixXd h = m.c.transpose() * m.c / (4.0 * r_eff);

    auto violation_of = [&](const Eigen::MatrixXd& p) {
        const double tol_scale = std::max(1.0, p.norm());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pe(p, Eigen::EigenvaluesOnly);
        const double neg = std::max(0.0, -pe.eigenvalues().minCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> me(dissipation_matrix(m, p, epsilon),
                                                          Eigen::EigenvaluesOnly);
        return std::max(me.eigenvalues().maxCoeff(), neg) / tol_scale;
    };

    // Integrators put Hamiltonian eigenvalues on the imaginary axis; a small
    // leak moves them off so the stable subspace is well defined.
    Candidate best;
    for (double leak : {0.0, 1e-10, 1e-9, 1e-8}) {
        const Eigen::MatrixXd f = m.a - leak * scale * id - m.b * m.c / (2.0 * r_eff);
        Eigen::MatrixXd ham(2 * n, 2 * n);
        ham << f, g, -h, -f.transpose();
        const auto sign = matrix_sign(ham);
        if (!sign) continue;
        const Eigen::MatrixXd s11 = sign->topLeftCorner(n, n), s12 = sign->topRightCorner(n, n);
        const Eigen::MatrixXd s21 = sign->bottomLeftCorner(n, n), s22 = sign->bottomRightCorner(n, n);
        const Eigen::MatrixXd p_stab = subspace_solution(s12, s22 + id, s11 + id, s21);
        const Eigen::MatrixXd p_anti = subspace_solution(s12, s22 - id, s11 - id, s21);
        // The feasible set lies between the extremal solutions. The anti-stabilizing
        // end can be huge (integrators), so also try points close to p_stab and
        // keep the smallest feasible weight.
        const Eigen::MatrixXd span = p_anti - p_stab;
        for (double t : {0.0, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 0.5, 1.0}) {
            const Eigen::MatrixXd p = p_stab + t * span;
            if (!p.allFinite()) continue;
            const double v = violation_of(p);
            const bool feasible = v <= 1e-9;
            const bool best_feasible = best.violation <= 1e-9;
            if ((feasible && (!best_feasible || p.norm() < best.p.norm())) ||
                (!feasible && !best_feasible && v < best.violation)) {
                best = Candidate{p, v};
            }
        }
    }

    if (!(best.violation <= 1e-9)) {
        throw Error(Errc::StorageSearchFailed,
                    "no quadratic storage satisfies the dissipation inequality (violation " +
                        std::to_string(best.violation) + ")");
    }
    out.weight = best.p;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> me(dissipation_matrix(m, best.p, epsilon),
                                                      Eigen::EigenvaluesOnly);
    out.dissipation_residual = me.eigenvalues().maxCoeff();
    return out;
}

}  // namespace gridswitch
