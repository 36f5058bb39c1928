#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lyam/problems.hpp"

namespace lyam {

/// Measured drift next to the second-order Taylor bound
///   dV <= -sum_i eta_i grad_i m_hat_i + (L_s / 2) sum_i eta_i^2 m_hat_i^2.
struct DriftReport {
    double delta_v = 0.0;
    double descent_term = 0.0;
    double quad_term = 0.0;
    double bound = 0.0;
    bool bound_satisfied = true;
};

enum class CriticalPointKind { Minimum, Maximum, Saddle, Degenerate };

std::string_view to_string(CriticalPointKind kind) noexcept;

struct CriticalPointClass {
    CriticalPointKind classification = CriticalPointKind::Degenerate;
    std::vector<double> eigenvalues;  // ascending
};

/// Axis-aligned sampling region.
struct Box {
    Vector lower;
    Vector upper;

    static Box cube(std::size_t dim, double lo, double hi) {
        return {Vector(dim, lo), Vector(dim, hi)};
    }
};

inline constexpr double kDefaultDriftTolerance = 1e-9;
inline constexpr double kDefaultLrMargin = 0.5;

/// L(after) - L(before). Throws NonFiniteValue when either loss is not finite.
double lyapunov_drift(const Problem& problem, std::span<const double> theta_before,
                      std::span<const double> theta_after);

/// Descent and quadratic terms of the drift bound for an update of the form
/// theta' = theta - eta * m_hat. delta_v and bound_satisfied are left at
/// their defaults; see complete_report.
DriftReport drift_bound(std::span<const double> grad, std::span<const double> m_hat,
                        std::span<const double> eta, double smoothness);

/// Same bound for an arbitrary displacement theta' - theta, used when an
/// update is not a pure per-coordinate rescaling (decoupled weight decay).
DriftReport drift_bound_for_displacement(std::span<const double> grad,
                                         std::span<const double> displacement,
                                         double smoothness);

/// Fills delta_v and bound_satisfied = (delta_v <= bound + tol).
DriftReport complete_report(DriftReport partial, double delta_v,
                            double tol = kDefaultDriftTolerance);

/// Sampling lower estimate of the gradient Lipschitz constant over a box.
///
/// With an analytic Hessian this is the largest spectral norm seen at
/// num_samples points. Otherwise each sample contributes the secant ratio
/// ||grad(x) - grad(y)|| / ||x - y|| of a random pair and a few power
/// iterations of finite-difference Hessian-vector products at x. Sample k depends
/// only on (seed, k), so a larger sample contains every smaller one and the
/// estimate never shrinks as num_samples grows.
double estimate_lipschitz(const Problem& problem, std::size_t num_samples, const Box& region,
                          std::uint64_t seed);

/// Per coordinate: eta0 <= margin * 2 (1 + v_i) / L_s.
std::vector<bool> check_lr_bound(double eta0, std::span<const double> v, double smoothness,
                                 double margin = kDefaultLrMargin);

/// True when every coordinate passes check_lr_bound.
bool lr_bound_holds(double eta0, std::span<const double> v, double smoothness,
                    double margin = kDefaultLrMargin);

/// Scale-relative zero threshold 1e-8 (1 + max |lambda|).
double default_eigen_tolerance(std::span<const double> eigenvalues) noexcept;

/// Eigenvalue-sign classification of a symmetric matrix. tol <= 0 selects
/// default_eigen_tolerance. Throws InvalidArgument for non-square or
/// asymmetric input.
CriticalPointClass classify_critical_point(const Matrix& hessian, double tol = 0.0);

}  // namespace lyam
