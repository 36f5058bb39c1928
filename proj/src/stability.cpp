#include "lyam/stability.hpp"

#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "lyam/errors.hpp"

namespace lyam {

std::string_view to_string(CriticalPointKind kind) noexcept {
    switch (kind) {
        case CriticalPointKind::Minimum: return "minimum";
        case CriticalPointKind::Maximum: return "maximum";
        case CriticalPointKind::Saddle: return "saddle";
        case CriticalPointKind::Degenerate: return "degenerate";
    }
    return "unknown";
}

double lyapunov_drift(const Problem& problem, std::span<const double> theta_before,
                      std::span<const double> theta_after) {
    const double before = problem.value(theta_before);
    if (!std::isfinite(before)) throw NonFiniteValue("non-finite loss before step", 0);
    const double after = problem.value(theta_after);
    if (!std::isfinite(after)) throw NonFiniteValue("non-finite loss after step", 0);
    return after - before;
}

DriftReport drift_bound(std::span<const double> grad, std::span<const double> m_hat,
                        std::span<const double> eta, double smoothness) {
    detail::check_same_dim(grad.size(), m_hat.size(), "m_hat");
    detail::check_same_dim(grad.size(), eta.size(), "eta");
    if (!(smoothness > 0.0)) throw InvalidArgument("smoothness constant must be positive");

    double descent = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double step = eta[i] * m_hat[i];
        descent -= eta[i] * grad[i] * m_hat[i];
        quad += step * step;
    }
    DriftReport r;
    r.descent_term = descent;
    r.quad_term = 0.5 * smoothness * quad;
    r.bound = r.descent_term + r.quad_term;
    return r;
}

DriftReport drift_bound_for_displacement(std::span<const double> grad,
                                         std::span<const double> displacement,
                                         double smoothness) {
    detail::check_same_dim(grad.size(), displacement.size(), "displacement");
    if (!(smoothness > 0.0)) throw InvalidArgument("smoothness constant must be positive");

    double descent = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        descent += grad[i] * displacement[i];
        quad += displacement[i] * displacement[i];
    }
    DriftReport r;
    r.descent_term = descent;
    r.quad_term = 0.5 * smoothness * quad;
    r.bound = r.descent_term + r.quad_term;
    return r;
}

DriftReport complete_report(DriftReport partial, double delta_v, double tol) {
    partial.delta_v = delta_v;
    partial.bound_satisfied = delta_v <= partial.bound + tol;
    return partial;
}

double estimate_lipschitz(const Problem& problem, std::size_t num_samples, const Box& region,
                          std::uint64_t seed) {
    if (num_samples < 2) throw InvalidArgument("estimate_lipschitz needs at least 2 samples");
    detail::check_same_dim(problem.dim, region.lower.size(), "region lower corner");
    detail::check_same_dim(problem.dim, region.upper.size(), "region upper corner");
    for (std::size_t i = 0; i < problem.dim; ++i) {
        if (!(region.upper[i] > region.lower[i])) {
            throw InvalidArgument("sampling region has zero volume along axis " +
                                  std::to_string(i));
        }
    }

    const Philox base = make_stream(seed, StreamPurpose::Lipschitz);
    auto draw_point = [&](Philox& rng) {
        Vector x(problem.dim);
        for (std::size_t i = 0; i < problem.dim; ++i) {
            x[i] = rng.uniform(region.lower[i], region.upper[i]);
        }
        return x;
    };

    double best = 0.0;
    if (problem.has_hessian()) {
        for (std::size_t k = 0; k < num_samples; ++k) {
            Philox rng = base.substream(k);
            const Matrix h = problem.hessian(draw_point(rng));
            Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
            best = std::max(best, eig.eigenvalues().cwiseAbs().maxCoeff());
        }
    } else {
        constexpr int kPowerIterations = 8;
        for (std::size_t k = 0; k < num_samples; ++k) {
            Philox rng = base.substream(k);
            const Vector x = draw_point(rng);
            const Vector y = draw_point(rng);
            const Vector gx = problem.gradient(x);
            const Vector gy = problem.gradient(y);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < problem.dim; ++i) {
                num += (gx[i] - gy[i]) * (gx[i] - gy[i]);
                den += (x[i] - y[i]) * (x[i] - y[i]);
            }
            if (den > 0.0) best = std::max(best, std::sqrt(num / den));

            // Power iteration on central-difference Hessian-vector products at x.
            double scale = 0.0;
            for (double xi : x) scale = std::max(scale, std::abs(xi));
            const double h = 1e-5 * (1.0 + scale);
            Vector dir(problem.dim);
            for (double& d : dir) d = rng.normal();
            Vector xp(problem.dim), xm(problem.dim);
            for (int it = 0; it < kPowerIterations; ++it) {
                double n2 = 0.0;
                for (double d : dir) n2 += d * d;
                const double n = std::sqrt(n2);
                if (!(n > 0.0)) break;
                for (std::size_t i = 0; i < problem.dim; ++i) {
                    dir[i] /= n;
                    xp[i] = x[i] + h * dir[i];
                    xm[i] = x[i] - h * dir[i];
                }
                const Vector gp = problem.gradient(xp);
                const Vector gm = problem.gradient(xm);
                double w2 = 0.0;
                for (std::size_t i = 0; i < problem.dim; ++i) {
                    dir[i] = (gp[i] - gm[i]) / (2.0 * h);
                    w2 += dir[i] * dir[i];
                }
                if (std::isfinite(w2)) best = std::max(best, std::sqrt(w2));
            }
        }
    }
    return best;
}

std::vector<bool> check_lr_bound(double eta0, std::span<const double> v, double smoothness,
                                 double margin) {
    if (!(smoothness > 0.0)) throw InvalidArgument("smoothness constant must be positive");
    if (!(margin > 0.0 && margin <= 1.0)) throw InvalidArgument("margin must lie in (0, 1]");
    std::vector<bool> pass(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        pass[i] = eta0 <= margin * 2.0 * (1.0 + v[i]) / smoothness;
    }
    return pass;
}

bool lr_bound_holds(double eta0, std::span<const double> v, double smoothness, double margin) {
    const auto pass = check_lr_bound(eta0, v, smoothness, margin);
    return std::all_of(pass.begin(), pass.end(), [](bool b) { return b; });
}

double default_eigen_tolerance(std::span<const double> eigenvalues) noexcept {
    double largest = 0.0;
    for (double l : eigenvalues) largest = std::max(largest, std::abs(l));
    return 1e-8 * (1.0 + largest);
}

CriticalPointClass classify_critical_point(const Matrix& hessian, double tol) {
    if (hessian.rows() != hessian.cols() || hessian.rows() == 0) {
        throw InvalidArgument("hessian must be a non-empty square matrix");
    }
    if (!hessian.allFinite()) throw InvalidArgument("hessian has non-finite entries");
    const double scale = 1.0 + hessian.cwiseAbs().maxCoeff();
    if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw InvalidArgument("hessian is not symmetric");
    }

    const Matrix sym = 0.5 * (hessian + hessian.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    CriticalPointClass out;
    out.eigenvalues.assign(eig.eigenvalues().data(),
                           eig.eigenvalues().data() + eig.eigenvalues().size());
    if (!(tol > 0.0)) tol = default_eigen_tolerance(out.eigenvalues);

    const bool any_pos =
        std::any_of(out.eigenvalues.begin(), out.eigenvalues.end(), [&](double l) { return l > tol; });
    const bool any_neg = std::any_of(out.eigenvalues.begin(), out.eigenvalues.end(),
                                     [&](double l) { return l < -tol; });
    const bool all_pos =
        std::all_of(out.eigenvalues.begin(), out.eigenvalues.end(), [&](double l) { return l > tol; });
    const bool all_neg = std::all_of(out.eigenvalues.begin(), out.eigenvalues.end(),
                                     [&](double l) { return l < -tol; });

    if (all_pos) {
        out.classification = CriticalPointKind::Minimum;
    } else if (all_neg) {
        out.classification = CriticalPointKind::Maximum;
    } else if (any_pos && any_neg) {
        out.classification = CriticalPointKind::Saddle;
    } else {
        out.classification = CriticalPointKind::Degenerate;
    }
    return out;
}

}  // namespace lyam
