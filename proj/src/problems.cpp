#include "lyam/problems.hpp"

#include <cmath>
#include <numbers>

#include "lyam/errors.hpp"

namespace lyam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> x) {
    return {x.data(), static_cast<Eigen::Index>(x.size())};
}

Vector to_vector(const Eigen::VectorXd& x) { return Vector(x.data(), x.data() + x.size()); }

void require_dim(std::span<const double> x, std::size_t dim, const std::string& name) {
    if (x.size() != dim) {
        throw InvalidArgument(name + ": point has dimension " + std::to_string(x.size()) +
                              ", expected " + std::to_string(dim));
    }
}

Problem make(const problem::Quadratic& q, std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    if (q.a.rows() != n || q.a.cols() != n) {
        throw InvalidArgument("quadratic matrix must be " + std::to_string(dim) + "x" +
                              std::to_string(dim));
    }
    if ((q.a - q.a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.a.cwiseAbs().maxCoeff())) {
        throw InvalidArgument("quadratic matrix must be symmetric");
    }
    if (!q.b.empty() && q.b.size() != dim) {
        throw InvalidArgument("quadratic linear term has the wrong dimension");
    }
    const Matrix a = q.a;
    const Eigen::VectorXd b =
        q.b.empty() ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(as_eigen(q.b));

    Problem p;
    p.name = "quadratic";
    p.dim = dim;
    p.quadratic = true;
    p.value = [a, b, dim](std::span<const double> x) {
        require_dim(x, dim, "quadratic");
        const auto xe = as_eigen(x);
        return 0.5 * xe.dot(a * xe) - b.dot(xe);
    };
    p.gradient = [a, b, dim](std::span<const double> x) {
        require_dim(x, dim, "quadratic");
        return to_vector(a * as_eigen(x) - b);
    };
    p.hessian = [a](std::span<const double>) { return a; };

    Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
    const auto& lambda = eig.eigenvalues();
    p.smoothness = lambda.cwiseAbs().maxCoeff();
    if (lambda.minCoeff() > 0.0) {
        const Eigen::VectorXd x_star = a.ldlt().solve(b);
        p.optimum = Optimum{to_vector(x_star), -0.5 * b.dot(x_star)};
    }
    return p;
}

Problem make(const problem::Rosenbrock&, std::size_t dim) {
    if (dim < 2) throw InvalidArgument("rosenbrock requires dim >= 2");
    Problem p;
    p.name = "rosenbrock";
    p.dim = dim;
    p.value = [dim](std::span<const double> x) {
        require_dim(x, dim, "rosenbrock");
        double f = 0.0;
        for (std::size_t i = 0; i + 1 < dim; ++i) {
            const double r = x[i + 1] - x[i] * x[i];
            const double s = 1.0 - x[i];
            f += 100.0 * r * r + s * s;
        }
        return f;
    };
    p.gradient = [dim](std::span<const double> x) {
        require_dim(x, dim, "rosenbrock");
        Vector g(dim, 0.0);
        for (std::size_t i = 0; i + 1 < dim; ++i) {
            const double r = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * r - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * r;
        }
        return g;
    };
    p.hessian = [dim](std::span<const double> x) {
        require_dim(x, dim, "rosenbrock");
        const auto n = static_cast<Eigen::Index>(dim);
        Matrix h = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            const double xi = x[i];
            h(i, i) += 1200.0 * xi * xi - 400.0 * x[i + 1] + 2.0;
            h(i + 1, i + 1) += 200.0;
            h(i, i + 1) = -400.0 * xi;
            h(i + 1, i) = -400.0 * xi;
        }
        return h;
    };
    p.optimum = Optimum{Vector(dim, 1.0), 0.0};
    return p;
}

Problem make(const problem::Rastrigin&, std::size_t dim) {
    if (dim < 1) throw InvalidArgument("rastrigin requires dim >= 1");
    Problem p;
    p.name = "rastrigin";
    p.dim = dim;
    p.value = [dim](std::span<const double> x) {
        require_dim(x, dim, "rastrigin");
        double f = 10.0 * static_cast<double>(dim);
        for (double xi : x) f += xi * xi - 10.0 * std::cos(kTwoPi * xi);
        return f;
    };
    p.gradient = [dim](std::span<const double> x) {
        require_dim(x, dim, "rastrigin");
        Vector g(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            g[i] = 2.0 * x[i] + 10.0 * kTwoPi * std::sin(kTwoPi * x[i]);
        }
        return g;
    };
    p.hessian = [dim](std::span<const double> x) {
        require_dim(x, dim, "rastrigin");
        const auto n = static_cast<Eigen::Index>(dim);
        Matrix h = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            h(i, i) = 2.0 + 10.0 * kTwoPi * kTwoPi * std::cos(kTwoPi * x[i]);
        }
        return h;
    };
    p.smoothness = 2.0 + 10.0 * kTwoPi * kTwoPi;
    p.optimum = Optimum{Vector(dim, 0.0), 0.0};
    return p;
}

Problem make(const problem::SaddleXY&, std::size_t dim) {
    if (dim != 2) throw InvalidArgument("saddle_xy requires dim = 2");
    Problem p;
    p.name = "saddle_xy";
    p.dim = 2;
    p.quadratic = true;
    p.value = [](std::span<const double> x) {
        require_dim(x, 2, "saddle_xy");
        return x[0] * x[0] - x[1] * x[1];
    };
    p.gradient = [](std::span<const double> x) {
        require_dim(x, 2, "saddle_xy");
        return Vector{2.0 * x[0], -2.0 * x[1]};
    };
    p.hessian = [](std::span<const double>) {
        Matrix h(2, 2);
        h << 2.0, 0.0, 0.0, -2.0;
        return h;
    };
    p.smoothness = 2.0;
    return p;
}

Problem make(const problem::ScaledSphere& s, std::size_t dim) {
    if (dim < 1) throw InvalidArgument("scaled_sphere requires dim >= 1");
    if (!(s.c >= 0.0) || !std::isfinite(s.c)) {
        throw InvalidArgument("scaled_sphere curvature must be nonnegative");
    }
    const double c = s.c;
    Problem p;
    p.name = "scaled_sphere";
    p.dim = dim;
    p.quadratic = true;
    p.value = [c, dim](std::span<const double> x) {
        require_dim(x, dim, "scaled_sphere");
        double sq = 0.0;
        for (double xi : x) sq += xi * xi;
        return 0.5 * c * sq;
    };
    p.gradient = [c, dim](std::span<const double> x) {
        require_dim(x, dim, "scaled_sphere");
        Vector g(x.begin(), x.end());
        for (double& gi : g) gi *= c;
        return g;
    };
    p.hessian = [c, dim](std::span<const double>) {
        const auto n = static_cast<Eigen::Index>(dim);
        return Matrix(c * Matrix::Identity(n, n));
    };
    p.smoothness = c;
    p.optimum = Optimum{Vector(dim, 0.0), 0.0};
    return p;
}

}  // namespace

Problem make_problem(const ProblemSpec& spec, std::size_t dim) {
    if (dim == 0) throw InvalidArgument("problem dimension must be at least 1");
    return std::visit([dim](const auto& s) { return make(s, dim); }, spec);
}

Matrix random_orthogonal(std::size_t n, Philox& rng) {
    const auto size = static_cast<Eigen::Index>(n);
    Matrix g(size, size);
    for (Eigen::Index j = 0; j < size; ++j) {
        for (Eigen::Index i = 0; i < size; ++i) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < size; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return q;
}

Matrix random_symmetric(std::span<const double> eigenvalues, Philox& rng) {
    const Matrix q = random_orthogonal(eigenvalues.size(), rng);
    const Matrix a = q * as_eigen(eigenvalues).asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
}

void NoiseModel::validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("noise sigma must be nonnegative");
    }
    if (kind == NoiseKind::StudentT && !(dof > 0.0)) {
        throw InvalidArgument("student-t degrees of freedom must be positive");
    }
}

std::string_view to_string(NoiseKind kind) noexcept {
    switch (kind) {
        case NoiseKind::None: return "none";
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::StudentT: return "student_t";
    }
    return "unknown";
}

NoiseKind parse_noise_kind(std::string_view name) {
    if (name == "none") return NoiseKind::None;
    if (name == "gaussian" || name == "normal") return NoiseKind::Gaussian;
    if (name == "student_t" || name == "studentt" || name == "t") return NoiseKind::StudentT;
    throw InvalidArgument("unknown noise kind '" + std::string(name) +
                          "'; valid kinds: none, gaussian, student_t");
}

Vector sample_noise(const NoiseModel& noise, std::size_t dim, Philox& rng) {
    Vector eps(dim, 0.0);
    switch (noise.kind) {
        case NoiseKind::None:
            break;
        case NoiseKind::Gaussian:
            for (double& e : eps) e = noise.sigma * rng.normal();
            break;
        case NoiseKind::StudentT:
            for (double& e : eps) e = noise.sigma * rng.student_t(noise.dof);
            break;
    }
    return eps;
}

void perturb(Vector& grad, const NoiseModel& noise, Philox& rng) {
    if (noise.kind == NoiseKind::None) return;
    const Vector eps = sample_noise(noise, grad.size(), rng);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += eps[i];
}

Vector noisy_grad(const Problem& problem, std::span<const double> theta, const NoiseModel& noise,
                  Philox& rng) {
    Vector g = problem.gradient(theta);
    perturb(g, noise, rng);
    return g;
}

}  // namespace lyam
