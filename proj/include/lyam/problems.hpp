#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "lyam/optim.hpp"
#include "lyam/random.hpp"

namespace lyam {

using Matrix = Eigen::MatrixXd;

struct Optimum {
    Vector location;
    double value = 0.0;
};

/// A differentiable loss oracle. Immutable once built; the function objects
/// capture their data by value so copies are safe to share across threads.
struct Problem {
    std::string name;
    std::size_t dim = 0;
    std::function<double(std::span<const double>)> value;
    std::function<Vector(std::span<const double>)> gradient;
    std::function<Matrix(std::span<const double>)> hessian;  // empty when unavailable
    /// Optional fused evaluation for losses where value and gradient share work.
    std::function<std::pair<double, Vector>(std::span<const double>)> value_and_gradient;
    std::optional<Optimum> optimum;
    /// Global Lipschitz constant of the gradient when known in closed form.
    std::optional<double> smoothness;
    /// True for exactly quadratic losses, where the Taylor drift bound is tight.
    bool quadratic = false;

    bool has_hessian() const noexcept { return static_cast<bool>(hessian); }

    std::pair<double, Vector> evaluate(std::span<const double> theta) const {
        if (value_and_gradient) return value_and_gradient(theta);
        return {value(theta), gradient(theta)};
    }
};

namespace problem {

/// L(theta) = 1/2 theta^T A theta - b^T theta with symmetric A.
struct Quadratic {
    Matrix a;
    Vector b;  // empty means zero
};
/// Sum of 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2.
struct Rosenbrock {};
/// 10 n + sum(x_i^2 - 10 cos(2 pi x_i)).
struct Rastrigin {};
/// x^2 - y^2.
struct SaddleXY {};
/// c/2 * ||theta||^2.
struct ScaledSphere {
    double c = 1.0;
};

}  // namespace problem

using ProblemSpec = std::variant<problem::Quadratic, problem::Rosenbrock, problem::Rastrigin,
                                 problem::SaddleXY, problem::ScaledSphere>;

/// Builds a problem with exact analytic gradient and, where available, Hessian.
/// Throws InvalidArgument for incompatible dimensions.
Problem make_problem(const ProblemSpec& spec, std::size_t dim);

/// Symmetric matrix Q^T diag(eigenvalues) Q with a random orthogonal Q drawn
/// from the given stream.
Matrix random_symmetric(std::span<const double> eigenvalues, Philox& rng);
/// Haar-distributed orthogonal matrix.
Matrix random_orthogonal(std::size_t n, Philox& rng);

enum class NoiseKind { None, Gaussian, StudentT };

struct NoiseModel {
    NoiseKind kind = NoiseKind::None;
    double sigma = 0.0;
    double dof = 3.0;

    void validate() const;
};

std::string_view to_string(NoiseKind kind) noexcept;
NoiseKind parse_noise_kind(std::string_view name);

/// Draws one perturbation vector of the given dimension.
Vector sample_noise(const NoiseModel& noise, std::size_t dim, Philox& rng);

/// grad(theta) + eps, eps drawn from the noise model via the given stream.
Vector noisy_grad(const Problem& problem, std::span<const double> theta, const NoiseModel& noise,
                  Philox& rng);

/// Adds a noise draw to an already computed gradient in place.
void perturb(Vector& grad, const NoiseModel& noise, Philox& rng);

}  // namespace lyam
