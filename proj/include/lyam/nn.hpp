#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "lyam/optim.hpp"
#include "lyam/problems.hpp"

namespace lyam::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { ReLU, Tanh };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct MlpSpec {
    std::vector<std::size_t> layer_sizes;  // input, hidden..., classes
    Activation activation = Activation::Tanh;
    std::uint64_t init_seed = 0;
    double init_scale = 1.0;

    void validate() const;
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t num_classes() const { return layer_sizes.back(); }
    std::size_t num_layers() const { return layer_sizes.size() - 1; }
    /// Total number of weights and biases.
    std::size_t param_count() const;
};

struct Dataset {
    RowMatrix features;        // n x dim
    std::vector<int> labels;   // in [0, num_classes)
    std::vector<bool> poison_mask;
    std::size_t num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }
    std::size_t poisoned_count() const;
    /// Rows in the given order; used for minibatches and shuffles.
    Dataset subset(std::span<const std::size_t> rows) const;
};

/// Fully connected classifier over a flat parameter vector.
///
/// Layout is layer-major; within a layer the out x in weight matrix comes
/// first in row-major order, followed by the out biases. Optimizers update
/// params() directly.
class Mlp {
public:
    /// Initializes weights uniform in +-init_scale / sqrt(fan_in), biases zero.
    explicit Mlp(MlpSpec spec);
    Mlp(MlpSpec spec, Vector params);

    const MlpSpec& spec() const noexcept { return spec_; }
    const Vector& params() const noexcept { return params_; }
    Vector& params() noexcept { return params_; }
    void set_params(Vector params);

    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const;

    Eigen::Map<const RowMatrix> weights(std::size_t layer) const;
    Eigen::Map<const Eigen::VectorXd> biases(std::size_t layer) const;
    Eigen::Map<RowMatrix> weights(std::size_t layer);
    Eigen::Map<Eigen::VectorXd> biases(std::size_t layer);

private:
    MlpSpec spec_;
    Vector params_;
    std::vector<std::size_t> offsets_;
};

/// Pre-activations and activations of every layer, kept for backpropagation.
struct ForwardCache {
    std::vector<RowMatrix> activations;     // activations[0] is the input batch
    std::vector<RowMatrix> preactivations;  // one per layer; the last is the logits
};

struct ForwardResult {
    RowMatrix logits;
    ForwardCache cache;
};

struct LossAndGrad {
    double loss = 0.0;
    Vector grad;
};

ForwardResult forward(const Mlp& model, const RowMatrix& batch);

/// Mean softmax cross-entropy over the batch and its gradient with respect to
/// the flat parameter vector.
LossAndGrad loss_and_grad(const Mlp& model, const RowMatrix& features,
                          std::span<const int> labels);
inline LossAndGrad loss_and_grad(const Mlp& model, const Dataset& data) {
    return loss_and_grad(model, data.features, data.labels);
}

double loss(const Mlp& model, const RowMatrix& features, std::span<const int> labels);

struct Evaluation {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

/// Argmax accuracy (ties go to the lowest class index) and mean loss.
Evaluation evaluate(const Mlp& model, const Dataset& data);

/// Wraps full-batch training loss as a Problem over the flat parameters.
Problem as_problem(const MlpSpec& spec, const Dataset& data);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    bool passed = false;
};

/// Central finite differences of the loss against the analytic gradient.
/// Relative error per coordinate is |a - n| / max(|a|, |n|, floor).
GradCheckResult gradient_check(const Mlp& model, const RowMatrix& features,
                               std::span<const int> labels, double step = 1e-5,
                               double tol = 1e-4, double floor = 1e-7,
                               std::span<const double> analytic_override = {});

// --- datasets ---------------------------------------------------------------

struct TwoSpirals {};
struct GaussianBlobs {
    std::size_t classes = 2;
    double radius = 2.0;  // centroids evenly spaced on this circle
};
using DatasetKind = std::variant<TwoSpirals, GaussianBlobs>;

/// Both generators emit planar points.
inline constexpr std::size_t kFeatureDim = 2;
std::size_t num_classes(const DatasetKind& kind) noexcept;

/// Deterministic in the seed. Labels are assigned round-robin, so classes are
/// balanced within one sample.
Dataset generate_dataset(const DatasetKind& kind, std::size_t n, double noise_sd,
                         std::uint64_t seed, std::uint64_t stream = 0);

enum class PoisonMode { LabelFlip, FeatureReplace };

std::string_view to_string(PoisonMode mode) noexcept;
PoisonMode parse_poison_mode(std::string_view name);

/// Corrupts floor(fraction * n) distinct samples. LabelFlip assigns a
/// uniformly random wrong label; FeatureReplace draws features uniformly in
/// the data's bounding box and keeps labels.
Dataset poison(const Dataset& data, double fraction, PoisonMode mode, std::uint64_t seed);

// --- checkpoints ------------------------------------------------------------

/// Binary layout (little-endian):
///   char[8] "LYAMMLP1", u32 layer count, u64 sizes..., u32 activation,
///   u64 init_seed, f64 init_scale, u64 param count, f64 params...
void save_checkpoint(const Mlp& model, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);

}  // namespace lyam::nn
