#include "lyam/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>

#include "lyam/errors.hpp"

namespace lyam::nn {

std::string_view to_string(Activation a) noexcept {
    return a == Activation::ReLU ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu" || name == "ReLU") return Activation::ReLU;
    if (name == "tanh" || name == "Tanh") return Activation::Tanh;
    throw InvalidArgument("unknown activation '" + std::string(name) + "'; valid: relu, tanh");
}

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2) throw InvalidArgument("an MLP needs at least two layer sizes");
    for (std::size_t s : layer_sizes) {
        if (s == 0) throw InvalidArgument("layer sizes must be positive");
    }
    if (layer_sizes.back() < 2) throw InvalidArgument("an MLP classifier needs at least 2 classes");
    if (!(init_scale > 0.0)) throw InvalidArgument("init_scale must be positive");
}

std::size_t MlpSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        n += layer_sizes[l + 1] * (layer_sizes[l] + 1);
    }
    return n;
}

std::size_t Dataset::poisoned_count() const {
    return static_cast<std::size_t>(std::count(poison_mask.begin(), poison_mask.end(), true));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.num_classes = num_classes;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.resize(rows.size());
    out.poison_mask.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.features.row(static_cast<Eigen::Index>(r)) =
            features.row(static_cast<Eigen::Index>(rows[r]));
        out.labels[r] = labels[rows[r]];
        out.poison_mask[r] = poison_mask[rows[r]];
    }
    return out;
}

namespace {

std::vector<std::size_t> layer_offsets(const MlpSpec& spec) {
    std::vector<std::size_t> offsets;
    std::size_t at = 0;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        offsets.push_back(at);
        at += spec.layer_sizes[l + 1] * (spec.layer_sizes[l] + 1);
    }
    return offsets;
}

}  // namespace

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    offsets_ = layer_offsets(spec_);
    params_.assign(spec_.param_count(), 0.0);
    Philox rng = make_stream(spec_.init_seed, StreamPurpose::Init);
    for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
        const double bound =
            spec_.init_scale / std::sqrt(static_cast<double>(spec_.layer_sizes[l]));
        auto w = weights(l);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
        }
    }
}

Mlp::Mlp(MlpSpec spec, Vector params) : spec_(std::move(spec)) {
    spec_.validate();
    offsets_ = layer_offsets(spec_);
    set_params(std::move(params));
}

void Mlp::set_params(Vector params) {
    if (params.size() != spec_.param_count()) {
        throw InvalidArgument("parameter vector has " + std::to_string(params.size()) +
                              " entries, model expects " + std::to_string(spec_.param_count()));
    }
    params_ = std::move(params);
}

std::size_t Mlp::bias_offset(std::size_t layer) const {
    return offsets_[layer] + spec_.layer_sizes[layer + 1] * spec_.layer_sizes[layer];
}

Eigen::Map<const RowMatrix> Mlp::weights(std::size_t layer) const {
    return {params_.data() + offsets_[layer], static_cast<Eigen::Index>(spec_.layer_sizes[layer + 1]),
            static_cast<Eigen::Index>(spec_.layer_sizes[layer])};
}

Eigen::Map<const Eigen::VectorXd> Mlp::biases(std::size_t layer) const {
    return {params_.data() + bias_offset(layer),
            static_cast<Eigen::Index>(spec_.layer_sizes[layer + 1])};
}

Eigen::Map<RowMatrix> Mlp::weights(std::size_t layer) {
    return {params_.data() + offsets_[layer], static_cast<Eigen::Index>(spec_.layer_sizes[layer + 1]),
            static_cast<Eigen::Index>(spec_.layer_sizes[layer])};
}

Eigen::Map<Eigen::VectorXd> Mlp::biases(std::size_t layer) {
    return {params_.data() + bias_offset(layer),
            static_cast<Eigen::Index>(spec_.layer_sizes[layer + 1])};
}

namespace {

RowMatrix activate(const RowMatrix& z, Activation a) {
    if (a == Activation::ReLU) return z.cwiseMax(0.0);
    return z.array().tanh().matrix();
}

void check_batch(const Mlp& model, const RowMatrix& features, std::size_t n_labels) {
    if (features.rows() == 0) throw InvalidArgument("batch is empty");
    if (static_cast<std::size_t>(features.cols()) != model.spec().input_dim()) {
        throw InvalidArgument("batch has " + std::to_string(features.cols()) +
                              " features, model expects " +
                              std::to_string(model.spec().input_dim()));
    }
    if (n_labels != static_cast<std::size_t>(features.rows())) {
        throw InvalidArgument("label count does not match batch size");
    }
}

// Row-wise log-sum-exp with max subtraction.
Eigen::VectorXd log_sum_exp(const RowMatrix& logits) {
    Eigen::VectorXd out(logits.rows());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        out(r) = mx + std::log((logits.row(r).array() - mx).exp().sum());
    }
    return out;
}

double mean_cross_entropy(const RowMatrix& logits, std::span<const int> labels,
                          const Eigen::VectorXd& lse) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) total += lse(r) - logits(r, labels[r]);
    return total / static_cast<double>(logits.rows());
}

void check_labels(std::span<const int> labels, std::size_t classes) {
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw InvalidArgument("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(classes) + ")");
        }
    }
}

}  // namespace

ForwardResult forward(const Mlp& model, const RowMatrix& batch) {
    if (static_cast<std::size_t>(batch.cols()) != model.spec().input_dim()) {
        throw InvalidArgument("batch feature dimension does not match the model");
    }
    ForwardResult out;
    out.cache.activations.push_back(batch);
    const std::size_t layers = model.spec().num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        RowMatrix z = out.cache.activations.back() * model.weights(l).transpose();
        z.rowwise() += model.biases(l).transpose();
        if (l + 1 < layers) out.cache.activations.push_back(activate(z, model.spec().activation));
        out.cache.preactivations.push_back(std::move(z));
    }
    out.logits = out.cache.preactivations.back();
    return out;
}

double loss(const Mlp& model, const RowMatrix& features, std::span<const int> labels) {
    check_batch(model, features, labels.size());
    check_labels(labels, model.spec().num_classes());
    const auto fwd = forward(model, features);
    return mean_cross_entropy(fwd.logits, labels, log_sum_exp(fwd.logits));
}

LossAndGrad loss_and_grad(const Mlp& model, const RowMatrix& features,
                          std::span<const int> labels) {
    check_batch(model, features, labels.size());
    check_labels(labels, model.spec().num_classes());
    const auto fwd = forward(model, features);
    const Eigen::VectorXd lse = log_sum_exp(fwd.logits);
    const auto n = static_cast<double>(features.rows());

    LossAndGrad out;
    out.loss = mean_cross_entropy(fwd.logits, labels, lse);
    out.grad.assign(model.spec().param_count(), 0.0);

    // dL/dlogits = (softmax - onehot) / n
    RowMatrix delta = (fwd.logits.colwise() - lse).array().exp().matrix();
    for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, labels[r]) -= 1.0;
    delta /= n;

    const auto activation = model.spec().activation;
    for (std::size_t l = model.spec().num_layers(); l-- > 0;) {
        const RowMatrix& input = fwd.cache.activations[l];
        Eigen::Map<RowMatrix> dw(out.grad.data() + model.weight_offset(l), delta.cols(),
                                 input.cols());
        Eigen::Map<Eigen::VectorXd> db(out.grad.data() + model.bias_offset(l), delta.cols());
        dw.noalias() = delta.transpose() * input;
        db = delta.colwise().sum().transpose();
        if (l == 0) break;

        RowMatrix upstream = delta * model.weights(l);
        if (activation == Activation::ReLU) {
            const RowMatrix& z = fwd.cache.preactivations[l - 1];
            delta = (z.array() > 0.0).select(upstream.array(), 0.0).matrix();
        } else {
            const RowMatrix& a = input;
            delta = upstream.array() * (1.0 - a.array().square());
        }
    }
    return out;
}

Evaluation evaluate(const Mlp& model, const Dataset& data) {
    if (data.size() == 0) throw InvalidArgument("cannot evaluate on an empty dataset");
    check_batch(model, data.features, data.labels.size());
    check_labels(data.labels, model.spec().num_classes());
    const auto fwd = forward(model, data.features);
    const Eigen::VectorXd lse = log_sum_exp(fwd.logits);

    std::size_t correct = 0;
    for (Eigen::Index r = 0; r < fwd.logits.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < fwd.logits.cols(); ++c) {
            if (fwd.logits(r, c) > fwd.logits(r, best)) best = c;
        }
        if (best == data.labels[static_cast<std::size_t>(r)]) ++correct;
    }
    Evaluation e;
    e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    e.mean_loss = mean_cross_entropy(fwd.logits, data.labels, lse);
    return e;
}

Problem as_problem(const MlpSpec& spec, const Dataset& data) {
    spec.validate();
    auto shared = std::make_shared<const Dataset>(data);
    Problem p;
    p.name = "mlp";
    p.dim = spec.param_count();
    p.value = [spec, shared](std::span<const double> theta) {
        const Mlp model(spec, Vector(theta.begin(), theta.end()));
        return loss(model, shared->features, shared->labels);
    };
    p.gradient = [spec, shared](std::span<const double> theta) {
        const Mlp model(spec, Vector(theta.begin(), theta.end()));
        return loss_and_grad(model, shared->features, shared->labels).grad;
    };
    p.value_and_gradient = [spec, shared](std::span<const double> theta) {
        const Mlp model(spec, Vector(theta.begin(), theta.end()));
        auto lg = loss_and_grad(model, shared->features, shared->labels);
        return std::pair<double, Vector>{lg.loss, std::move(lg.grad)};
    };
    return p;
}

GradCheckResult gradient_check(const Mlp& model, const RowMatrix& features,
                               std::span<const int> labels, double step, double tol,
                               double floor, std::span<const double> analytic_override) {
    Vector analytic = analytic_override.empty()
                          ? loss_and_grad(model, features, labels).grad
                          : Vector(analytic_override.begin(), analytic_override.end());
    if (analytic.size() != model.params().size()) {
        throw InvalidArgument("analytic gradient has the wrong dimension");
    }
    Mlp probe = model;
    GradCheckResult result;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double original = probe.params()[i];
        probe.params()[i] = original + step;
        const double up = loss(probe, features, labels);
        probe.params()[i] = original - step;
        const double down = loss(probe, features, labels);
        probe.params()[i] = original;

        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > result.max_rel_error || i == 0) {
            result.max_rel_error = rel;
            result.worst_index = i;
            result.analytic = analytic[i];
            result.numeric = numeric;
        }
    }
    result.passed = result.max_rel_error < tol;
    return result;
}

std::size_t num_classes(const DatasetKind& kind) noexcept {
    if (const auto* b = std::get_if<GaussianBlobs>(&kind)) return b->classes;
    return 2;
}

Dataset generate_dataset(const DatasetKind& kind, std::size_t n, double noise_sd,
                         std::uint64_t seed, std::uint64_t stream) {
    if (n < 10) throw InvalidArgument("datasets need at least 10 samples");
    if (!(noise_sd >= 0.0)) throw InvalidArgument("noise_sd must be nonnegative");

    Philox rng = make_stream(seed, StreamPurpose::Data).substream(stream);
    Dataset data;
    data.features.resize(static_cast<Eigen::Index>(n), 2);
    data.labels.resize(n);
    data.poison_mask.assign(n, false);

    if (const auto* blobs = std::get_if<GaussianBlobs>(&kind)) {
        if (blobs->classes < 2 || blobs->classes > n) {
            throw InvalidArgument("gaussian blobs need between 2 and n classes");
        }
        data.num_classes = blobs->classes;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = i % blobs->classes;
            const double angle =
                2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(blobs->classes);
            const auto r = static_cast<Eigen::Index>(i);
            data.features(r, 0) = blobs->radius * std::cos(angle) + noise_sd * rng.normal();
            data.features(r, 1) = blobs->radius * std::sin(angle) + noise_sd * rng.normal();
            data.labels[i] = static_cast<int>(c);
        }
    } else {
        data.num_classes = 2;
        const std::size_t per_class = (n + 1) / 2;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = i % 2;
            const double s = (static_cast<double>(i / 2) + 0.5) / static_cast<double>(per_class);
            const double angle = 3.0 * std::numbers::pi * s + std::numbers::pi * static_cast<double>(c);
            const double radius = 0.2 + 1.8 * s;
            const auto r = static_cast<Eigen::Index>(i);
            data.features(r, 0) = radius * std::cos(angle) + noise_sd * rng.normal();
            data.features(r, 1) = radius * std::sin(angle) + noise_sd * rng.normal();
            data.labels[i] = static_cast<int>(c);
        }
    }
    return data;
}

std::string_view to_string(PoisonMode mode) noexcept {
    return mode == PoisonMode::LabelFlip ? "label_flip" : "feature_replace";
}

PoisonMode parse_poison_mode(std::string_view name) {
    if (name == "label_flip" || name == "labelflip") return PoisonMode::LabelFlip;
    if (name == "feature_replace" || name == "featurereplace") return PoisonMode::FeatureReplace;
    throw InvalidArgument("unknown poison mode '" + std::string(name) +
                          "'; valid: label_flip, feature_replace");
}

Dataset poison(const Dataset& data, double fraction, PoisonMode mode, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw InvalidArgument("poison fraction must lie in [0, 1]");
    }
    Dataset out = data;
    if (out.poison_mask.size() != out.size()) out.poison_mask.assign(out.size(), false);
    const std::size_t n = data.size();
    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    if (count == 0) return out;

    Philox rng = make_stream(seed, StreamPurpose::Poison);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(order[i], order[j]);
    }

    const Eigen::VectorXd lo = data.features.colwise().minCoeff().transpose();
    const Eigen::VectorXd hi = data.features.colwise().maxCoeff().transpose();
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = order[k];
        out.poison_mask[i] = true;
        if (mode == PoisonMode::LabelFlip) {
            const auto shift = 1 + rng.uniform_index(data.num_classes - 1);
            out.labels[i] = static_cast<int>((static_cast<std::size_t>(data.labels[i]) + shift) %
                                             data.num_classes);
        } else {
            for (Eigen::Index c = 0; c < out.features.cols(); ++c) {
                out.features(static_cast<Eigen::Index>(i), c) = rng.uniform(lo(c), hi(c));
            }
        }
    }
    return out;
}

namespace {

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw InvalidArgument("checkpoint is truncated");
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

constexpr char kMagic[8] = {'L', 'Y', 'A', 'M', 'M', 'L', 'P', '1'};

}  // namespace

void save_checkpoint(const Mlp& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw InvalidArgument("cannot open checkpoint for writing: " + path.string());
    os.write(kMagic, sizeof(kMagic));
    const auto& spec = model.spec();
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(spec.layer_sizes.size()));
    for (std::size_t s : spec.layer_sizes) write_le<std::uint64_t>(os, s);
    write_le<std::uint32_t>(os, spec.activation == Activation::ReLU ? 0u : 1u);
    write_le<std::uint64_t>(os, spec.init_seed);
    write_le<double>(os, spec.init_scale);
    write_le<std::uint64_t>(os, model.params().size());
    for (double p : model.params()) write_le<double>(os, p);
    if (!os) throw InvalidArgument("failed writing checkpoint: " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot open checkpoint: " + path.string());
    char magic[8];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw InvalidArgument("not an MLP checkpoint: " + path.string());
    }
    MlpSpec spec;
    const auto layers = read_le<std::uint32_t>(is);
    if (layers < 2 || layers > 1024) throw InvalidArgument("checkpoint has a bad layer count");
    for (std::uint32_t i = 0; i < layers; ++i) {
        spec.layer_sizes.push_back(static_cast<std::size_t>(read_le<std::uint64_t>(is)));
    }
    const auto act = read_le<std::uint32_t>(is);
    if (act > 1) throw InvalidArgument("checkpoint has an unknown activation");
    spec.activation = act == 0 ? Activation::ReLU : Activation::Tanh;
    spec.init_seed = read_le<std::uint64_t>(is);
    spec.init_scale = read_le<double>(is);
    spec.validate();
    const auto count = read_le<std::uint64_t>(is);
    if (count != spec.param_count()) {
        throw InvalidArgument("checkpoint parameter count does not match its layer sizes");
    }
    Vector params(count);
    for (double& p : params) p = read_le<double>(is);
    return Mlp(std::move(spec), std::move(params));
}

}  // namespace lyam::nn
