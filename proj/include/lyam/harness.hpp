#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lyam/nn.hpp"
#include "lyam/optim.hpp"
#include "lyam/problems.hpp"

namespace lyam {

/// Minimize an analytic test function from a fixed or randomly drawn start.
struct AnalyticTask {
    ProblemSpec problem = problem::ScaledSphere{};
    std::size_t dim = 2;
    Vector initial;  // empty: uniform in [init_low, init_high] per coordinate
    double init_low = -2.0;
    double init_high = 2.0;
};

/// Train an MLP classifier on a synthetic dataset.
struct NetworkTask {
    nn::DatasetKind dataset = nn::GaussianBlobs{};
    std::vector<std::size_t> hidden = {16};
    nn::Activation activation = nn::Activation::Tanh;
    double init_scale = 1.0;
    std::size_t n_train = 400;
    std::size_t n_val = 400;
    double data_noise = 0.5;
    std::size_t batch_size = 0;  // 0: full batch
    double poison_fraction = 0.0;
    nn::PoisonMode poison_mode = nn::PoisonMode::FeatureReplace;
    std::size_t eval_every = 10;
};

using Task = std::variant<AnalyticTask, NetworkTask>;

/// Architecture a network task trains for the given seed.
nn::MlpSpec network_spec(const NetworkTask& task, std::uint64_t seed);

enum class LipschitzSource { Auto, Analytic, Estimated };

struct RunConfig {
    Task task = AnalyticTask{};
    OptimizerKind optimizer = OptimizerKind::LyAm;
    HyperParams hyper;
    NoiseModel noise;
    std::size_t max_steps = 1000;
    std::vector<std::uint64_t> seeds = {0};
    bool record_drift = true;
    LipschitzSource lipschitz = LipschitzSource::Auto;
    std::size_t lipschitz_samples = 64;
    double drift_tolerance = 1e-9;
    double lr_margin = 0.5;
    /// A loss above this (or a non-finite one) ends the trajectory as diverged.
    double divergence_threshold = 1e12;
    std::optional<double> target_loss;
    double target_accuracy = 0.9;
    /// Worker threads for independent trials; 0 picks the hardware count.
    std::size_t threads = 0;

    void validate() const;
    bool is_network() const noexcept { return std::holds_alternative<NetworkTask>(task); }
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StepRecord {
    std::size_t step = 0;
    double loss = 0.0;       // L(theta_t) after this step's update
    double grad_norm = 0.0;  // ||grad L(theta_{t-1})||, the true gradient the step saw
    double mean_eta = 0.0;
    double min_eta = 0.0;
    double max_eta = 0.0;
    double delta_v = 0.0;
    double drift_bound = kNaN;  // NaN when drift is not recorded
    bool bound_ok = true;
    bool lr_bound_ok = true;
    double val_loss = kNaN;  // network tasks, at evaluation steps only
    double val_accuracy = kNaN;
};

struct TrajectorySummary {
    std::uint64_t seed = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double best_loss = 0.0;
    std::optional<std::size_t> steps_to_threshold;
    std::optional<double> train_accuracy;
    std::optional<double> val_accuracy;
    std::optional<double> val_loss;
    std::optional<double> smoothness;  // L_s used for drift bounds
    bool diverged = false;
    std::string divergence_reason;
    double wall_seconds = 0.0;
};

struct Trajectory {
    std::vector<StepRecord> steps;
    TrajectorySummary summary;
    Vector final_params;
};

/// One seed of a run. Depends only on (config, seed).
Trajectory run_trial(const RunConfig& config, std::uint64_t seed);

/// All seeds of a run, executed on up to config.threads workers.
std::vector<Trajectory> run(const RunConfig& config);

struct MetricStats {
    double mean = kNaN;
    double sd = kNaN;  // sample standard deviation; 0 for a single value
    double min = kNaN;
    double max = kNaN;
    std::size_t count = 0;
};

MetricStats describe(std::span<const double> values);

struct AggregateSummary {
    std::size_t trajectories = 0;
    std::size_t diverged = 0;
    MetricStats final_loss;
    MetricStats best_loss;
    MetricStats steps_to_threshold;  // over trajectories that reached it
    MetricStats train_accuracy;
    MetricStats val_accuracy;
    MetricStats val_loss;
    double fraction_nonpositive_drift = kNaN;
    double fraction_bound_satisfied = kNaN;  // over steps with a recorded bound
    std::size_t total_steps = 0;
    std::size_t bound_steps = 0;
};

AggregateSummary aggregate(std::span<const Trajectory> trajectories);

struct AblationGrid {
    std::vector<double> beta1 = {0.1, 0.5, 0.9};
    std::vector<double> beta2 = {0.01, 0.49, 0.99};
    std::vector<double> eta0 = {0.0001, 0.003};

    std::size_t size() const noexcept { return beta1.size() * beta2.size() * eta0.size(); }
    void validate() const;
};

/// Setup A..R for combinations of the reference grid (eta0 outermost, then
/// beta1, then beta2), "custom" otherwise.
std::string setup_label(double beta1, double beta2, double eta0);

struct AblationRow {
    std::string label;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double eta0 = 0.0;
    AggregateSummary benign;
    AggregateSummary poisoned;
    std::string error;  // non-empty when the cell failed
};

/// Benign and poisoned runs of every grid combination, rows in reference
/// order. The benign condition drops data poisoning and gradient noise; the
/// poisoned one keeps the base config's (10% feature replacement for network
/// tasks and unit Gaussian gradient noise for analytic tasks when the base
/// config specifies none). A failing cell carries its error and never aborts
/// the grid.
std::vector<AblationRow> ablation_grid(const RunConfig& base, const AblationGrid& grid);

/// Condition configs used by ablation_grid; exposed for tests and the CLI.
RunConfig benign_condition(const RunConfig& base);
RunConfig poisoned_condition(const RunConfig& base);

}  // namespace lyam
