#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lyam {

using Vector = std::vector<double>;

struct HyperParams {
    double eta0 = 0.003;
    double beta1 = 0.9;
    double beta2 = 0.99;
    // Baselines only. LyAm's denominator 1 + v_hat never needs an epsilon.
    double weight_decay = 0.01;
    double epsilon = 1e-8;
    // Adan's gradient-difference decay.
    double beta3 = 0.92;

    /// Throws InvalidArgument unless eta0 > 0, 0 <= beta < 1, epsilon > 0
    /// and weight_decay >= 0.
    void validate() const;
};

/// Powers beta^t maintained by repeated multiplication alongside the step
/// counter. Rebuilt from scratch whenever the step or decay rates they were
/// computed for no longer match the state.
struct DecayPowers {
    std::uint64_t t = 0;
    double beta1 = 0.0, beta2 = 0.0, beta3 = 0.0;
    double beta1_t = 1.0, beta2_t = 1.0, beta3_t = 1.0;
};

struct MomentState {
    Vector m;
    Vector v;
    std::uint64_t t = 0;
    DecayPowers powers;
    // Optimizer-specific slots (Adan keeps its gradient-difference moment and
    // the previous gradient here). Empty for everything else.
    Vector diff;
    Vector prev_grad;

    std::size_t dim() const noexcept { return m.size(); }
};

struct StepOutput {
    Vector new_params;
    MomentState new_state;
    /// Per-coordinate effective rate applied to m_hat.
    Vector eta;
    /// Update direction the rate multiplies (bias-corrected first moment for
    /// the Adam family, the raw gradient for SGD and AdaGrad).
    Vector m_hat;
    Vector v_hat;
    /// Multiplicative factor on the old parameters from decoupled weight
    /// decay, so new_params = decay_factor * params - eta * m_hat. Equal to 1
    /// for every optimizer without decoupled decay.
    double decay_factor = 1.0;
};

struct BiasCorrected {
    Vector m_hat;
    Vector v_hat;
};

enum class OptimizerKind { LyAm, SGD, AdaGrad, Adam, AdamW, AdaBelief, Adan };

std::string_view to_string(OptimizerKind kind) noexcept;
/// Case-insensitive. Throws InvalidArgument listing the valid names.
OptimizerKind parse_optimizer_kind(std::string_view name);
const std::vector<OptimizerKind>& all_optimizer_kinds();
/// The six optimizers compared in benchmark tables (everything except SGD).
const std::vector<OptimizerKind>& benchmark_optimizer_kinds();

MomentState init_state(std::size_t dim);

/// m' = beta1 m + (1 - beta1) g, v' = beta2 v + (1 - beta2) g^2, t' = t + 1.
MomentState update_moments(const MomentState& state, std::span<const double> grad,
                           const HyperParams& hyper);

/// m / (1 - beta1^t), v / (1 - beta2^t). Requires t >= 1.
BiasCorrected bias_correct(const MomentState& state, const HyperParams& hyper);

/// eta_i = eta0 / (1 + v_hat_i).
Vector adaptive_lr(std::span<const double> v_hat, double eta0);

/// One LyAm update: moments, bias correction, adaptive rate, then
/// theta' = theta - eta * m_hat.
StepOutput lyam_step(std::span<const double> params, const MomentState& state,
                     std::span<const double> grad, const HyperParams& hyper);

/// One update of a comparison optimizer using its standard published rule.
/// OptimizerKind::LyAm forwards to lyam_step.
StepOutput baseline_step(OptimizerKind kind, std::span<const double> params,
                         const MomentState& state, std::span<const double> grad,
                         const HyperParams& hyper);

inline StepOutput optimizer_step(OptimizerKind kind, std::span<const double> params,
                                 const MomentState& state, std::span<const double> grad,
                                 const HyperParams& hyper) {
    return kind == OptimizerKind::LyAm ? lyam_step(params, state, grad, hyper)
                                       : baseline_step(kind, params, state, grad, hyper);
}

/// Stateful convenience wrapper that owns parameters and moments.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, HyperParams hyper, Vector initial_params);

    /// Applies one update with the given gradient and returns its telemetry.
    const StepOutput& step(std::span<const double> grad);

    OptimizerKind kind() const noexcept { return kind_; }
    const HyperParams& hyper() const noexcept { return hyper_; }
    const Vector& params() const noexcept { return params_; }
    const MomentState& state() const noexcept { return state_; }
    std::uint64_t step_count() const noexcept { return state_.t; }

private:
    OptimizerKind kind_;
    HyperParams hyper_;
    Vector params_;
    MomentState state_;
    StepOutput last_;
};

}  // namespace lyam
