#include <cmath>

#include "detail.hpp"
#include "lyam/errors.hpp"
#include "lyam/optim.hpp"

namespace lyam {

namespace {

StepOutput make_output(std::span<const double> params, MomentState state) {
    StepOutput out;
    const std::size_t n = params.size();
    out.new_state = std::move(state);
    out.new_params.resize(n);
    out.eta.resize(n);
    out.m_hat.resize(n);
    out.v_hat.resize(n);
    return out;
}

void apply_update(StepOutput& out, std::span<const double> params) {
    if (out.decay_factor == 1.0) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            out.new_params[i] = params[i] - out.eta[i] * out.m_hat[i];
        }
    } else {
        for (std::size_t i = 0; i < params.size(); ++i) {
            out.new_params[i] = params[i] * out.decay_factor - out.eta[i] * out.m_hat[i];
        }
    }
}

StepOutput sgd_step(std::span<const double> params, const MomentState& state,
                    std::span<const double> grad, const HyperParams& hyper) {
    MomentState next = state;
    next.t += 1;
    next.powers = detail::next_powers(state, hyper);
    auto out = make_output(params, std::move(next));
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.eta[i] = hyper.eta0;
        out.m_hat[i] = grad[i];
        out.v_hat[i] = 0.0;
    }
    apply_update(out, params);
    return out;
}

// v accumulates the running sum of squared gradients.
StepOutput adagrad_step(std::span<const double> params, const MomentState& state,
                        std::span<const double> grad, const HyperParams& hyper) {
    MomentState next = state;
    next.t += 1;
    next.powers = detail::next_powers(state, hyper);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        next.m[i] = grad[i];
        next.v[i] = state.v[i] + grad[i] * grad[i];
    }
    auto out = make_output(params, std::move(next));
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.m_hat[i] = grad[i];
        out.v_hat[i] = out.new_state.v[i];
        out.eta[i] = hyper.eta0 / (std::sqrt(out.v_hat[i]) + hyper.epsilon);
    }
    apply_update(out, params);
    return out;
}

StepOutput adam_step(std::span<const double> params, const MomentState& state,
                     std::span<const double> grad, const HyperParams& hyper,
                     double weight_decay) {
    auto corrected_state = update_moments(state, grad, hyper);
    auto corrected = bias_correct(corrected_state, hyper);
    auto out = make_output(params, std::move(corrected_state));
    out.m_hat = std::move(corrected.m_hat);
    out.v_hat = std::move(corrected.v_hat);
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.eta[i] = hyper.eta0 / (std::sqrt(out.v_hat[i]) + hyper.epsilon);
    }
    out.decay_factor = 1.0 - hyper.eta0 * weight_decay;
    apply_update(out, params);
    return out;
}

// AdaBelief tracks the variance of the gradient around its running mean:
// s_t = beta2 s + (1 - beta2) (g - m_t)^2 + eps.
StepOutput adabelief_step(std::span<const double> params, const MomentState& state,
                          std::span<const double> grad, const HyperParams& hyper) {
    MomentState next = state;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        next.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grad[i];
        const double dev = grad[i] - next.m[i];
        next.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * dev * dev + hyper.epsilon;
    }
    next.powers = detail::next_powers(state, hyper);
    next.t = state.t + 1;

    const double c1 = 1.0 - next.powers.beta1_t;
    const double c2 = 1.0 - next.powers.beta2_t;
    auto out = make_output(params, std::move(next));
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.m_hat[i] = out.new_state.m[i] / c1;
        out.v_hat[i] = out.new_state.v[i] / c2;
        out.eta[i] = hyper.eta0 / (std::sqrt(out.v_hat[i]) + hyper.epsilon);
    }
    apply_update(out, params);
    return out;
}

// Adan with three moments: m tracks g, diff tracks g_t - g_{t-1}, and v
// tracks the square of u = g_t + beta3 (g_t - g_{t-1}). beta1 decays m, beta2
// decays v and beta3 decays diff. The returned m_hat is the combined direction
// m / (1 - beta1^t) + beta3 diff / (1 - beta3^t).
StepOutput adan_step(std::span<const double> params, const MomentState& state,
                     std::span<const double> grad, const HyperParams& hyper) {
    const std::size_t n = grad.size();
    MomentState next = state;
    if (next.diff.size() != n) next.diff.assign(n, 0.0);
    const bool first = state.t == 0 || state.prev_grad.size() != n;

    for (std::size_t i = 0; i < n; ++i) {
        const double delta = first ? 0.0 : grad[i] - state.prev_grad[i];
        const double u = grad[i] + hyper.beta3 * delta;
        next.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grad[i];
        next.diff[i] = hyper.beta3 * next.diff[i] + (1.0 - hyper.beta3) * delta;
        next.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * u * u;
    }
    next.prev_grad.assign(grad.begin(), grad.end());
    next.powers = detail::next_powers(state, hyper);
    next.t = state.t + 1;

    const double c1 = 1.0 - next.powers.beta1_t;
    const double c2 = 1.0 - next.powers.beta2_t;
    const double c3 = 1.0 - next.powers.beta3_t;
    auto out = make_output(params, std::move(next));
    for (std::size_t i = 0; i < n; ++i) {
        out.m_hat[i] = out.new_state.m[i] / c1 + hyper.beta3 * out.new_state.diff[i] / c3;
        out.v_hat[i] = out.new_state.v[i] / c2;
        out.eta[i] = hyper.eta0 / (std::sqrt(out.v_hat[i]) + hyper.epsilon);
    }
    out.decay_factor = 1.0 - hyper.eta0 * hyper.weight_decay;
    apply_update(out, params);
    return out;
}

}  // namespace

StepOutput baseline_step(OptimizerKind kind, std::span<const double> params,
                         const MomentState& state, std::span<const double> grad,
                         const HyperParams& hyper) {
    hyper.validate();
    detail::check_state(state);
    detail::check_same_dim(state.m.size(), params.size(), "parameter vector");
    detail::check_same_dim(state.m.size(), grad.size(), "gradient");
    detail::check_finite(params, "parameter");
    detail::check_finite(grad, "gradient");

    switch (kind) {
        case OptimizerKind::LyAm:
            return lyam_step(params, state, grad, hyper);
        case OptimizerKind::SGD:
            return sgd_step(params, state, grad, hyper);
        case OptimizerKind::AdaGrad:
            return adagrad_step(params, state, grad, hyper);
        case OptimizerKind::Adam:
            return adam_step(params, state, grad, hyper, 0.0);
        case OptimizerKind::AdamW:
            return adam_step(params, state, grad, hyper, hyper.weight_decay);
        case OptimizerKind::AdaBelief:
            return adabelief_step(params, state, grad, hyper);
        case OptimizerKind::Adan:
            return adan_step(params, state, grad, hyper);
    }
    throw InvalidArgument("unhandled optimizer kind");
}

}  // namespace lyam
