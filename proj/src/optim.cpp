#include "lyam/optim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "detail.hpp"
#include "lyam/errors.hpp"

namespace lyam {

void HyperParams::validate() const {
    if (!(eta0 > 0.0) || !std::isfinite(eta0)) {
        throw InvalidArgument("eta0 must be positive and finite");
    }
    auto check_decay = [](double beta, const char* name) {
        if (!(beta >= 0.0 && beta < 1.0)) {
            throw InvalidArgument(std::string(name) + " must lie in [0, 1)");
        }
    };
    check_decay(beta1, "beta1");
    check_decay(beta2, "beta2");
    check_decay(beta3, "beta3");
    if (!(epsilon > 0.0)) {
        throw InvalidArgument("epsilon must be positive");
    }
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
        throw InvalidArgument("weight_decay must be nonnegative");
    }
}

namespace {

struct KindName {
    OptimizerKind kind;
    std::string_view name;
};

constexpr KindName kKindNames[] = {
    {OptimizerKind::LyAm, "LyAm"},       {OptimizerKind::SGD, "SGD"},
    {OptimizerKind::AdaGrad, "AdaGrad"}, {OptimizerKind::Adam, "Adam"},
    {OptimizerKind::AdamW, "AdamW"},     {OptimizerKind::AdaBelief, "AdaBelief"},
    {OptimizerKind::Adan, "Adan"},
};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

std::string_view to_string(OptimizerKind kind) noexcept {
    for (const auto& entry : kKindNames) {
        if (entry.kind == kind) return entry.name;
    }
    return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
    for (const auto& entry : kKindNames) {
        if (iequals(entry.name, name)) return entry.kind;
    }
    std::string valid;
    for (const auto& entry : kKindNames) {
        if (!valid.empty()) valid += ", ";
        valid += entry.name;
    }
    throw InvalidArgument("unknown optimizer '" + std::string(name) + "'; valid names: " + valid);
}

const std::vector<OptimizerKind>& all_optimizer_kinds() {
    static const std::vector<OptimizerKind> kinds = {
        OptimizerKind::LyAm,  OptimizerKind::SGD,       OptimizerKind::AdaGrad,
        OptimizerKind::Adam,  OptimizerKind::AdamW,     OptimizerKind::AdaBelief,
        OptimizerKind::Adan};
    return kinds;
}

const std::vector<OptimizerKind>& benchmark_optimizer_kinds() {
    static const std::vector<OptimizerKind> kinds = {
        OptimizerKind::AdaGrad, OptimizerKind::Adam, OptimizerKind::AdamW,
        OptimizerKind::AdaBelief, OptimizerKind::Adan, OptimizerKind::LyAm};
    return kinds;
}

namespace detail {

void check_finite(std::span<const double> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw NonFiniteValue(std::string("non-finite ") + what + " entry", i);
        }
    }
}

void check_same_dim(std::size_t expected, std::size_t actual, const char* what) {
    if (expected != actual) {
        throw InvalidArgument(std::string(what) + " has dimension " + std::to_string(actual) +
                              ", expected " + std::to_string(expected));
    }
}

DecayPowers powers_at(std::uint64_t t, const HyperParams& hyper) {
    DecayPowers p;
    p.beta1 = hyper.beta1;
    p.beta2 = hyper.beta2;
    p.beta3 = hyper.beta3;
    for (std::uint64_t k = 0; k < t; ++k) {
        p.beta1_t *= hyper.beta1;
        p.beta2_t *= hyper.beta2;
        p.beta3_t *= hyper.beta3;
    }
    p.t = t;
    return p;
}

bool powers_match(const DecayPowers& p, std::uint64_t t, const HyperParams& hyper) {
    return p.t == t && p.beta1 == hyper.beta1 && p.beta2 == hyper.beta2 &&
           p.beta3 == hyper.beta3;
}

DecayPowers current_powers(const MomentState& state, const HyperParams& hyper) {
    if (powers_match(state.powers, state.t, hyper)) return state.powers;
    return powers_at(state.t, hyper);
}

DecayPowers next_powers(const MomentState& state, const HyperParams& hyper) {
    DecayPowers p = current_powers(state, hyper);
    p.beta1_t *= hyper.beta1;
    p.beta2_t *= hyper.beta2;
    p.beta3_t *= hyper.beta3;
    p.t += 1;
    return p;
}

void check_state(const MomentState& state) {
    if (state.m.empty()) throw InvalidArgument("optimizer state has dimension 0");
    check_same_dim(state.m.size(), state.v.size(), "second moment");
}

}  // namespace detail

MomentState init_state(std::size_t dim) {
    if (dim == 0) throw InvalidArgument("parameter dimension must be at least 1");
    MomentState state;
    state.m.assign(dim, 0.0);
    state.v.assign(dim, 0.0);
    return state;
}

MomentState update_moments(const MomentState& state, std::span<const double> grad,
                           const HyperParams& hyper) {
    detail::check_state(state);
    detail::check_same_dim(state.m.size(), grad.size(), "gradient");
    detail::check_finite(grad, "gradient");

    MomentState next = state;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        next.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grad[i];
        next.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * (grad[i] * grad[i]);
    }
    next.powers = detail::next_powers(state, hyper);
    next.t = state.t + 1;
    return next;
}

BiasCorrected bias_correct(const MomentState& state, const HyperParams& hyper) {
    detail::check_state(state);
    if (state.t == 0) {
        throw InvalidArgument("bias correction is undefined at t = 0");
    }
    if (hyper.beta1 >= 1.0 || hyper.beta2 >= 1.0) {
        throw InvalidArgument("bias correction requires beta1, beta2 < 1");
    }
    const DecayPowers p = detail::current_powers(state, hyper);
    const double c1 = 1.0 - p.beta1_t;
    const double c2 = 1.0 - p.beta2_t;

    BiasCorrected out;
    out.m_hat.resize(state.m.size());
    out.v_hat.resize(state.v.size());
    for (std::size_t i = 0; i < state.m.size(); ++i) {
        out.m_hat[i] = state.m[i] / c1;
        out.v_hat[i] = state.v[i] / c2;
    }
    return out;
}

Vector adaptive_lr(std::span<const double> v_hat, double eta0) {
    Vector eta(v_hat.size());
    for (std::size_t i = 0; i < v_hat.size(); ++i) {
        if (!(v_hat[i] >= 0.0)) {
            throw InvalidArgument("negative or NaN second moment at index " + std::to_string(i));
        }
        eta[i] = eta0 / (1.0 + v_hat[i]);
    }
    return eta;
}

StepOutput lyam_step(std::span<const double> params, const MomentState& state,
                     std::span<const double> grad, const HyperParams& hyper) {
    hyper.validate();
    detail::check_state(state);
    detail::check_same_dim(state.m.size(), params.size(), "parameter vector");
    detail::check_finite(params, "parameter");

    StepOutput out;
    out.new_state = update_moments(state, grad, hyper);
    auto corrected = bias_correct(out.new_state, hyper);
    out.eta = adaptive_lr(corrected.v_hat, hyper.eta0);
    out.m_hat = std::move(corrected.m_hat);
    out.v_hat = std::move(corrected.v_hat);

    out.new_params.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.new_params[i] = params[i] - out.eta[i] * out.m_hat[i];
    }
    return out;
}

Optimizer::Optimizer(OptimizerKind kind, HyperParams hyper, Vector initial_params)
    : kind_(kind), hyper_(hyper), params_(std::move(initial_params)),
      state_(init_state(params_.size())) {
    hyper_.validate();
}

const StepOutput& Optimizer::step(std::span<const double> grad) {
    last_ = optimizer_step(kind_, params_, state_, grad, hyper_);
    params_ = last_.new_params;
    state_ = last_.new_state;
    return last_;
}

}  // namespace lyam
