#pragma once

#include <cstdint>
#include <span>

#include "lyam/optim.hpp"

namespace lyam::detail {

void check_finite(std::span<const double> values, const char* what);
void check_same_dim(std::size_t expected, std::size_t actual, const char* what);
void check_state(const MomentState& state);

DecayPowers powers_at(std::uint64_t t, const HyperParams& hyper);
DecayPowers current_powers(const MomentState& state, const HyperParams& hyper);
DecayPowers next_powers(const MomentState& state, const HyperParams& hyper);

}  // namespace lyam::detail
