#pragma once

#include "marlsched/metrics/metrics.hpp"
#include "marlsched/simcore/config.hpp"

namespace marlsched::qmix {

// Team reward: r_t = -sigmoid(delta / delta_norm) where delta is the change
// in the summed per-user delivery rates between consecutive TTIs (departed
// users frozen, newcomers enter at zero). Always in (-1, 0); every agent
// receives the same value.
struct RewardState {
  double prev_sum = 0.0;
};

// Default normalization: max_users times the mean single-RBG transport block
// over all levels, so typical per-TTI rate swings land in the sigmoid's
// sensitive region instead of saturating it.
double default_delta_norm(const simcore::CellConfig& cfg);

double reward_step(RewardState& rs, const metrics::RateLedger& ledger, int t, double delta_norm);

}  // namespace marlsched::qmix
