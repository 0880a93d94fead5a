#include "marlsched/qmix/reward.hpp"

#include <cmath>
#include <vector>

#include "marlsched/simcore/simulator.hpp"

namespace marlsched::qmix {

double default_delta_norm(const simcore::CellConfig& cfg) {
  double sum = 0.0;
  for (int level = cfg.mcs_min; level <= cfg.mcs_max; ++level) {
    std::vector<int> rbs(static_cast<std::size_t>(cfg.rbs_per_rbg), level);
    sum += static_cast<double>(simcore::tb_bits(rbs, cfg));
  }
  return cfg.max_users * sum / cfg.n_mcs();
}

double reward_step(RewardState& rs, const metrics::RateLedger& ledger, int t, double delta_norm) {
  const double cur = ledger.sum_rates(t);
  const double delta = (cur - rs.prev_sum) / delta_norm;
  rs.prev_sum = cur;
  return -1.0 / (1.0 + std::exp(-delta));
}

}  // namespace marlsched::qmix
