#pragma once

#include <Eigen/Dense>

#include "marlsched/simcore/state.hpp"
#include "marlsched/simcore/view.hpp"

namespace marlsched::qmix {

// Min-max normalization bounds that map raw user features into [0,1] before
// any of them enter a network. Raw scales differ by orders of magnitude
// (buffer ~1e5 vs CQI ~10), which would otherwise dominate the Gram products.
struct FeatureBounds {
  double rsrp_lo = -100.0, rsrp_hi = -70.0;
  double cqi_lo = 1.0, cqi_hi = 29.0;
  double buffer_hi = 100000.0;
  double sched_hi = 1000.0;   // scheduling counter saturates here
  double alpha_bound = 10.0;  // link-adaptation offset lives in [-bound, bound]
  double hist_rate_hi = 1.0;  // largest single-TTI payload

  static FeatureBounds from_config(const simcore::CellConfig& cfg, int episode_length);
  double clamp01(double x) const;  // helper shared by the builders
};

// Width bookkeeping: the global feature set is {RSRP, per-RBG mean CQI (one
// column per RBG), buffer, scheduled count, link-adaptation offset, history
// rate}; the local set replaces the CQI block with the agent's own column.
inline constexpr int kLocalFeatures = 6;
inline constexpr int kLocalObsWidth = kLocalFeatures * kLocalFeatures;
inline int global_features(int n_rbgs) { return 5 + n_rbgs; }
inline int global_state_width(int n_rbgs) {
  return global_features(n_rbgs) * global_features(n_rbgs);
}

// Both builders form the per-user feature matrix S (one row per active user)
// and return flatten(S^T S). The Gram product keeps the width independent of
// the user count, and absent (virtual) users are exact zero rows, so they
// do not perturb the result.
Eigen::VectorXd build_global_state(const simcore::SchedulerView& view, const FeatureBounds& fb);
Eigen::VectorXd build_local_obs(const simcore::SchedulerView& view, int agent,
                                const FeatureBounds& fb);

// Maps per-RBG user ordinals (0 = leave idle, 1..N = view.ues index + 1) to a
// concrete allocation. Ordinals pointing at empty buffers are dropped rather
// than forwarded to the cell, which rejects such grants.
simcore::Allocation actions_to_allocation(const simcore::SchedulerView& view,
                                          const std::vector<int>& actions);

}  // namespace marlsched::qmix
