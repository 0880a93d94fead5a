#include "marlsched/qmix/features.hpp"

#include <algorithm>
#include <cmath>

#include "marlsched/errors.hpp"
#include "marlsched/simcore/simulator.hpp"

namespace marlsched::qmix {

FeatureBounds FeatureBounds::from_config(const simcore::CellConfig& cfg, int episode_length) {
  FeatureBounds fb;
  fb.rsrp_lo = cfg.rsrp_min_dbm;
  fb.rsrp_hi = cfg.rsrp_max_dbm;
  fb.cqi_lo = cfg.mcs_min;
  fb.cqi_hi = cfg.mcs_max;
  fb.buffer_hi = cfg.buffer_max_bits;
  fb.sched_hi = std::max(1, episode_length);
  fb.alpha_bound = cfg.olla_clamp;
  // Largest payload a user can move in one TTI: every RB at the top level.
  std::vector<int> top(static_cast<std::size_t>(cfg.n_rbs()), cfg.mcs_max);
  fb.hist_rate_hi = static_cast<double>(simcore::tb_bits(top, cfg));
  return fb;
}

double FeatureBounds::clamp01(double x) const { return std::clamp(x, 0.0, 1.0); }

namespace {

double norm01(double x, double lo, double hi) {
  return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

// Mean reported CQI over the RBs of one RBG.
double rbg_mean_cqi(const simcore::UeView& ue, int rbg, int rbs_per_rbg) {
  double sum = 0.0;
  for (int r = 0; r < rbs_per_rbg; ++r)
    sum += ue.cqi_rb[static_cast<std::size_t>(rbg * rbs_per_rbg + r)];
  return sum / rbs_per_rbg;
}

Eigen::VectorXd gram_flatten(const Eigen::MatrixXd& s) {
  const Eigen::MatrixXd gram = s.transpose() * s;
  return Eigen::Map<const Eigen::VectorXd>(gram.data(), gram.size());
}

}  // namespace

Eigen::VectorXd build_global_state(const simcore::SchedulerView& view, const FeatureBounds& fb) {
  const int ncols = global_features(view.cfg.n_rbgs);
  const auto n = static_cast<Eigen::Index>(view.ues.size());
  Eigen::MatrixXd s(n, ncols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ue = view.ues[static_cast<std::size_t>(i)];
    int c = 0;
    s(i, c++) = norm01(ue.rsrp_dbm, fb.rsrp_lo, fb.rsrp_hi);
    for (int k = 0; k < view.cfg.n_rbgs; ++k)
      s(i, c++) = norm01(rbg_mean_cqi(ue, k, view.cfg.rbs_per_rbg), fb.cqi_lo, fb.cqi_hi);
    s(i, c++) = norm01(static_cast<double>(ue.buffer_bits), 0.0, fb.buffer_hi);
    s(i, c++) = norm01(ue.scheduled_times, 0.0, fb.sched_hi);
    s(i, c++) = norm01(ue.olla_alpha, -fb.alpha_bound, fb.alpha_bound);
    s(i, c++) = norm01(ue.hist_rate, 0.0, fb.hist_rate_hi);
  }
  return gram_flatten(s);
}

Eigen::VectorXd build_local_obs(const simcore::SchedulerView& view, int agent,
                                const FeatureBounds& fb) {
  if (agent < 0 || agent >= view.cfg.n_rbgs)
    throw ContractViolation("agent ordinal out of range");
  const auto n = static_cast<Eigen::Index>(view.ues.size());
  Eigen::MatrixXd s(n, kLocalFeatures);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ue = view.ues[static_cast<std::size_t>(i)];
    s(i, 0) = norm01(ue.rsrp_dbm, fb.rsrp_lo, fb.rsrp_hi);
    s(i, 1) = norm01(rbg_mean_cqi(ue, agent, view.cfg.rbs_per_rbg), fb.cqi_lo, fb.cqi_hi);
    s(i, 2) = norm01(static_cast<double>(ue.buffer_bits), 0.0, fb.buffer_hi);
    s(i, 3) = norm01(ue.scheduled_times, 0.0, fb.sched_hi);
    s(i, 4) = norm01(ue.olla_alpha, -fb.alpha_bound, fb.alpha_bound);
    s(i, 5) = norm01(ue.hist_rate, 0.0, fb.hist_rate_hi);
  }
  return gram_flatten(s);
}

simcore::Allocation actions_to_allocation(const simcore::SchedulerView& view,
                                          const std::vector<int>& actions) {
  simcore::Allocation alloc;
  alloc.rbg_to_ue.assign(static_cast<std::size_t>(view.cfg.n_rbgs), -1);
  if (static_cast<int>(actions.size()) != view.cfg.n_rbgs)
    throw ContractViolation("one action per RBG required");
  for (int k = 0; k < view.cfg.n_rbgs; ++k) {
    const int u = actions[static_cast<std::size_t>(k)];
    if (u <= 0) continue;
    if (u > static_cast<int>(view.ues.size()))
      throw ContractViolation("action ordinal beyond active users");
    const auto& ue = view.ues[static_cast<std::size_t>(u - 1)];
    if (view.rbg_busy[static_cast<std::size_t>(k)] || ue.buffer_bits == 0) continue;
    alloc.rbg_to_ue[static_cast<std::size_t>(k)] = ue.id;
  }
  return alloc;
}

}  // namespace marlsched::qmix
