#include "marlsched/qmix/policy.hpp"

#include "marlsched/errors.hpp"
#include "marlsched/neuro/checkpoint.hpp"

namespace marlsched::qmix {

QmixModel<double> load_model(const std::string& checkpoint_path) {
  const neuro::Checkpoint ckpt = neuro::load_checkpoint(checkpoint_path);
  if (!ckpt.meta.contains("model"))
    throw ConfigError("checkpoint lacks a model description: " + checkpoint_path);
  QmixModel<double> model(ModelConfig::from_json(ckpt.meta.at("model")));
  model.restore(ckpt);
  return model;
}

MarlPolicy::MarlPolicy(const std::string& checkpoint_path, const simcore::CellConfig& cell,
                       int episode_length, double epsilon, std::uint64_t seed)
    : model_(load_model(checkpoint_path)),
      bounds_(FeatureBounds::from_config(cell, episode_length)),
      epsilon_(epsilon),
      seed_(seed),
      rng_(seed, "eval-exploration"),
      hidden_(neuro::Mat<double>::Zero(model_.cfg.hidden, model_.cfg.n_agents)),
      u_prev_(static_cast<std::size_t>(model_.cfg.n_agents), 0) {
  if (model_.cfg.n_agents != cell.n_rbgs || model_.cfg.max_users != cell.max_users)
    throw ConfigError("checkpoint model shape does not match the cell configuration");
}

simcore::Allocation MarlPolicy::decide(const simcore::CellState&,
                                       const simcore::SchedulerView& view) {
  Eigen::MatrixXd obs(kLocalObsWidth, model_.cfg.n_agents);
  for (int k = 0; k < model_.cfg.n_agents; ++k) obs.col(k) = build_local_obs(view, k, bounds_);
  auto sel = select_actions(model_, obs, hidden_, u_prev_, view.rbg_busy,
                            static_cast<int>(view.ues.size()), epsilon_, rng_);
  hidden_ = sel.hidden;
  u_prev_ = sel.actions;
  return actions_to_allocation(view, sel.actions);
}

void MarlPolicy::reset() {
  hidden_.setZero();
  u_prev_.assign(u_prev_.size(), 0);
  rng_ = simcore::RngStream(seed_, "eval-exploration");
}

}  // namespace marlsched::qmix
