#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "marlsched/errors.hpp"
#include "marlsched/metrics/metrics.hpp"
#include "marlsched/neuro/checkpoint.hpp"
#include "marlsched/neuro/optimizer.hpp"
#include "marlsched/qmix/features.hpp"
#include "marlsched/qmix/model.hpp"
#include "marlsched/qmix/replay.hpp"
#include "marlsched/qmix/reward.hpp"
#include "marlsched/simcore/simulator.hpp"

namespace marlsched::qmix {

struct TrainConfig {
  simcore::CellConfig cell;
  int epochs = 100;
  int ttis_per_epoch = 1000;
  int batches_per_tti = 10;
  int batch_size = 256;
  std::size_t replay_capacity = 2000;
  double lr0 = 1e-3;
  double lr_decay = 1e-7;
  double lr_floor_frac = 0.1;
  double momentum = 0.0;
  double grad_clip = 10.0;  // global-norm ceiling per update; 0 disables
  // Effective horizon ~1/(1-gamma) TTIs; 10 spans the HARQ feedback delay, and
  // the short horizon keeps bootstrapped values small enough for stable TD.
  double gamma = 0.9;
  double epsilon = 0.01;
  bool centralized = false;
  // Bootstrapped targets from a periodically synced parameter copy. Off means
  // the copy is refreshed every step, i.e. targets from the current
  // parameters (still treated as constants).
  bool use_target_net = true;
  int target_sync_period = 200;
  double reward_delta_norm = 0.0;  // 0 = derive from the cell config
  double loss_abort_threshold = 1e6;
  int hidden = 64;
  int mix_hidden = 32;
  std::uint64_t seed = 1;
  std::string divergence_dump_path;  // checkpoint written before aborting, if set

  ModelConfig model_config() const {
    ModelConfig mc;
    mc.n_agents = cell.n_rbgs;
    mc.max_users = cell.max_users;
    mc.obs_width = kLocalObsWidth;
    mc.state_width = global_state_width(cell.n_rbgs);
    mc.hidden = hidden;
    mc.mix_hidden = mix_hidden;
    mc.centralized = centralized;
    return mc;
  }

  void validate() const {
    cell.validate();
    if (epochs < 1 || ttis_per_epoch < 1) throw ConfigError("epochs and ttis_per_epoch must be >= 1");
    if (batch_size < 1 || batches_per_tti < 0) throw ConfigError("bad batch configuration");
    if (replay_capacity < static_cast<std::size_t>(batch_size))
      throw ConfigError("replay capacity below batch size");
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in [0,1)");
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon must be in [0,1]");
    if (lr0 <= 0.0 || lr_decay < 0.0) throw ConfigError("bad learning-rate schedule");
    if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
    if (use_target_net && target_sync_period < 1) throw ConfigError("target sync period must be >= 1");
    if (hidden < 1 || mix_hidden < 1) throw ConfigError("bad network widths");
  }
};

struct EpochLog {
  int epoch = 0;
  double episode_reward = 0.0;
  double mean_loss = 0.0;
  double lr = 0.0;
  double epsilon = 0.0;
  int td_steps = 0;
};

struct TdStats {
  double loss = 0.0;
  double mean_y = 0.0;
  double mean_qtot = 0.0;
};

// Runs episodes against the cell, stores transitions, and performs batched
// temporal-difference updates through the mixing network. Single-threaded;
// owns its model, replay, and RNG streams, so a fixed seed fixes the run.
template <typename Scalar>
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg)
      : cfg_(validated(std::move(cfg))),
        delta_norm_(cfg_.reward_delta_norm > 0.0 ? cfg_.reward_delta_norm
                                                 : default_delta_norm(cfg_.cell)),
        bounds_(FeatureBounds::from_config(cfg_.cell, cfg_.ttis_per_epoch)),
        model_(cfg_.model_config()),
        target_(cfg_.model_config()),
        replay_(cfg_.replay_capacity),
        opt_(model_.params(),
             {cfg_.lr0, cfg_.lr_decay, cfg_.lr_floor_frac, cfg_.momentum, cfg_.grad_clip}),
        explore_rng_(cfg_.seed, "exploration"),
        replay_rng_(cfg_.seed, "replay") {
    simcore::RngStream init_rng(cfg_.seed, "init");
    model_.init(init_rng);
    target_.copy_values_from(model_);
  }

  const TrainConfig& config() const { return cfg_; }
  QmixModel<Scalar>& model() { return model_; }
  ReplayBuffer& replay() { return replay_; }
  double delta_norm() const { return delta_norm_; }
  std::int64_t target_version() const { return target_version_; }
  double lr() const { return opt_.lr(); }

  void sync_target() {
    target_.copy_values_from(model_);
    ++target_version_;
  }

  // One optimizer step on an explicit batch (sampled by the epoch loop, or
  // crafted by tests). Returns the summed squared TD error.
  TdStats train_on(const std::vector<const Transition*>& batch) {
    if (!cfg_.use_target_net) sync_target();
    refresh_targets(batch);
    TdStats stats = loss_and_grad(batch);
    if (!std::isfinite(stats.loss) || stats.loss > cfg_.loss_abort_threshold) {
      if (!cfg_.divergence_dump_path.empty()) save(cfg_.divergence_dump_path, {{"diverged", true}});
      throw TrainingDiverged("TD loss " + std::to_string(stats.loss) + " exceeded threshold");
    }
    opt_.step();
    ++train_steps_;
    if (cfg_.use_target_net && train_steps_ % cfg_.target_sync_period == 0) sync_target();
    return stats;
  }

  // Fills gradients for one batch without stepping; targets must be fresh
  // (train_on does both). Clears previous gradients first.
  TdStats loss_and_grad(const std::vector<const Transition*>& batch) {
    for (auto* p : model_.params()) p->zero_grad();
    const auto B = static_cast<Eigen::Index>(batch.size());
    const int K = model_.cfg.n_agents;

    // Per-slot compact forward over participating samples only.
    neuro::Mat<Scalar> qsel = neuro::Mat<Scalar>::Zero(K, B);
    std::vector<std::vector<Eigen::Index>> slot_samples(static_cast<std::size_t>(K));
    std::vector<AgentCache> caches;
    for (int group = 0; group < static_cast<int>(model_.nets.size()); ++group) {
      AgentCache cache;
      for (int k = 0; k < K; ++k) {
        if (model_.net_index(k) != group) continue;
        for (Eigen::Index i = 0; i < B; ++i)
          if (batch[static_cast<std::size_t>(i)]->act_mask_cur[static_cast<std::size_t>(k)]) {
            cache.slots.push_back(k);
            cache.samples.push_back(i);
          }
      }
      if (cache.samples.empty()) {
        caches.push_back(std::move(cache));
        continue;
      }
      const auto n = static_cast<Eigen::Index>(cache.samples.size());
      neuro::Mat<Scalar> x(model_.cfg.agent_input(), n), h(model_.cfg.hidden, n);
      for (Eigen::Index c = 0; c < n; ++c) {
        const Transition& tr = *batch[static_cast<std::size_t>(cache.samples[c])];
        const int k = cache.slots[static_cast<std::size_t>(c)];
        x.col(c).head(model_.cfg.obs_width) = tr.obs.col(k).cast<Scalar>();
        one_hot_into<Scalar>(x.col(c).tail(model_.cfg.max_users),
                             tr.u_prev[static_cast<std::size_t>(k)]);
        h.col(c) = tr.h_prev.col(k).cast<Scalar>();
      }
      auto out = model_.nets[static_cast<std::size_t>(group)].forward(x, h);
      for (Eigen::Index c = 0; c < n; ++c) {
        const Transition& tr = *batch[static_cast<std::size_t>(cache.samples[c])];
        const int k = cache.slots[static_cast<std::size_t>(c)];
        qsel(k, cache.samples[c]) = out.q(tr.u_cur[static_cast<std::size_t>(k)] - 1, c);
      }
      caches.push_back(std::move(cache));
    }

    neuro::Mat<Scalar> states(model_.cfg.state_width, B);
    for (Eigen::Index i = 0; i < B; ++i)
      states.col(i) = batch[static_cast<std::size_t>(i)]->s.cast<Scalar>();
    const neuro::Mat<Scalar> qtot = model_.mixer.forward(states, qsel);

    TdStats stats;
    neuro::Mat<Scalar> gqtot(1, B);
    for (Eigen::Index i = 0; i < B; ++i) {
      const double y = batch[static_cast<std::size_t>(i)]->cached_y;
      const double d = static_cast<double>(qtot(0, i)) - y;
      stats.loss += d * d;
      stats.mean_y += y;
      stats.mean_qtot += static_cast<double>(qtot(0, i));
      // Descent direction uses the batch-mean objective so the step size is
      // independent of batch size; the reported loss stays the batch sum.
      gqtot(0, i) = static_cast<Scalar>(2.0 * d / static_cast<double>(B));
    }
    stats.mean_y /= static_cast<double>(B);
    stats.mean_qtot /= static_cast<double>(B);

    const neuro::Mat<Scalar> gqsel = model_.mixer.backward(gqtot);
    for (std::size_t group = 0; group < model_.nets.size(); ++group) {
      const AgentCache& cache = caches[group];
      if (cache.samples.empty()) continue;
      const auto n = static_cast<Eigen::Index>(cache.samples.size());
      neuro::Mat<Scalar> gq = neuro::Mat<Scalar>::Zero(model_.cfg.max_users, n);
      for (Eigen::Index c = 0; c < n; ++c) {
        const Transition& tr = *batch[static_cast<std::size_t>(cache.samples[c])];
        const int k = cache.slots[static_cast<std::size_t>(c)];
        gq(tr.u_cur[static_cast<std::size_t>(k)] - 1, c) = gqsel(k, cache.samples[c]);
      }
      model_.nets[group].backward(gq);
    }
    return stats;
  }

  // Recomputes cached bootstrapped targets for batch entries whose cache
  // predates the current target parameters. The cache makes the TD loss a
  // function of the online parameters alone between target syncs.
  void refresh_targets(const std::vector<const Transition*>& batch) {
    std::vector<const Transition*> stale;
    for (const auto* tr : batch)
      if (tr->target_version != target_version_) stale.push_back(tr);
    std::sort(stale.begin(), stale.end());
    stale.erase(std::unique(stale.begin(), stale.end()), stale.end());
    if (stale.empty()) return;
    const auto B = static_cast<Eigen::Index>(stale.size());
    const int K = model_.cfg.n_agents;

    neuro::Mat<Scalar> qmax = neuro::Mat<Scalar>::Zero(K, B);
    for (int group = 0; group < static_cast<int>(target_.nets.size()); ++group) {
      std::vector<int> slots;
      std::vector<Eigen::Index> samples;
      for (int k = 0; k < K; ++k) {
        if (target_.net_index(k) != group) continue;
        for (Eigen::Index i = 0; i < B; ++i)
          if (stale[static_cast<std::size_t>(i)]->act_mask_next[static_cast<std::size_t>(k)]) {
            slots.push_back(k);
            samples.push_back(i);
          }
      }
      if (samples.empty()) continue;
      const auto n = static_cast<Eigen::Index>(samples.size());
      neuro::Mat<Scalar> x(model_.cfg.agent_input(), n), h(model_.cfg.hidden, n);
      for (Eigen::Index c = 0; c < n; ++c) {
        const Transition& tr = *stale[static_cast<std::size_t>(samples[c])];
        const int k = slots[static_cast<std::size_t>(c)];
        x.col(c).head(model_.cfg.obs_width) = tr.obs_next.col(k).cast<Scalar>();
        one_hot_into<Scalar>(x.col(c).tail(model_.cfg.max_users),
                             tr.u_cur[static_cast<std::size_t>(k)]);
        h.col(c) = tr.h_cur.col(k).cast<Scalar>();
      }
      auto out = target_.nets[static_cast<std::size_t>(group)].forward(x, h);
      for (Eigen::Index c = 0; c < n; ++c) {
        const Transition& tr = *stale[static_cast<std::size_t>(samples[c])];
        // Greedy per-agent utility; joint max equals per-agent max by mixer
        // monotonicity.
        qmax(slots[static_cast<std::size_t>(c)], samples[c]) =
            out.q.col(c).head(tr.n_active_next).maxCoeff();
      }
    }

    neuro::Mat<Scalar> states(model_.cfg.state_width, B);
    for (Eigen::Index i = 0; i < B; ++i)
      states.col(i) = stale[static_cast<std::size_t>(i)]->s_next.cast<Scalar>();
    const neuro::Mat<Scalar> qtot_next = target_.mixer.forward(states, qmax);
    for (Eigen::Index i = 0; i < B; ++i) {
      const Transition& tr = *stale[static_cast<std::size_t>(i)];
      tr.cached_y = tr.r + cfg_.gamma * static_cast<double>(qtot_next(0, i));
      tr.target_version = target_version_;
    }
  }

  EpochLog run_epoch(int epoch) {
    const std::uint64_t episode_seed =
        cfg_.seed ^ simcore::fnv1a64("episode-" + std::to_string(epoch));
    simcore::CellState state = simcore::make_initial_state(cfg_.cell, episode_seed);
    metrics::RateLedger ledger;
    metrics::ledger_apply_initial(ledger, state);
    RewardState rs;

    const int K = model_.cfg.n_agents;
    neuro::Mat<Scalar> hidden = neuro::Mat<Scalar>::Zero(model_.cfg.hidden, K);
    std::vector<int> u_prev(static_cast<std::size_t>(K), 0);
    simcore::SchedulerView view = simcore::make_scheduler_view(state);
    Eigen::VectorXd s = build_global_state(view, bounds_);
    Eigen::MatrixXd obs = local_obs_matrix(view);

    EpochLog log;
    log.epoch = epoch;
    log.epsilon = cfg_.epsilon;
    double loss_sum = 0.0;

    for (int step_i = 0; step_i < cfg_.ttis_per_epoch; ++step_i) {
      const int n_active = static_cast<int>(view.ues.size());
      const neuro::Mat<Scalar> obs_s = obs.cast<Scalar>();
      auto sel = select_actions(model_, obs_s, hidden, u_prev, view.rbg_busy, n_active,
                                cfg_.epsilon, explore_rng_);
      const simcore::Allocation alloc = actions_to_allocation(view, sel.actions);

      auto [next_state, ev] = simcore::step(std::move(state), alloc);
      state = std::move(next_state);
      metrics::ledger_apply_events(ledger, state, ev);
      const double r = reward_step(rs, ledger, ev.t, delta_norm_);
      log.episode_reward += r;

      simcore::SchedulerView view_next = simcore::make_scheduler_view(state);
      Eigen::VectorXd s_next = build_global_state(view_next, bounds_);
      Eigen::MatrixXd obs_next = local_obs_matrix(view_next);

      Transition tr;
      tr.s = s;
      tr.s_next = s_next;
      tr.obs = obs;
      tr.obs_next = obs_next;
      tr.h_prev = hidden.template cast<double>();
      tr.h_cur = sel.hidden.template cast<double>();
      tr.u_prev = u_prev;
      tr.u_cur = sel.actions;
      tr.act_mask_cur.resize(static_cast<std::size_t>(K));
      tr.act_mask_next.resize(static_cast<std::size_t>(K));
      const int n_active_next = static_cast<int>(view_next.ues.size());
      for (int k = 0; k < K; ++k) {
        tr.act_mask_cur[static_cast<std::size_t>(k)] =
            static_cast<std::uint8_t>(sel.actions[static_cast<std::size_t>(k)] > 0);
        tr.act_mask_next[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(
            !view_next.rbg_busy[static_cast<std::size_t>(k)] && n_active_next > 0);
      }
      tr.n_active_next = n_active_next;
      tr.r = r;
      replay_.push(std::move(tr));

      if (replay_.size() >= static_cast<std::size_t>(cfg_.batch_size)) {
        for (int b = 0; b < cfg_.batches_per_tti; ++b) {
          TdStats stats = train_on(sample_batch());
          loss_sum += stats.loss;
          ++log.td_steps;
        }
      }

      u_prev = sel.actions;
      hidden = sel.hidden;
      view = std::move(view_next);
      s = std::move(s_next);
      obs = std::move(obs_next);
    }

    log.mean_loss = log.td_steps > 0 ? loss_sum / log.td_steps : 0.0;
    log.lr = opt_.lr();
    return log;
  }

  std::vector<EpochLog> train(std::ostream* log_stream = nullptr) {
    std::vector<EpochLog> logs;
    for (int e = 0; e < cfg_.epochs; ++e) {
      logs.push_back(run_epoch(e));
      if (log_stream) *log_stream << epoch_log_json(logs.back()).dump() << '\n' << std::flush;
    }
    return logs;
  }

  static nlohmann::json epoch_log_json(const EpochLog& l) {
    return {{"epoch", l.epoch},       {"episode_reward", l.episode_reward},
            {"mean_loss", l.mean_loss}, {"lr", l.lr},
            {"epsilon", l.epsilon},   {"td_steps", l.td_steps}};
  }

  void save(const std::string& path, nlohmann::json extra_meta = nlohmann::json::object()) {
    nlohmann::json meta = extra_meta;
    meta["model"] = model_.cfg.to_json();
    meta["mode"] = cfg_.centralized ? "centralized" : "distributional";
    meta["seed"] = cfg_.seed;
    meta["train_steps"] = train_steps_;
    neuro::save_checkpoint(path, meta, model_.to_tensors());
  }

  std::vector<const Transition*> sample_batch() {
    std::vector<const Transition*> batch;
    batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
    for (int i = 0; i < cfg_.batch_size; ++i)
      batch.push_back(&replay_.at(replay_rng_.uniform_int(replay_.size())));
    return batch;
  }

 private:
  struct AgentCache {
    std::vector<int> slots;
    std::vector<Eigen::Index> samples;
  };

  static TrainConfig validated(TrainConfig cfg) {
    cfg.validate();
    return cfg;
  }

  Eigen::MatrixXd local_obs_matrix(const simcore::SchedulerView& view) const {
    Eigen::MatrixXd obs(kLocalObsWidth, model_.cfg.n_agents);
    for (int k = 0; k < model_.cfg.n_agents; ++k) obs.col(k) = build_local_obs(view, k, bounds_);
    return obs;
  }

  TrainConfig cfg_;
  double delta_norm_;
  FeatureBounds bounds_;
  QmixModel<Scalar> model_;
  QmixModel<Scalar> target_;
  ReplayBuffer replay_;
  neuro::Sgd<Scalar> opt_;
  simcore::RngStream explore_rng_;
  simcore::RngStream replay_rng_;
  std::int64_t target_version_ = 0;
  long train_steps_ = 0;
};

}  // namespace marlsched::qmix
