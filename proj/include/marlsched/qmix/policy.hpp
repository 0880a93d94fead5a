#pragma once

#include <cstdint>
#include <string>

#include "marlsched/qmix/features.hpp"
#include "marlsched/qmix/model.hpp"
#include "marlsched/schedulers/schedulers.hpp"

namespace marlsched::qmix {

// Frozen-model scheduler. Rebuilds the model from a checkpoint (in double
// precision) and drives allocations through the same observation and action
// path as training: one recurrent agent per RBG, greedy unless an evaluation
// epsilon is requested. Decisions depend only on the scheduler view.
class MarlPolicy : public schedulers::AllocPolicy {
 public:
  MarlPolicy(const std::string& checkpoint_path, const simcore::CellConfig& cell,
             int episode_length, double epsilon = 0.0, std::uint64_t seed = 1);

  simcore::Allocation decide(const simcore::CellState& state,
                             const simcore::SchedulerView& view) override;
  void reset() override;

  const ModelConfig& model_config() const { return model_.cfg; }

 private:
  QmixModel<double> model_;
  FeatureBounds bounds_;
  double epsilon_;
  std::uint64_t seed_;
  simcore::RngStream rng_;
  neuro::Mat<double> hidden_;
  std::vector<int> u_prev_;
};

// Reads the checkpoint header and reconstructs the stored model shape.
QmixModel<double> load_model(const std::string& checkpoint_path);

}  // namespace marlsched::qmix
