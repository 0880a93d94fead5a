#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "marlsched/errors.hpp"
#include "marlsched/neuro/layers.hpp"

namespace marlsched::neuro {

struct SgdConfig {
  double lr0 = 1e-3;
  double lr_decay = 1e-7;       // subtracted per step
  double lr_floor_frac = 0.1;   // lr never drops below lr_floor_frac * lr0
  double momentum = 0.0;
  double grad_clip = 0.0;       // global-norm ceiling across all tensors; 0 disables
};

// Plain SGD with a linearly decaying, floored learning rate, optional
// momentum, and optional global-norm gradient clipping. step() consumes and
// clears the accumulated gradients.
template <typename Scalar>
class Sgd {
 public:
  Sgd(std::vector<ParamTensor<Scalar>*> params, SgdConfig cfg)
      : params_(std::move(params)), cfg_(cfg), lr_(cfg.lr0) {
    if (cfg_.momentum != 0.0) {
      velocity_.reserve(params_.size());
      for (auto* p : params_) velocity_.push_back(Mat<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step() {
    for (auto* p : params_)
      if (!p->grad.allFinite())
        throw TrainingDiverged("non-finite gradient in " + p->name);

    if (cfg_.grad_clip > 0.0) {
      double sq = 0.0;
      for (auto* p : params_) sq += static_cast<double>(p->grad.squaredNorm());
      const double norm = std::sqrt(sq);
      if (norm > cfg_.grad_clip) {
        const Scalar scale = static_cast<Scalar>(cfg_.grad_clip / norm);
        for (auto* p : params_) p->grad *= scale;
      }
    }

    const Scalar lr = static_cast<Scalar>(lr_);
    const Scalar mu = static_cast<Scalar>(cfg_.momentum);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto* p = params_[i];
      if (cfg_.momentum != 0.0) {
        velocity_[i] = mu * velocity_[i] - lr * p->grad;
        p->value += velocity_[i];
      } else {
        p->value -= lr * p->grad;
      }
      p->zero_grad();
    }
    ++steps_;
    lr_ = std::max(cfg_.lr0 - static_cast<double>(steps_) * cfg_.lr_decay,
                   cfg_.lr_floor_frac * cfg_.lr0);
  }

  double lr() const { return lr_; }
  long steps() const { return steps_; }

 private:
  std::vector<ParamTensor<Scalar>*> params_;
  SgdConfig cfg_;
  double lr_;
  long steps_ = 0;
  std::vector<Mat<Scalar>> velocity_;
};

}  // namespace marlsched::neuro
