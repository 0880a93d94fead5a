#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "marlsched/errors.hpp"

namespace marlsched::qmix {

// One stored decision step. Per-agent quantities sit in columns (one per
// RBG agent). Actions use 0 for "none" and 1..M for user ordinals. act_mask
// marks agents that actually ran their network and picked a user that TTI
// (not busy, users present); masked-out agents contribute zero utility on
// the corresponding side of the temporal-difference target.
struct Transition {
  Eigen::VectorXd s, s_next;
  Eigen::MatrixXd obs, obs_next;  // obs_width x n_agents
  Eigen::MatrixXd h_prev, h_cur;  // hidden x n_agents
  std::vector<int> u_prev, u_cur;
  std::vector<std::uint8_t> act_mask_cur, act_mask_next;
  int n_active_next = 0;  // masks the target-side argmax range
  double r = 0.0;

  // Bootstrapped target cache: valid while target_version matches the
  // trainer's current target-parameter version.
  mutable std::int64_t target_version = -1;
  mutable double cached_y = 0.0;
};

// Fixed-capacity FIFO. Index 0 is always the oldest stored transition.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
    buf_.reserve(capacity);
  }

  void push(Transition t) {
    if (buf_.size() < capacity_) {
      buf_.push_back(std::move(t));
    } else {
      buf_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return buf_.size(); }
  std::size_t capacity() const { return capacity_; }

  const Transition& at(std::size_t i) const { return buf_[(head_ + i) % buf_.size()]; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest element once full
  std::vector<Transition> buf_;
};

}  // namespace marlsched::qmix
