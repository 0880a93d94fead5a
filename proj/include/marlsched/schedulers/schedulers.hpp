#pragma once

#include <utility>
#include <vector>

#include "marlsched/simcore/simulator.hpp"
#include "marlsched/simcore/view.hpp"

namespace marlsched::schedulers {

// Proportional-fair exponents. alpha1 weighs the instantaneous achievable
// rate, alpha2 the accumulated historical rate; (1, 1) is classic PF,
// (1, 0) ignores history, (0, 1) chases the most starved user.
struct PfParams {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double eps_hist = 1.0;  // floor for the historical rate in the denominator
};

// Per-RBG independent argmax of R^alpha1 / max(hist, eps)^alpha2 over users
// with data; ties break to the lowest user id; busy RBGs stay idle. Pure
// function of the view.
simcore::Allocation pf_allocate(const simcore::SchedulerView& view, const PfParams& params);

// Moving-average update used for the historical rate: the simulator applies
// it each TTI for every active user with that TTI's scheduled bits (zero when
// unscheduled).
inline double pf_update_ma(double hist, double scheduled_bits, double gamma) {
  return simcore::ma_update(hist, scheduled_bits, gamma);
}

// Opportunistic: per-RBG argmax of the achievable rate alone.
simcore::Allocation op_allocate(const simcore::SchedulerView& view);

// Round-robin full-bandwidth service order. Value-semantic so callers can
// snapshot and replay it.
struct RrfQueue {
  std::vector<int> order;

  // Drops departed users (order preserved) and appends new ones by id.
  void sync(const simcore::SchedulerView& view);
};

// Serves the first queued user with data: it gets every free RBG this TTI.
// Users skipped for an empty buffer rotate to the tail, then the served user
// joins behind them; with nobody servable (or no free RBG) the queue is left
// as-is. Pure function of (view, queue-in).
simcore::Allocation rrf_allocate(const simcore::SchedulerView& view, RrfQueue& queue);

// Decision interface shared by classical rules and learned policies. The
// full state is passed alongside the view for policies that carry their own
// featurization; classical rules must touch only the view.
class AllocPolicy {
 public:
  virtual ~AllocPolicy() = default;
  virtual simcore::Allocation decide(const simcore::CellState& state,
                                     const simcore::SchedulerView& view) = 0;
  virtual void reset() {}
};

class PfPolicy : public AllocPolicy {
 public:
  explicit PfPolicy(PfParams params = {}) : params_(params) {}
  simcore::Allocation decide(const simcore::CellState&, const simcore::SchedulerView& view) override {
    return pf_allocate(view, params_);
  }

 private:
  PfParams params_;
};

class OpPolicy : public AllocPolicy {
 public:
  simcore::Allocation decide(const simcore::CellState&, const simcore::SchedulerView& view) override {
    return op_allocate(view);
  }
};

class RrfPolicy : public AllocPolicy {
 public:
  simcore::Allocation decide(const simcore::CellState&, const simcore::SchedulerView& view) override {
    return rrf_allocate(view, queue_);
  }
  void reset() override { queue_.order.clear(); }

 private:
  RrfQueue queue_;
};

}  // namespace marlsched::schedulers
