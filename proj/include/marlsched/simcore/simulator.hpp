#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "marlsched/simcore/state.hpp"
#include "marlsched/simcore/view.hpp"

namespace marlsched::simcore {

// Exponential moving average used for the historical rate estimate.
inline double ma_update(double prev, double value, double gamma) {
  return (1.0 - gamma) * prev + gamma * value;
}

// Validates cfg, seeds the named sub-streams and admits the initial users at
// t = 1 with the configured initial CQI on every RB. No reports are drawn
// yet: the first scheduling decision sees the initial level.
CellState make_initial_state(CellConfig cfg, std::uint64_t seed);

// Draws k ~ Poisson(arrival_rate), admits min(k, max_users - active) users
// with uniformly drawn RSRP, hidden report bias and buffer size, arriving at
// the current t. Overflow arrivals are counted and dropped without consuming
// attribute draws. No-op in full-buffer mode.
CellState spawn_arrivals(CellState s, TtiEvents* ev = nullptr);

// Redraws every RB report for active users past their arrival TTI:
// report = clamp(round(slope * snr + intercept + fading - hidden_bias)).
// Users on their arrival TTI keep what they have (the initial level).
CellState report_cqi(CellState s);

// OLLA-corrected level: clamp(round(reported + alpha)), rounding half away
// from zero.
int olla_offset_cqi(int reported_cqi, double alpha, const CellConfig& cfg);

// ACK nudges alpha up by olla_step_ack, NACK down by |olla_step_nack|;
// result clamped to [-olla_clamp, olla_clamp].
void olla_update(UeRecord& ue, bool ack, const CellConfig& cfg);

// Transport block size for corrected per-RB levels G:
// floor(|G| * F(floor(mean(G))) * res_per_rb). G must be non-empty.
std::int64_t tb_bits(const std::vector<int>& levels, const CellConfig& cfg);

// Forms one transport block per granted user (RBGs merged, users processed in
// ascending id): corrected levels, TB size capped by the buffer, buffer
// drained by the payload, HARQ process opened and its RBGs marked busy.
// Grants to users with every HARQ process in flight are dropped and counted.
// Throws ContractViolation on malformed allocations (unknown/inactive/empty
// target, busy RBG).
CellState apply_allocation(CellState s, const Allocation& alloc, TtiEvents* ev = nullptr);

// Resolves every process whose feedback is due at the current t, in formation
// order. An attempt succeeds when its MCS does not exceed the floor-mean of
// freshly drawn true per-RB levels (fading redrawn per attempt, no report
// bias). ACK delivers the payload and frees the RBGs; NACK retransmits the
// same block immediately (RBGs stay busy) until the attempt budget is spent,
// at which point the payload is lost. OLLA sees every outcome. A user whose
// buffer is empty departs once its last process resolves.
CellState resolve_feedback(CellState s, TtiEvents* ev = nullptr);

// One TTI: resolve_feedback, apply_allocation, historical-rate update for all
// active users, t += 1, spawn_arrivals, report_cqi. Events carry everything
// the step produced, in deterministic order.
std::pair<CellState, TtiEvents> step(CellState s, const Allocation& alloc);

// BS-visible projection of the state at decision time.
SchedulerView make_scheduler_view(const CellState& s);

}  // namespace marlsched::simcore
