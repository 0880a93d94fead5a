#include "marlsched/simcore/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "marlsched/errors.hpp"

namespace marlsched::simcore {

namespace {

// Unrounded channel quality of one user before fading and bias.
double level_mean(const CellConfig& cfg, double rsrp_dbm) {
  return cfg.cqi_slope * cfg.snr_db(rsrp_dbm) + cfg.cqi_intercept;
}

void admit_user(CellState& s, TtiEvents* ev) {
  UeRecord ue;
  ue.id = static_cast<int>(s.ues.size());
  ue.rsrp_dbm = s.arrivals_rng.uniform(s.cfg.rsrp_min_dbm, s.cfg.rsrp_max_dbm);
  ue.hidden_cqi_offset = s.arrivals_rng.uniform(s.cfg.cqi_offset_min, s.cfg.cqi_offset_max);
  ue.buffer_bits = std::llround(s.arrivals_rng.uniform(s.cfg.buffer_min_bits, s.cfg.buffer_max_bits));
  ue.initial_buffer_bits = ue.buffer_bits;
  ue.cqi_rb.assign(static_cast<std::size_t>(s.cfg.n_rbs()), s.cfg.initial_cqi);
  ue.t_arrival = s.t;
  s.ues.push_back(std::move(ue));
  s.n_active += 1;
  if (ev) ev->admissions.push_back(s.ues.back().id);
}

void maybe_depart(CellState& s, int ue_id, int pending_blocks, TtiEvents* ev) {
  UeRecord& ue = s.ues[static_cast<std::size_t>(ue_id)];
  if (!ue.active || ue.buffer_bits > 0 || pending_blocks > 0) return;
  ue.active = false;
  ue.t_departure = s.t;
  s.n_active -= 1;
  if (ev) ev->departures.push_back(ue_id);
}

}  // namespace

CellState make_initial_state(CellConfig cfg, std::uint64_t seed) {
  cfg.validate();
  CellState s;
  s.cfg = std::move(cfg);
  s.t = 1;
  s.arrivals_rng = RngStream(seed, "arrivals");
  s.fading_rng = RngStream(seed, "fading");
  s.rbg_busy.assign(static_cast<std::size_t>(s.cfg.n_rbgs), 0);
  for (int i = 0; i < s.cfg.initial_users; ++i) admit_user(s, nullptr);
  if (s.cfg.full_buffer)
    for (auto& ue : s.ues) ue.buffer_bits = ue.initial_buffer_bits = INT64_C(1) << 60;
  return s;
}

CellState spawn_arrivals(CellState s, TtiEvents* ev) {
  if (s.cfg.full_buffer) return s;
  const int k = s.arrivals_rng.poisson(s.cfg.arrival_rate);
  const int room = s.cfg.max_users - s.n_active;
  const int admitted = std::min(k, room);
  for (int i = 0; i < admitted; ++i) admit_user(s, ev);
  const int dropped = k - admitted;
  s.dropped_arrivals_total += dropped;
  if (ev) ev->dropped_arrivals += dropped;
  return s;
}

CellState report_cqi(CellState s) {
  for (auto& ue : s.ues) {
    if (!ue.active || ue.t_arrival >= s.t) continue;
    const double base = level_mean(s.cfg, ue.rsrp_dbm);
    for (auto& q : ue.cqi_rb) {
      const double fade = s.fading_rng.normal(0.0, s.cfg.fading_std);
      q = s.cfg.clamp_level(base + fade - ue.hidden_cqi_offset);
    }
  }
  return s;
}

int olla_offset_cqi(int reported_cqi, double alpha, const CellConfig& cfg) {
  return cfg.clamp_level(static_cast<double>(reported_cqi) + alpha);
}

void olla_update(UeRecord& ue, bool ack, const CellConfig& cfg) {
  const double step = ack ? cfg.olla_step_ack : cfg.olla_step_nack;
  ue.olla_alpha = std::clamp(ue.olla_alpha + step, -cfg.olla_clamp, cfg.olla_clamp);
}

std::int64_t tb_bits(const std::vector<int>& levels, const CellConfig& cfg) {
  if (levels.empty()) throw ContractViolation("tb_bits: empty level set");
  long long sum = 0;
  for (int q : levels) {
    if (q < cfg.mcs_min || q > cfg.mcs_max)
      throw ContractViolation("tb_bits: level outside MCS range");
    sum += q;
  }
  const int mcs = static_cast<int>(sum / static_cast<long long>(levels.size()));
  const double bits = static_cast<double>(levels.size()) * cfg.spectral_efficiency(mcs) *
                      static_cast<double>(cfg.res_per_rb);
  return static_cast<std::int64_t>(std::floor(bits));
}

CellState apply_allocation(CellState s, const Allocation& alloc, TtiEvents* ev) {
  if (alloc.rbg_to_ue.size() != static_cast<std::size_t>(s.cfg.n_rbgs))
    throw ContractViolation("apply_allocation: allocation size != n_rbgs");

  // Group granted RBGs per user; validation happens before any mutation.
  std::map<int, std::vector<int>> grants;
  for (int k = 0; k < s.cfg.n_rbgs; ++k) {
    const int ue_id = alloc.rbg_to_ue[static_cast<std::size_t>(k)];
    if (ue_id < 0) continue;
    if (ue_id >= static_cast<int>(s.ues.size()))
      throw ContractViolation("apply_allocation: unknown user " + std::to_string(ue_id));
    if (s.rbg_busy[static_cast<std::size_t>(k)])
      throw ContractViolation("apply_allocation: RBG " + std::to_string(k) + " is busy");
    const UeRecord& ue = s.ues[static_cast<std::size_t>(ue_id)];
    if (!ue.active)
      throw ContractViolation("apply_allocation: user " + std::to_string(ue_id) + " departed");
    if (ue.buffer_bits <= 0)
      throw ContractViolation("apply_allocation: user " + std::to_string(ue_id) + " has no data");
    grants[ue_id].push_back(k);
  }

  for (auto& [ue_id, rbgs] : grants) {
    UeRecord& ue = s.ues[static_cast<std::size_t>(ue_id)];
    if (s.harq_in_flight(ue_id) >= s.cfg.n_harq) {
      if (ev) ev->harq_skips += 1;
      continue;
    }
    std::vector<int> levels;
    levels.reserve(rbgs.size() * static_cast<std::size_t>(s.cfg.rbs_per_rbg));
    for (int k : rbgs) {
      for (int r = k * s.cfg.rbs_per_rbg; r < (k + 1) * s.cfg.rbs_per_rbg; ++r)
        levels.push_back(olla_offset_cqi(ue.cqi_rb[static_cast<std::size_t>(r)], ue.olla_alpha, s.cfg));
    }
    long long lsum = 0;
    for (int q : levels) lsum += q;
    const int mcs = static_cast<int>(lsum / static_cast<long long>(levels.size()));
    const std::int64_t nominal = tb_bits(levels, s.cfg);
    const std::int64_t payload = std::min(nominal, ue.buffer_bits);
    if (!s.cfg.full_buffer) ue.buffer_bits -= payload;
    ue.scheduled_times += 1;

    HarqProcess proc;
    proc.ue_id = ue_id;
    proc.tb_bits = payload;
    proc.mcs = mcs;
    proc.rbgs = rbgs;
    proc.attempts = 1;
    proc.feedback_due = s.t + s.cfg.harq_feedback_period;
    for (int k : rbgs) s.rbg_busy[static_cast<std::size_t>(k)] = 1;
    s.harq.push_back(std::move(proc));

    if (ev) ev->transmissions.push_back({ue_id, payload, mcs, rbgs, false});
  }
  return s;
}

CellState resolve_feedback(CellState s, TtiEvents* ev) {
  std::vector<HarqProcess> due, keep;
  for (auto& proc : s.harq)
    (proc.feedback_due == s.t ? due : keep).push_back(std::move(proc));
  s.harq = std::move(keep);

  // A user departs only after its last block resolves, so count what is still
  // unresolved: retained processes plus the due ones not yet handled.
  std::vector<int> pending(s.ues.size(), 0);
  for (const auto& proc : s.harq) pending[static_cast<std::size_t>(proc.ue_id)] += 1;
  for (const auto& proc : due) pending[static_cast<std::size_t>(proc.ue_id)] += 1;

  for (auto& proc : due) {
    UeRecord& ue = s.ues[static_cast<std::size_t>(proc.ue_id)];

    // True supportable level per RB, redrawn per attempt; the report bias
    // distorts only reports, never the channel itself.
    const double base = level_mean(s.cfg, ue.rsrp_dbm);
    long long tsum = 0;
    const auto n_levels = proc.rbgs.size() * static_cast<std::size_t>(s.cfg.rbs_per_rbg);
    for (std::size_t i = 0; i < n_levels; ++i)
      tsum += s.cfg.clamp_level(base + s.fading_rng.normal(0.0, s.cfg.fading_std));
    const int truth = static_cast<int>(tsum / static_cast<long long>(n_levels));
    const bool ack = proc.mcs <= truth;

    olla_update(ue, ack, s.cfg);
    if (ack) {
      pending[static_cast<std::size_t>(proc.ue_id)] -= 1;
      ue.delivered_bits += proc.tb_bits;
      for (int k : proc.rbgs) s.rbg_busy[static_cast<std::size_t>(k)] = 0;
      if (ev) ev->feedback.push_back({proc.ue_id, proc.tb_bits, true, proc.attempts, false, proc.rbgs});
      maybe_depart(s, proc.ue_id, pending[static_cast<std::size_t>(proc.ue_id)], ev);
    } else if (proc.attempts >= s.cfg.harq_max_attempts) {
      pending[static_cast<std::size_t>(proc.ue_id)] -= 1;
      ue.lost_bits += proc.tb_bits;
      for (int k : proc.rbgs) s.rbg_busy[static_cast<std::size_t>(k)] = 0;
      if (ev) ev->feedback.push_back({proc.ue_id, proc.tb_bits, false, proc.attempts, true, proc.rbgs});
      maybe_depart(s, proc.ue_id, pending[static_cast<std::size_t>(proc.ue_id)], ev);
    } else {
      // Same block, same MCS, same RBGs; they stay busy through the retry.
      proc.attempts += 1;
      proc.feedback_due = s.t + s.cfg.harq_feedback_period;
      if (ev) {
        ev->feedback.push_back({proc.ue_id, proc.tb_bits, false, proc.attempts - 1, false, proc.rbgs});
        ev->transmissions.push_back({proc.ue_id, proc.tb_bits, proc.mcs, proc.rbgs, true});
      }
      s.harq.push_back(std::move(proc));
    }
  }
  return s;
}

std::pair<CellState, TtiEvents> step(CellState s, const Allocation& alloc) {
  TtiEvents ev;
  ev.t = s.t;
  s = resolve_feedback(std::move(s), &ev);
  s = apply_allocation(std::move(s), alloc, &ev);

  // Per-TTI scheduled bits feed the historical rate of every active user;
  // unscheduled users average in a zero.
  std::vector<std::int64_t> granted(s.ues.size(), 0);
  for (const auto& tx : ev.transmissions)
    if (!tx.retransmission) granted[static_cast<std::size_t>(tx.ue_id)] = tx.tb_bits;
  for (auto& ue : s.ues)
    if (ue.active)
      ue.hist_rate = ma_update(ue.hist_rate, static_cast<double>(granted[static_cast<std::size_t>(ue.id)]),
                               s.cfg.ma_coeff);

  s.t += 1;
  s = spawn_arrivals(std::move(s), &ev);
  s = report_cqi(std::move(s));
  return {std::move(s), std::move(ev)};
}

SchedulerView make_scheduler_view(const CellState& s) {
  SchedulerView v;
  v.t = s.t;
  v.cfg = s.cfg;
  v.rbg_busy = s.rbg_busy;
  for (const auto& ue : s.ues) {
    if (!ue.active) continue;
    v.ues.push_back({ue.id, ue.buffer_bits, ue.cqi_rb, ue.olla_alpha, ue.hist_rate,
                     ue.scheduled_times, ue.rsrp_dbm, ue.t_arrival});
  }
  return v;
}

std::int64_t SchedulerView::rate_bits(int ue_idx, int rbg) const {
  const UeView& ue = ues[static_cast<std::size_t>(ue_idx)];
  std::vector<int> levels;
  levels.reserve(static_cast<std::size_t>(cfg.rbs_per_rbg));
  for (int r = rbg * cfg.rbs_per_rbg; r < (rbg + 1) * cfg.rbs_per_rbg; ++r)
    levels.push_back(olla_offset_cqi(ue.cqi_rb[static_cast<std::size_t>(r)], ue.olla_alpha, cfg));
  return tb_bits(levels, cfg);
}

}  // namespace marlsched::simcore
