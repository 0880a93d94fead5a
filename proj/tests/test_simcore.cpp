#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "marlsched/errors.hpp"
#include "marlsched/schedulers/schedulers.hpp"
#include "marlsched/simcore/simulator.hpp"
#include "marlsched/simcore/trace.hpp"
#include "oracles.hpp"

using namespace marlsched;
using namespace marlsched::simcore;

namespace {

Allocation idle_alloc(const CellConfig& cfg) {
  Allocation a;
  a.rbg_to_ue.assign(static_cast<std::size_t>(cfg.n_rbgs), -1);
  return a;
}

// Single user on a single RBG; grants it whenever free and the buffer has data.
Allocation greedy_single(const CellState& s, const SchedulerView& view) {
  Allocation a = idle_alloc(s.cfg);
  if (!view.ues.empty() && view.ues.front().buffer_bits > 0 && !view.rbg_busy[0])
    a.rbg_to_ue[0] = view.ues.front().id;
  return a;
}

}  // namespace

TEST_CASE("rng streams are deterministic and independent") {
  RngStream a(42, "arrivals"), b(42, "arrivals"), c(42, "fading");
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform01();
    CHECK(x == b.uniform01());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(a == b);
  bool all_equal = true;
  RngStream a2(42, "arrivals");
  for (int i = 0; i < 10; ++i) all_equal &= (a2.uniform01() == c.uniform01());
  CHECK_FALSE(all_equal);
}

TEST_CASE("rng samplers have the right first moments") {
  RngStream r(7);
  const int n = 40000;
  double psum = 0.0, nsum = 0.0, nsq = 0.0;
  for (int i = 0; i < n; ++i) psum += r.poisson(3.0);
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(0.0, 2.0);
    nsum += x;
    nsq += x * x;
  }
  CHECK(psum / n == doctest::Approx(3.0).epsilon(0.02));
  CHECK(std::abs(nsum / n) < 0.05);
  CHECK(nsq / n == doctest::Approx(4.0).epsilon(0.03));
  RngStream z(9);
  for (int i = 0; i < 100; ++i) CHECK(z.poisson(0.0) == 0);
}

TEST_CASE("default efficiency table is monotone with the standard low half") {
  const auto se = default_se_table();
  REQUIRE(se.size() == 29);
  CHECK(se[0] == doctest::Approx(0.1523));
  CHECK(se[3] == doctest::Approx(0.6016));
  CHECK(se[14] == doctest::Approx(5.5547));
  for (std::size_t i = 1; i < se.size(); ++i) CHECK(se[i] > se[i - 1]);
}

TEST_CASE("transport block size matches hand-computed values") {
  const CellConfig cfg = default_cell_config();
  // 3 RBs at level 4: floor(3 * 0.6016 * 168) = floor(303.2064)
  CHECK(tb_bits({4, 4, 4}, cfg) == 303);
  // 9 RBs at level 4: floor(9 * 0.6016 * 168) = floor(909.6192)
  CHECK(tb_bits({4, 4, 4, 4, 4, 4, 4, 4, 4}, cfg) == 909);
  // mixed levels: mean floor(16/3) = 5, floor(3 * 0.8770 * 168) = floor(442.008)
  CHECK(tb_bits({4, 5, 7}, cfg) == 442);
  CHECK_THROWS_AS(tb_bits({}, cfg), ContractViolation);
  CHECK_THROWS_AS(tb_bits({0, 4}, cfg), ContractViolation);
  CHECK_THROWS_AS(tb_bits({30}, cfg), ContractViolation);
}

TEST_CASE("transport block size agrees with the reference on random level sets") {
  const CellConfig cfg = default_cell_config();
  RngStream r(123);
  for (int it = 0; it < 50; ++it) {
    const int n = 1 + static_cast<int>(r.uniform_int(12));
    std::vector<int> levels;
    for (int i = 0; i < n; ++i) levels.push_back(1 + static_cast<int>(r.uniform_int(29)));
    CHECK(tb_bits(levels, cfg) == oracles::tb_bits_reference(levels));
  }
}

TEST_CASE("snr math on a narrowband configuration") {
  CellConfig cfg = default_cell_config();
  cfg.rbg_bandwidth_hz = 540e3;  // 180 kHz per RB
  // -99 - (-174 + 10*log10(1.8e5)) = 22.45
  CHECK(cfg.snr_db(-99.0) == doctest::Approx(22.45).epsilon(0.005));
}

TEST_CASE("olla correction rounds half away from zero and clamps") {
  const CellConfig cfg = default_cell_config();
  CHECK(olla_offset_cqi(4, 0.0, cfg) == 4);
  CHECK(olla_offset_cqi(4, 0.49, cfg) == 4);
  CHECK(olla_offset_cqi(4, 0.5, cfg) == 5);
  CHECK(olla_offset_cqi(4, -0.5, cfg) == 4);  // 3.5 rounds away from zero
  CHECK(olla_offset_cqi(4, -0.51, cfg) == 3);
  CHECK(olla_offset_cqi(29, 5.0, cfg) == 29);
  CHECK(olla_offset_cqi(1, -5.0, cfg) == 1);
}

TEST_CASE("olla update steps and clamps") {
  const CellConfig cfg = default_cell_config();
  UeRecord ue;
  olla_update(ue, true, cfg);
  CHECK(ue.olla_alpha == doctest::Approx(0.1));
  olla_update(ue, false, cfg);
  CHECK(ue.olla_alpha == doctest::Approx(-0.4));
  ue.olla_alpha = -10.0;
  olla_update(ue, false, cfg);
  CHECK(ue.olla_alpha == -10.0);
  ue.olla_alpha = 10.0;
  olla_update(ue, true, cfg);
  CHECK(ue.olla_alpha == 10.0);
}

TEST_CASE("initial state admits the configured users at the initial level") {
  const CellConfig cfg = default_cell_config();
  const CellState s = make_initial_state(cfg, 17);
  CHECK(s.t == 1);
  REQUIRE(s.ues.size() == 5);
  CHECK(s.n_active == 5);
  for (const auto& ue : s.ues) {
    CHECK(ue.t_arrival == 1);
    CHECK(ue.active);
    CHECK(ue.buffer_bits >= 4000);
    CHECK(ue.buffer_bits <= 100000);
    CHECK(ue.rsrp_dbm >= -100.0);
    CHECK(ue.rsrp_dbm <= -70.0);
    REQUIRE(ue.cqi_rb.size() == 9);
    for (int q : ue.cqi_rb) CHECK(q == cfg.initial_cqi);
  }
  CHECK_THROWS_AS(make_initial_state(CellConfig{}, 1), ConfigError);  // empty se_table
}

TEST_CASE("arrival counts follow the configured rate") {
  CellConfig cfg = default_cell_config();
  cfg.initial_users = 0;
  cfg.max_users = 1 << 20;
  cfg.arrival_rate = 0.01;
  CellState s = make_initial_state(cfg, 99);
  const int kTtis = 100000;
  for (int t = 0; t < kTtis; ++t) {
    s = spawn_arrivals(std::move(s));
    s.t += 1;
  }
  const double expected = cfg.arrival_rate * kTtis;
  const double sigma = std::sqrt(expected);
  CHECK(std::abs(static_cast<double>(s.ues.size()) - expected) < 3.0 * sigma);
  CHECK(s.dropped_arrivals_total == 0);
}

TEST_CASE("admission control caps the active population") {
  CellConfig cfg = default_cell_config();
  cfg.arrival_rate = 5.0;
  CellState s = make_initial_state(cfg, 3);
  for (int t = 0; t < 50; ++t) {
    auto [next, ev] = step(std::move(s), idle_alloc(cfg));
    s = std::move(next);
    CHECK(s.n_active <= cfg.max_users);
  }
  CHECK(s.n_active == cfg.max_users);
  CHECK(s.dropped_arrivals_total > 0);
}

TEST_CASE("reports reflect the hidden bias exactly and skip the arrival tti") {
  CellConfig cfg = default_cell_config();
  cfg.fading_std = 0.0;
  cfg.rsrp_min_dbm = cfg.rsrp_max_dbm = -90.0;
  cfg.initial_users = 1;

  cfg.cqi_offset_min = cfg.cqi_offset_max = 0.0;
  CellState plain = make_initial_state(cfg, 5);
  cfg.cqi_offset_min = cfg.cqi_offset_max = -2.0;
  CellState biased = make_initial_state(cfg, 5);

  // Arrival TTI: both sit at the initial level.
  CHECK(plain.ues[0].cqi_rb[0] == cfg.initial_cqi);
  CHECK(biased.ues[0].cqi_rb[0] == cfg.initial_cqi);

  plain = std::get<0>(step(std::move(plain), idle_alloc(cfg)));
  biased = std::get<0>(step(std::move(biased), idle_alloc(cfg)));
  for (int r = 0; r < cfg.n_rbs(); ++r) {
    CHECK(biased.ues[0].cqi_rb[static_cast<std::size_t>(r)] ==
          plain.ues[0].cqi_rb[static_cast<std::size_t>(r)] + 2);
  }

  // With fading the per-RB reports spread out.
  cfg.fading_std = 2.0;
  cfg.cqi_offset_min = cfg.cqi_offset_max = 0.0;
  CellState faded = make_initial_state(cfg, 5);
  faded = std::get<0>(step(std::move(faded), idle_alloc(cfg)));
  const auto& q = faded.ues[0].cqi_rb;
  CHECK(std::set<int>(q.begin(), q.end()).size() > 1);
}

TEST_CASE("harq lifecycle under forced failures") {
  CellConfig cfg = default_cell_config();
  cfg.n_rbgs = 1;
  cfg.initial_users = 1;
  cfg.arrival_rate = 0.0;
  cfg.fading_std = 0.0;
  cfg.rsrp_min_dbm = cfg.rsrp_max_dbm = -85.0;
  cfg.cqi_offset_min = cfg.cqi_offset_max = -10.0;  // reports 10 levels above truth
  cfg.buffer_min_bits = cfg.buffer_max_bits = 50000.0;

  CellState s = make_initial_state(cfg, 11);
  // First decision happens one TTI after arrival so the report bias is live.
  s = std::get<0>(step(std::move(s), idle_alloc(cfg)));
  REQUIRE(s.t == 2);

  Allocation grant = idle_alloc(cfg);
  grant.rbg_to_ue[0] = 0;
  auto [s1, ev1] = step(std::move(s), grant);
  s = std::move(s1);
  REQUIRE(ev1.transmissions.size() == 1);
  const auto payload = ev1.transmissions[0].tb_bits;
  CHECK(payload > 0);
  CHECK(s.ues[0].buffer_bits == 50000 - payload);
  CHECK(s.ues[0].scheduled_times == 1);
  REQUIRE(s.harq.size() == 1);
  CHECK(s.harq[0].feedback_due == 2 + cfg.harq_feedback_period);

  // While in flight the RBG is busy and cannot be granted.
  CHECK(s.rbg_busy[0] == 1);
  CHECK_THROWS_AS(step(CellState(s), grant), ContractViolation);

  int nacks = 0, retx = 0;
  bool expired = false;
  for (int i = 0; i < 5 * cfg.harq_feedback_period + 2 && !expired; ++i) {
    auto [sn, ev] = step(std::move(s), idle_alloc(cfg));
    s = std::move(sn);
    for (const auto& fb : ev.feedback) {
      CHECK_FALSE(fb.ack);
      CHECK(fb.tb_bits == payload);
      nacks += 1;
      CHECK(fb.attempts == nacks);
      expired |= fb.expired;
    }
    for (const auto& tx : ev.transmissions) {
      CHECK(tx.retransmission);
      CHECK(tx.tb_bits == payload);
      retx += 1;
    }
  }
  CHECK(nacks == cfg.harq_max_attempts);
  CHECK(retx == cfg.harq_max_attempts - 1);
  CHECK(expired);
  CHECK(s.harq.empty());
  CHECK(s.rbg_busy[0] == 0);
  CHECK(s.ues[0].lost_bits == payload);
  CHECK(s.ues[0].delivered_bits == 0);
  CHECK(s.ues[0].active);  // data remains
  CHECK(s.ues[0].olla_alpha == doctest::Approx(5 * cfg.olla_step_nack));
}

TEST_CASE("grants beyond the harq process budget are dropped and counted") {
  CellConfig cfg = default_cell_config();
  cfg.n_harq = 2;
  cfg.harq_feedback_period = 100;
  cfg.initial_users = 1;
  cfg.arrival_rate = 0.0;
  cfg.buffer_min_bits = cfg.buffer_max_bits = 1e6;
  CellState s = make_initial_state(cfg, 2);

  for (int k = 0; k < 3; ++k) {
    Allocation a = idle_alloc(cfg);
    a.rbg_to_ue[static_cast<std::size_t>(k)] = 0;
    auto [sn, ev] = step(std::move(s), a);
    s = std::move(sn);
    if (k < 2) {
      CHECK(ev.transmissions.size() == 1);
      CHECK(ev.harq_skips == 0);
    } else {
      CHECK(ev.transmissions.empty());
      CHECK(ev.harq_skips == 1);
      CHECK(s.rbg_busy[2] == 0);  // skipped grant leaves the RBG idle
    }
  }
  CHECK(s.harq.size() == 2);
  CHECK(s.ues[0].scheduled_times == 2);
}

TEST_CASE("allocation contract violations are rejected") {
  const CellConfig cfg = default_cell_config();
  CellState s = make_initial_state(cfg, 8);
  Allocation a = idle_alloc(cfg);
  a.rbg_to_ue[0] = 99;
  CHECK_THROWS_AS(apply_allocation(CellState(s), a), ContractViolation);
  a.rbg_to_ue = {0, -1};
  CHECK_THROWS_AS(apply_allocation(CellState(s), a), ContractViolation);
}

TEST_CASE("a served user departs with its rate frozen") {
  CellConfig cfg = default_cell_config();
  cfg.n_rbgs = 1;
  cfg.initial_users = 1;
  cfg.arrival_rate = 0.0;
  cfg.fading_std = 0.0;
  cfg.cqi_offset_min = cfg.cqi_offset_max = 0.0;
  cfg.rsrp_min_dbm = cfg.rsrp_max_dbm = -70.0;  // strong channel, truth far above mcs
  cfg.buffer_min_bits = cfg.buffer_max_bits = 300.0;

  CellState s = make_initial_state(cfg, 4);
  Allocation grant = idle_alloc(cfg);
  grant.rbg_to_ue[0] = 0;
  auto [s1, ev1] = step(std::move(s), grant);
  s = std::move(s1);
  CHECK(ev1.transmissions[0].tb_bits == 300);  // payload capped by the buffer
  CHECK(s.ues[0].buffer_bits == 0);
  CHECK(s.ues[0].active);  // still awaiting feedback

  TtiEvents dep_ev;
  while (s.ues[0].active) {
    auto [sn, ev] = step(std::move(s), idle_alloc(cfg));
    s = std::move(sn);
    if (!ev.departures.empty()) dep_ev = ev;
  }
  CHECK(s.ues[0].t_departure == 1 + cfg.harq_feedback_period);
  CHECK(s.ues[0].delivered_bits == 300);
  CHECK(s.n_active == 0);
  REQUIRE(dep_ev.feedback.size() == 1);
  CHECK(dep_ev.feedback[0].ack);
  CHECK(dep_ev.departures == std::vector<int>{0});
}

TEST_CASE("olla alpha cycles within one nack step under perfect reporting") {
  CellConfig cfg = default_cell_config();
  cfg.n_rbgs = 1;
  cfg.initial_users = 1;
  cfg.arrival_rate = 0.0;
  cfg.fading_std = 0.0;
  cfg.cqi_offset_min = cfg.cqi_offset_max = 0.0;
  cfg.full_buffer = true;

  CellState s = make_initial_state(cfg, 21);
  int acks = 0, nacks = 0;
  double lo = 0.0, hi = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const Allocation a = greedy_single(s, make_scheduler_view(s));
    auto [sn, ev] = step(std::move(s), a);
    s = std::move(sn);
    for (const auto& fb : ev.feedback) (fb.ack ? acks : nacks) += 1;
    lo = std::min(lo, s.ues[0].olla_alpha);
    hi = std::max(hi, s.ues[0].olla_alpha);
  }
  // One overshoot costs a single NACK step on the way up; a failed block is
  // retried at its original MCS, so it can cost up to the full attempt budget
  // on the way down. Alpha never gets anywhere near the clamp.
  CHECK(hi <= -cfg.olla_step_nack + 1e-12);
  CHECK(lo >= cfg.harq_max_attempts * cfg.olla_step_nack - 1e-12);
  CHECK(hi < cfg.olla_clamp);
  CHECK(lo > -cfg.olla_clamp);
  CHECK(acks + nacks > 1000);
  CHECK(static_cast<double>(acks) / (acks + nacks) > 0.7);
}

TEST_CASE("olla recovers throughput lost to an over-reporting bias") {
  CellConfig base = default_cell_config();
  base.n_rbgs = 1;
  base.initial_users = 1;
  base.arrival_rate = 0.0;
  base.fading_std = 0.0;
  base.rsrp_min_dbm = base.rsrp_max_dbm = -85.0;
  base.cqi_offset_min = base.cqi_offset_max = -2.0;  // reports two levels above truth
  base.full_buffer = true;

  auto run = [](CellConfig cfg) {
    CellState s = make_initial_state(cfg, 33);
    int acks = 0, fbs = 0;
    for (int t = 0; t < 4000; ++t) {
      const Allocation a = greedy_single(s, make_scheduler_view(s));
      auto [sn, ev] = step(std::move(s), a);
      s = std::move(sn);
      for (const auto& fb : ev.feedback) {
        fbs += 1;
        acks += fb.ack;
      }
    }
    return std::pair<double, std::int64_t>{fbs ? static_cast<double>(acks) / fbs : 0.0,
                                           s.ues[0].delivered_bits};
  };

  CellConfig no_olla = base;
  no_olla.olla_step_ack = no_olla.olla_step_nack = 0.0;
  const auto [ratio_off, bits_off] = run(no_olla);
  const auto [ratio_on, bits_on] = run(base);

  // Without correction only the very first block (sent at the conservative
  // initial level) gets through; every later block is two levels hot.
  CHECK(ratio_off < 0.01);
  CHECK(ratio_on > 0.5);
  CHECK(bits_on > bits_off);
}

TEST_CASE("random traffic traces conserve bits and respect harq bounds") {
  CellConfig cfg = default_cell_config();
  cfg.arrival_rate = 0.05;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto [s, trace] = oracles::run_episode(
        make_initial_state(cfg, seed), 3000, [](const CellState&, const SchedulerView& v) {
          return schedulers::pf_allocate(v, {});
        });
    const auto bad = oracles::walk_trace(cfg, trace);
    for (const auto& msg : bad) MESSAGE(msg);
    CHECK(bad.empty());
    CHECK(s.ues.size() > 5);  // traffic actually churned
  }
}

TEST_CASE("same seed reproduces a trace byte for byte") {
  CellConfig cfg = default_cell_config();
  cfg.arrival_rate = 0.05;
  auto run = [&cfg](std::uint64_t seed) {
    auto [s, trace] = oracles::run_episode(
        make_initial_state(cfg, seed), 400, [](const CellState&, const SchedulerView& v) {
          return schedulers::pf_allocate(v, {});
        });
    return trace_to_jsonl(trace);
  };
  CHECK(run(7) == run(7));
  CHECK(run(7) != run(8));
}

TEST_CASE("trace round-trips through jsonl") {
  CellConfig cfg = default_cell_config();
  cfg.arrival_rate = 0.05;
  auto [s, trace] = oracles::run_episode(
      make_initial_state(cfg, 5), 200, [](const CellState&, const SchedulerView& v) {
        return schedulers::pf_allocate(v, {});
      });
  const auto path =
      (std::filesystem::temp_directory_path() / "marlsched_roundtrip_trace.jsonl").string();
  write_trace_jsonl(path, trace);
  const Trace back = read_trace_jsonl(path);
  std::filesystem::remove(path);
  CHECK(trace_to_jsonl(back) == trace_to_jsonl(trace));
}

TEST_CASE("scheduler view exposes only bs-visible fields of active users") {
  CellConfig cfg = default_cell_config();
  cfg.arrival_rate = 0.05;
  auto [s, trace] = oracles::run_episode(
      make_initial_state(cfg, 13), 600, [](const CellState&, const SchedulerView& v) {
        return schedulers::pf_allocate(v, {});
      });
  const SchedulerView v = make_scheduler_view(s);
  CHECK(v.ues.size() == static_cast<std::size_t>(s.n_active));
  for (std::size_t i = 1; i < v.ues.size(); ++i) CHECK(v.ues[i].id > v.ues[i - 1].id);
  for (const auto& ue : v.ues) CHECK(s.ues[static_cast<std::size_t>(ue.id)].active);
}
