#pragma once

// Independent re-computations used to check the library from the outside.
// Everything here is deliberately written against the trace/event record
// alone, with its own bookkeeping and its own frozen constants, so a bug in
// the library cannot hide in the oracle.

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "marlsched/simcore/simulator.hpp"
#include "marlsched/simcore/trace.hpp"

namespace oracles {

using marlsched::simcore::Allocation;
using marlsched::simcore::CellConfig;
using marlsched::simcore::CellState;
using marlsched::simcore::SchedulerView;
using marlsched::simcore::Trace;
using marlsched::simcore::TtiRecord;

// Drives an episode with an arbitrary decision function, recording the
// decision-time context and the step's events exactly as the harness does.
template <typename DecideFn>
std::pair<CellState, Trace> run_episode(CellState s, int ttis, DecideFn decide) {
  Trace trace;
  std::vector<int> pending;
  for (const auto& ue : s.ues) pending.push_back(ue.id);
  for (int i = 0; i < ttis; ++i) {
    TtiRecord rec;
    rec.t = s.t;
    rec.ues = marlsched::simcore::snapshot_users(s);
    rec.rbg_busy = s.rbg_busy;
    rec.admissions = pending;
    const SchedulerView view = make_scheduler_view(s);
    const Allocation alloc = decide(s, view);
    rec.alloc = alloc.rbg_to_ue;
    auto [next, ev] = marlsched::simcore::step(std::move(s), alloc);
    s = std::move(next);
    rec.feedback = ev.feedback;
    rec.transmissions = ev.transmissions;
    rec.departures = ev.departures;
    rec.dropped_arrivals = ev.dropped_arrivals;
    rec.harq_skips = ev.harq_skips;
    pending = ev.admissions;
    trace.push_back(std::move(rec));
  }
  return {std::move(s), std::move(trace)};
}

// Replays a trace with independent buffer/HARQ/RBG bookkeeping and returns
// human-readable violations (empty means the trace is internally consistent
// and every bit is conserved).
inline std::vector<std::string> walk_trace(const CellConfig& cfg, const Trace& trace) {
  std::vector<std::string> bad;
  auto flag = [&bad](int t, const std::string& what) {
    std::ostringstream os;
    os << "tti " << t << ": " << what;
    bad.push_back(os.str());
  };

  struct Block {
    std::int64_t bits;
    std::vector<int> rbgs;
    int attempts;
  };
  struct User {
    std::int64_t initial = -1;
    std::int64_t buffer = 0;
    std::int64_t delivered = 0;
    std::int64_t lost = 0;
    std::vector<Block> in_flight;
    bool departed = false;
  };
  std::map<int, User> users;
  std::vector<int> rbg_owner(static_cast<std::size_t>(cfg.n_rbgs), -1);

  auto in_flight_of = [&](int ue) -> std::vector<Block>& { return users[ue].in_flight; };
  auto find_block = [&](int ue, const std::vector<int>& rbgs) -> Block* {
    for (auto& b : in_flight_of(ue))
      if (b.rbgs == rbgs) return &b;
    return nullptr;
  };

  for (std::size_t ri = 0; ri < trace.size(); ++ri) {
    const TtiRecord& rec = trace[ri];

    // Snapshot must agree with the walker's post-history bookkeeping.
    for (const auto& ue : rec.ues) {
      auto it = users.find(ue.id);
      if (it == users.end()) {
        users[ue.id] = {ue.buffer_bits, ue.buffer_bits, 0, 0, {}, false};
        if (ue.delivered_bits != 0 || ue.lost_bits != 0)
          flag(rec.t, "fresh user with nonzero delivery counters");
      } else {
        const User& u = it->second;
        if (u.departed) flag(rec.t, "departed user back in snapshot");
        if (!cfg.full_buffer && ue.buffer_bits != u.buffer)
          flag(rec.t, "snapshot buffer mismatch for user " + std::to_string(ue.id));
        if (ue.delivered_bits != u.delivered)
          flag(rec.t, "snapshot delivered mismatch for user " + std::to_string(ue.id));
        if (ue.lost_bits != u.lost)
          flag(rec.t, "snapshot lost mismatch for user " + std::to_string(ue.id));
      }
    }

    // Busy flags at decision time must equal the walker's occupancy.
    for (int k = 0; k < cfg.n_rbgs; ++k) {
      const bool busy = rec.rbg_busy[static_cast<std::size_t>(k)] != 0;
      if (busy != (rbg_owner[static_cast<std::size_t>(k)] >= 0))
        flag(rec.t, "rbg_busy[" + std::to_string(k) + "] disagrees with in-flight blocks");
      if (busy && rec.alloc[static_cast<std::size_t>(k)] >= 0)
        flag(rec.t, "allocation granted a busy RBG");
    }

    // Feedback resolves existing blocks.
    for (const auto& fb : rec.feedback) {
      Block* b = find_block(fb.ue_id, fb.rbgs);
      if (!b) {
        flag(rec.t, "feedback for unknown block of user " + std::to_string(fb.ue_id));
        continue;
      }
      if (b->bits != fb.tb_bits) flag(rec.t, "feedback bits mismatch");
      if (b->attempts != fb.attempts) flag(rec.t, "feedback attempts mismatch");
      if (fb.ack || fb.expired) {
        (fb.ack ? users[fb.ue_id].delivered : users[fb.ue_id].lost) += fb.tb_bits;
        for (int k : fb.rbgs) rbg_owner[static_cast<std::size_t>(k)] = -1;
        auto& fl = in_flight_of(fb.ue_id);
        for (std::size_t i = 0; i < fl.size(); ++i)
          if (&fl[i] == b) {
            fl.erase(fl.begin() + static_cast<std::ptrdiff_t>(i));
            break;
          }
      } else {
        if (fb.attempts >= cfg.harq_max_attempts)
          flag(rec.t, "plain NACK at exhausted attempt budget");
        b->attempts += 1;
      }
    }

    // Transmissions: retries must hold their RBGs, new blocks must take free
    // ones and drain the buffer.
    for (const auto& tx : rec.transmissions) {
      if (tx.retransmission) {
        Block* b = find_block(tx.ue_id, tx.rbgs);
        if (!b || b->bits != tx.tb_bits) {
          flag(rec.t, "retransmission of unknown block");
          continue;
        }
        for (int k : tx.rbgs)
          if (rbg_owner[static_cast<std::size_t>(k)] != tx.ue_id)
            flag(rec.t, "retransmission on RBG not held by user");
        continue;
      }
      User& u = users[tx.ue_id];
      if (static_cast<int>(u.in_flight.size()) >= cfg.n_harq)
        flag(rec.t, "more than n_harq blocks in flight");
      for (int k : tx.rbgs) {
        if (rbg_owner[static_cast<std::size_t>(k)] != -1) flag(rec.t, "new block on occupied RBG");
        rbg_owner[static_cast<std::size_t>(k)] = tx.ue_id;
      }
      if (!cfg.full_buffer) {
        if (tx.tb_bits > u.buffer) flag(rec.t, "payload exceeds buffer");
        u.buffer -= tx.tb_bits;
      }
      u.in_flight.push_back({tx.tb_bits, tx.rbgs, 1});
    }

    for (int id : rec.departures) {
      User& u = users[id];
      if (u.buffer != 0) flag(rec.t, "departure with data left");
      if (!u.in_flight.empty()) flag(rec.t, "departure with blocks in flight");
      u.departed = true;
    }
  }

  // Global conservation: every admitted bit is delivered, lost, waiting or in
  // flight.
  for (const auto& [id, u] : users) {
    if (cfg.full_buffer) continue;
    std::int64_t pending = 0;
    for (const auto& b : u.in_flight) pending += b.bits;
    if (u.initial != u.delivered + u.lost + u.buffer + pending)
      flag(-1, "bit conservation broken for user " + std::to_string(id));
  }
  return bad;
}

// Transport block size recomputed from scratch: own copy of the efficiency
// constants, integer mean-floor, one final floor.
inline std::int64_t tb_bits_reference(const std::vector<int>& levels) {
  static const double kEff[29] = {
      0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
      3.3223, 3.9023, 4.5234, 5.1152, 5.5547, 5.5647, 5.5747, 5.5847, 5.5947, 5.6047,
      5.6147, 5.6247, 5.6347, 5.6447, 5.6547, 5.6647, 5.6747, 5.6847, 5.6947};
  long long sum = 0;
  for (int q : levels) sum += q;
  const int mcs = static_cast<int>(sum / static_cast<long long>(levels.size()));
  const double raw = static_cast<double>(levels.size()) * kEff[mcs - 1] * 168.0;
  return static_cast<std::int64_t>(raw);  // raw >= 0, truncation == floor
}

}  // namespace oracles
