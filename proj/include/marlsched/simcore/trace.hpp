#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "marlsched/simcore/state.hpp"

namespace marlsched::simcore {

// Decision-time view of one active user, captured before the step ran.
struct UeSnapshot {
  int id = -1;
  double rsrp_dbm = 0.0;
  std::int64_t buffer_bits = 0;
  std::int64_t delivered_bits = 0;
  std::int64_t lost_bits = 0;
  std::vector<int> cqi_rb;
  double olla_alpha = 0.0;
  int scheduled_times = 0;
  double hist_rate = 0.0;
  int t_arrival = 0;
};

// One TTI of an episode: the context the policy saw (ues, rbg_busy), its
// decision (alloc) and everything the step produced. `admissions` lists users
// newly visible at this TTI; departures happened during it. Every KPI is
// recomputable from these records alone.
struct TtiRecord {
  int t = 0;
  std::vector<UeSnapshot> ues;
  std::vector<std::uint8_t> rbg_busy;
  std::vector<int> alloc;
  std::vector<FeedbackEvent> feedback;
  std::vector<TbEvent> transmissions;
  std::vector<int> departures;
  std::vector<int> admissions;
  int dropped_arrivals = 0;
  int harq_skips = 0;
};

using Trace = std::vector<TtiRecord>;

std::vector<UeSnapshot> snapshot_users(const CellState& s);

// One JSON object per line, schema documented in the README.
std::string trace_to_jsonl(const Trace& trace);
void write_trace_jsonl(const std::string& path, const Trace& trace);
Trace read_trace_jsonl(const std::string& path);

}  // namespace marlsched::simcore
