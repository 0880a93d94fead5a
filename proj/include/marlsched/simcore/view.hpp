#pragma once

#include <cstdint>
#include <vector>

#include "marlsched/simcore/config.hpp"

namespace marlsched::simcore {

// What the base station legitimately knows about one active user. The hidden
// report bias and the RNG state never appear here; policies built on the view
// are pure functions of it.
struct UeView {
  int id = -1;
  std::int64_t buffer_bits = 0;
  std::vector<int> cqi_rb;  // latest reported CQI per RB
  double olla_alpha = 0.0;
  double hist_rate = 0.0;
  int scheduled_times = 0;
  double rsrp_dbm = 0.0;
  int t_arrival = 0;
};

struct SchedulerView {
  int t = 0;
  CellConfig cfg;  // cell parameters are public knowledge
  std::vector<std::uint8_t> rbg_busy;
  std::vector<UeView> ues;  // active users, ascending id; buffer may be 0

  // Nominal transport block size user `ue_idx` would get on `rbg` alone,
  // at OLLA-corrected levels. The common rate proxy for channel-aware rules.
  std::int64_t rate_bits(int ue_idx, int rbg) const;
};

}  // namespace marlsched::simcore
