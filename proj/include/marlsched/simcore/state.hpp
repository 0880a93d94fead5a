#pragma once

#include <cstdint>
#include <vector>

#include "marlsched/simcore/config.hpp"
#include "marlsched/simcore/rng.hpp"

namespace marlsched::simcore {

// One user. Records are kept for departed users too (metrics freeze their
// rate at departure); `active` distinguishes them. Ids are dense indices into
// CellState::ues and are never reused.
struct UeRecord {
  int id = -1;
  double rsrp_dbm = 0.0;
  double hidden_cqi_offset = 0.0;  // subtracted from reports; invisible to scheduling
  std::int64_t buffer_bits = 0;
  std::int64_t initial_buffer_bits = 0;
  std::vector<int> cqi_rb;      // latest reported CQI per RB
  int scheduled_times = 0;      // TTIs in which at least one RBG was granted
  double olla_alpha = 0.0;
  double hist_rate = 0.0;       // moving average of per-TTI scheduled bits
  std::int64_t delivered_bits = 0;  // acknowledged
  std::int64_t lost_bits = 0;       // expired HARQ packets
  int t_arrival = 0;
  int t_departure = -1;  // -1 while active
  bool active = true;
};

// One in-flight transport block. The registry holds only unresolved entries;
// outcomes are reported through TtiEvents.
struct HarqProcess {
  int ue_id = -1;
  std::int64_t tb_bits = 0;
  int mcs = 0;
  std::vector<int> rbgs;  // RBGs held while in flight
  int attempts = 1;       // transmissions so far, including the first
  int feedback_due = 0;   // TTI at which the pending attempt resolves
};

// Scheduling decision for one TTI: rbg_to_ue[k] is a user id or -1 for idle.
// Busy RBGs (held by in-flight HARQ) must be -1.
struct Allocation {
  std::vector<int> rbg_to_ue;
};

struct TbEvent {
  int ue_id = 0;
  std::int64_t tb_bits = 0;
  int mcs = 0;
  std::vector<int> rbgs;
  bool retransmission = false;
};

struct FeedbackEvent {
  int ue_id = 0;
  std::int64_t tb_bits = 0;
  bool ack = false;
  int attempts = 0;      // attempts consumed by this transport block so far
  bool expired = false;  // true when a NACK exhausted the attempt budget
  std::vector<int> rbgs;
};

// Everything one step produced, in deterministic order.
struct TtiEvents {
  int t = 0;                        // TTI the step executed at
  std::vector<FeedbackEvent> feedback;
  std::vector<TbEvent> transmissions;
  std::vector<int> departures;      // user ids that emptied their buffer
  std::vector<int> admissions;      // user ids spawned for the next TTI
  int dropped_arrivals = 0;
  int harq_skips = 0;               // grants discarded for lack of a free process
};

struct CellState {
  CellConfig cfg;
  int t = 1;
  std::vector<UeRecord> ues;        // index == UeRecord::id
  std::vector<HarqProcess> harq;    // in-flight only
  std::vector<std::uint8_t> rbg_busy;
  RngStream arrivals_rng;
  RngStream fading_rng;
  int n_active = 0;
  std::int64_t dropped_arrivals_total = 0;

  int harq_in_flight(int ue_id) const {
    int n = 0;
    for (const auto& h : harq) n += (h.ue_id == ue_id);
    return n;
  }
};

}  // namespace marlsched::simcore
