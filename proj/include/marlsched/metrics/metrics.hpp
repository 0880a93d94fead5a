#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "marlsched/simcore/trace.hpp"

namespace marlsched::metrics {

// Per-user delivery accounting. A user's rate at time t is the bits
// acknowledged by min(t, t_departure) divided by min(t, t_departure) -
// t_arrival, zero on the arrival TTI itself; after departure the rate stays
// frozen at its departure value.
class RateLedger {
 public:
  void on_admission(int ue_id, int t);
  void on_ack(int ue_id, int t, std::int64_t bits);
  void on_departure(int ue_id, int t);

  int n_users() const { return static_cast<int>(users_.size()); }
  int n_arrived(int t) const;
  bool arrived(int ue_id, int t) const;
  double user_rate(int ue_id, int t) const;

  // Rates of every user arrived by t, ascending id (departed included).
  std::vector<double> rates(int t) const;
  double sum_rates(int t) const;

 private:
  struct User {
    int t_arrival = 0;
    int t_departure = -1;
    std::vector<std::pair<int, std::int64_t>> acks;  // (t, bits), t ascending
  };
  std::vector<User> users_;  // index == user id
};

// Ledger reconstructed from a persisted episode.
RateLedger build_ledger(const simcore::Trace& trace);

// Live-ledger wiring for running episodes: register the users present in a
// freshly created cell, then fold in each step's events (admissions with
// their arrival TTIs, acknowledged deliveries, departures).
void ledger_apply_initial(RateLedger& ledger, const simcore::CellState& state);
void ledger_apply_events(RateLedger& ledger, const simcore::CellState& state_after,
                         const simcore::TtiEvents& ev);

// Mean user delivery rate over everyone who arrived by t.
double audr(const RateLedger& ledger, int t);

// 5th-percentile user delivery rate: ascending order statistic at 1-based
// index max(1, ceil(0.05 * N)).
double five_tile(const RateLedger& ledger, int t);

// (sum x)^2 / (n * sum x^2); NaN for empty or all-zero input.
double jain_index(const std::vector<double>& x);

struct ResidenceStats {
  long completed_users = 0;
  double mean_residence_ttis = 0.0;     // t_departure - t_arrival, departed users
  double mean_transmission_ttis = 0.0;  // TTIs with at least one (re)transmission
  long total_tx_ttis = 0;
  std::vector<long> rbg_count_hist;     // [j-1]: TTIs in which a grant spanned j RBGs
};

ResidenceStats residence_stats(const simcore::Trace& trace);

// Pearson correlation, per RBG, between each decision-time user feature and
// the indicator "this user got that RBG", sampled over the TTIs where the
// RBG was free (busy RBGs leave nothing to decide). Rows: RBGs; columns:
// rsrp, mean CQI on that RBG, buffer, scheduled count, OLLA alpha,
// historical rate. Zero-variance columns yield NaN.
Eigen::MatrixXd feature_correlation(const simcore::Trace& trace);

}  // namespace marlsched::metrics
