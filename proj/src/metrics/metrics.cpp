#include "marlsched/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "marlsched/errors.hpp"

namespace marlsched::metrics {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void RateLedger::on_admission(int ue_id, int t) {
  if (ue_id != static_cast<int>(users_.size()))
    throw ContractViolation("ledger: non-contiguous user id " + std::to_string(ue_id));
  users_.push_back({t, -1, {}});
}

void RateLedger::on_ack(int ue_id, int t, std::int64_t bits) {
  users_.at(static_cast<std::size_t>(ue_id)).acks.emplace_back(t, bits);
}

void RateLedger::on_departure(int ue_id, int t) {
  users_.at(static_cast<std::size_t>(ue_id)).t_departure = t;
}

int RateLedger::n_arrived(int t) const {
  int n = 0;
  for (const auto& u : users_) n += (u.t_arrival <= t);
  return n;
}

bool RateLedger::arrived(int ue_id, int t) const {
  return ue_id >= 0 && ue_id < n_users() &&
         users_[static_cast<std::size_t>(ue_id)].t_arrival <= t;
}

double RateLedger::user_rate(int ue_id, int t) const {
  const User& u = users_.at(static_cast<std::size_t>(ue_id));
  const int tau = (u.t_departure >= 0) ? std::min(t, u.t_departure) : t;
  if (tau <= u.t_arrival) return 0.0;
  std::int64_t delivered = 0;
  for (const auto& [ta, bits] : u.acks)
    if (ta <= tau) delivered += bits;
  return static_cast<double>(delivered) / static_cast<double>(tau - u.t_arrival);
}

std::vector<double> RateLedger::rates(int t) const {
  std::vector<double> out;
  for (int id = 0; id < n_users(); ++id)
    if (arrived(id, t)) out.push_back(user_rate(id, t));
  return out;
}

double RateLedger::sum_rates(int t) const {
  double s = 0.0;
  for (double r : rates(t)) s += r;
  return s;
}

RateLedger build_ledger(const simcore::Trace& trace) {
  RateLedger ledger;
  for (const auto& rec : trace) {
    // Snapshot users unseen so far are admissions (covers the initial TTI).
    for (const auto& ue : rec.ues)
      if (ue.id >= ledger.n_users()) ledger.on_admission(ue.id, ue.t_arrival);
    for (const auto& fb : rec.feedback)
      if (fb.ack) ledger.on_ack(fb.ue_id, rec.t, fb.tb_bits);
    for (int id : rec.departures) ledger.on_departure(id, rec.t);
  }
  return ledger;
}

void ledger_apply_initial(RateLedger& ledger, const simcore::CellState& state) {
  for (const auto& ue : state.ues)
    if (ue.active) ledger.on_admission(ue.id, ue.t_arrival);
}

void ledger_apply_events(RateLedger& ledger, const simcore::CellState& state_after,
                         const simcore::TtiEvents& ev) {
  for (int id : ev.admissions)
    ledger.on_admission(id, state_after.ues[static_cast<std::size_t>(id)].t_arrival);
  for (const auto& fb : ev.feedback)
    if (fb.ack) ledger.on_ack(fb.ue_id, ev.t, fb.tb_bits);
  for (int id : ev.departures) ledger.on_departure(id, ev.t);
}

double audr(const RateLedger& ledger, int t) {
  const auto r = ledger.rates(t);
  if (r.empty()) return kNaN;
  double s = 0.0;
  for (double v : r) s += v;
  return s / static_cast<double>(r.size());
}

double five_tile(const RateLedger& ledger, int t) {
  auto r = ledger.rates(t);
  if (r.empty()) return kNaN;
  std::sort(r.begin(), r.end());
  const auto idx = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(r.size()))));
  return r[idx - 1];
}

double jain_index(const std::vector<double>& x) {
  if (x.empty()) return kNaN;
  double s = 0.0, s2 = 0.0;
  for (double v : x) {
    s += v;
    s2 += v * v;
  }
  if (s2 == 0.0) return kNaN;
  return (s * s) / (static_cast<double>(x.size()) * s2);
}

ResidenceStats residence_stats(const simcore::Trace& trace) {
  ResidenceStats st;
  if (trace.empty()) return st;
  const int n_rbgs = static_cast<int>(trace.front().rbg_busy.size());
  st.rbg_count_hist.assign(static_cast<std::size_t>(n_rbgs), 0);

  std::vector<int> t_arrival, tx_ttis;
  std::vector<int> last_tx_t;  // dedupes multiple events per (user, TTI)
  auto ensure = [&](int id) {
    if (id >= static_cast<int>(t_arrival.size())) {
      t_arrival.resize(static_cast<std::size_t>(id) + 1, -1);
      tx_ttis.resize(static_cast<std::size_t>(id) + 1, 0);
      last_tx_t.resize(static_cast<std::size_t>(id) + 1, -1);
    }
  };

  long residence_sum = 0, tx_sum = 0;
  for (const auto& rec : trace) {
    for (const auto& ue : rec.ues) {
      ensure(ue.id);
      if (t_arrival[static_cast<std::size_t>(ue.id)] < 0)
        t_arrival[static_cast<std::size_t>(ue.id)] = ue.t_arrival;
    }
    for (const auto& tx : rec.transmissions) {
      ensure(tx.ue_id);
      if (last_tx_t[static_cast<std::size_t>(tx.ue_id)] != rec.t) {
        last_tx_t[static_cast<std::size_t>(tx.ue_id)] = rec.t;
        tx_ttis[static_cast<std::size_t>(tx.ue_id)] += 1;
        st.total_tx_ttis += 1;
      }
      if (!tx.retransmission && !tx.rbgs.empty())
        st.rbg_count_hist[tx.rbgs.size() - 1] += 1;
    }
    for (int id : rec.departures) {
      ensure(id);
      st.completed_users += 1;
      residence_sum += rec.t - t_arrival[static_cast<std::size_t>(id)];
      tx_sum += tx_ttis[static_cast<std::size_t>(id)];
    }
  }
  if (st.completed_users > 0) {
    st.mean_residence_ttis = static_cast<double>(residence_sum) / static_cast<double>(st.completed_users);
    st.mean_transmission_ttis = static_cast<double>(tx_sum) / static_cast<double>(st.completed_users);
  }
  return st;
}

Eigen::MatrixXd feature_correlation(const simcore::Trace& trace) {
  if (trace.empty()) return {};
  const int n_rbgs = static_cast<int>(trace.front().rbg_busy.size());
  constexpr int kFeatures = 6;
  Eigen::MatrixXd out(n_rbgs, kFeatures);

  for (int k = 0; k < n_rbgs; ++k) {
    std::vector<std::array<double, kFeatures>> feats;
    std::vector<double> chosen;
    for (const auto& rec : trace) {
      // Only TTIs where this RBG was actually up for grabs are decisions.
      if (rec.rbg_busy[static_cast<std::size_t>(k)]) continue;
      const int rbs = static_cast<int>(rec.ues.empty() ? 0 : rec.ues.front().cqi_rb.size()) / n_rbgs;
      for (const auto& ue : rec.ues) {
        double cqi_sum = 0.0;
        for (int r = k * rbs; r < (k + 1) * rbs; ++r)
          cqi_sum += static_cast<double>(ue.cqi_rb[static_cast<std::size_t>(r)]);
        feats.push_back({ue.rsrp_dbm, rbs > 0 ? cqi_sum / rbs : 0.0,
                         static_cast<double>(ue.buffer_bits),
                         static_cast<double>(ue.scheduled_times), ue.olla_alpha, ue.hist_rate});
        chosen.push_back(rec.alloc[static_cast<std::size_t>(k)] == ue.id ? 1.0 : 0.0);
      }
    }
    const auto n = static_cast<double>(chosen.size());
    for (int f = 0; f < kFeatures; ++f) {
      double mx = 0.0, my = 0.0;
      for (std::size_t i = 0; i < chosen.size(); ++i) {
        mx += feats[i][static_cast<std::size_t>(f)];
        my += chosen[i];
      }
      mx /= n;
      my /= n;
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (std::size_t i = 0; i < chosen.size(); ++i) {
        const double dx = feats[i][static_cast<std::size_t>(f)] - mx;
        const double dy = chosen[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
      }
      out(k, f) = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : kNaN;
    }
  }
  return out;
}

}  // namespace marlsched::metrics
