#include "marlsched/simcore/trace.hpp"

#include <fstream>

#include <json.hpp>

#include "marlsched/errors.hpp"

namespace marlsched::simcore {

using nlohmann::json;

std::vector<UeSnapshot> snapshot_users(const CellState& s) {
  std::vector<UeSnapshot> out;
  out.reserve(static_cast<std::size_t>(s.n_active));
  for (const auto& ue : s.ues) {
    if (!ue.active) continue;
    out.push_back({ue.id, ue.rsrp_dbm, ue.buffer_bits, ue.delivered_bits, ue.lost_bits,
                   ue.cqi_rb, ue.olla_alpha, ue.scheduled_times, ue.hist_rate, ue.t_arrival});
  }
  return out;
}

namespace {

json to_json(const UeSnapshot& u) {
  return json{{"id", u.id},
              {"rsrp", u.rsrp_dbm},
              {"buffer", u.buffer_bits},
              {"delivered", u.delivered_bits},
              {"lost", u.lost_bits},
              {"cqi_rb", u.cqi_rb},
              {"alpha", u.olla_alpha},
              {"scheduled", u.scheduled_times},
              {"hudr", u.hist_rate},
              {"t_arrival", u.t_arrival}};
}

UeSnapshot ue_from_json(const json& j) {
  UeSnapshot u;
  u.id = j.at("id");
  u.rsrp_dbm = j.at("rsrp");
  u.buffer_bits = j.at("buffer");
  u.delivered_bits = j.at("delivered");
  u.lost_bits = j.at("lost");
  u.cqi_rb = j.at("cqi_rb").get<std::vector<int>>();
  u.olla_alpha = j.at("alpha");
  u.scheduled_times = j.at("scheduled");
  u.hist_rate = j.at("hudr");
  u.t_arrival = j.at("t_arrival");
  return u;
}

json to_json(const TtiRecord& r) {
  json ues = json::array();
  for (const auto& u : r.ues) ues.push_back(to_json(u));
  json fb = json::array();
  for (const auto& f : r.feedback)
    fb.push_back({{"ue", f.ue_id}, {"bits", f.tb_bits}, {"ack", f.ack},
                  {"attempts", f.attempts}, {"expired", f.expired}, {"rbgs", f.rbgs}});
  json tx = json::array();
  for (const auto& t : r.transmissions)
    tx.push_back({{"ue", t.ue_id}, {"bits", t.tb_bits}, {"mcs", t.mcs},
                  {"rbgs", t.rbgs}, {"retx", t.retransmission}});
  return json{{"tti", r.t},
              {"ues", std::move(ues)},
              {"rbg_busy", r.rbg_busy},
              {"alloc", r.alloc},
              {"feedback", std::move(fb)},
              {"tx", std::move(tx)},
              {"departures", r.departures},
              {"admissions", r.admissions},
              {"dropped_arrivals", r.dropped_arrivals},
              {"harq_skips", r.harq_skips}};
}

TtiRecord record_from_json(const json& j) {
  TtiRecord r;
  r.t = j.at("tti");
  for (const auto& u : j.at("ues")) r.ues.push_back(ue_from_json(u));
  r.rbg_busy = j.at("rbg_busy").get<std::vector<std::uint8_t>>();
  r.alloc = j.at("alloc").get<std::vector<int>>();
  for (const auto& f : j.at("feedback"))
    r.feedback.push_back({f.at("ue"), f.at("bits"), f.at("ack"), f.at("attempts"),
                   f.at("expired"), f.at("rbgs").get<std::vector<int>>()});
  for (const auto& t : j.at("tx"))
    r.transmissions.push_back({t.at("ue"), t.at("bits"), t.at("mcs"),
                               t.at("rbgs").get<std::vector<int>>(), t.at("retx")});
  r.departures = j.at("departures").get<std::vector<int>>();
  r.admissions = j.at("admissions").get<std::vector<int>>();
  r.dropped_arrivals = j.at("dropped_arrivals");
  r.harq_skips = j.at("harq_skips");
  return r;
}

}  // namespace

std::string trace_to_jsonl(const Trace& trace) {
  std::string out;
  for (const auto& r : trace) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_trace_jsonl(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open trace file for writing: " + path);
  out << trace_to_jsonl(trace);
}

Trace read_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  Trace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    trace.push_back(record_from_json(json::parse(line)));
  }
  return trace;
}

}  // namespace marlsched::simcore
