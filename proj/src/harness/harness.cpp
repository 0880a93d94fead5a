#include "marlsched/harness/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "marlsched/errors.hpp"
#include "marlsched/qmix/policy.hpp"
#include "marlsched/simcore/rng.hpp"

namespace fs = std::filesystem;

namespace marlsched::harness {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not a number in " + what + ": '" + s + "'");
  }
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

// Strict JSON section reader: unknown keys are configuration mistakes.
void check_keys(const nlohmann::json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in config section '" + section + "'");
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in config section '" + section + "'");
  }
}

struct SeedStats {
  double audr = 0.0, five = 0.0, jain = 0.0;
};

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

SchedulerSpec parse_scheduler_spec(const std::string& spec) {
  SchedulerSpec out;
  out.label = spec;
  const auto parts = split(spec, ':');
  const std::string& name = parts[0];
  if (name == "rrf" || name == "op") {
    if (parts.size() > 1) throw ConfigError("scheduler '" + name + "' takes no parameters");
    out.kind = name == "rrf" ? SchedulerSpec::Kind::Rrf : SchedulerSpec::Kind::Op;
    return out;
  }
  if (name == "pf") {
    out.kind = SchedulerSpec::Kind::Pf;
    if (parts.size() > 3) throw ConfigError("pf spec takes at most two exponents: '" + spec + "'");
    if (parts.size() > 1) out.pf.alpha1 = parse_double(parts[1], "scheduler spec '" + spec + "'");
    if (parts.size() > 2) out.pf.alpha2 = parse_double(parts[2], "scheduler spec '" + spec + "'");
    return out;
  }
  if (name == "marl") {
    out.kind = SchedulerSpec::Kind::Marl;
    if (parts.size() < 2 || parts[1].empty())
      throw ConfigError("marl spec needs a checkpoint path: '" + spec + "'");
    if (parts.size() > 3) throw ConfigError("marl spec takes a path and optional epsilon: '" + spec + "'");
    out.checkpoint = parts[1];
    if (parts.size() > 2) out.epsilon = parse_double(parts[2], "scheduler spec '" + spec + "'");
    return out;
  }
  throw ConfigError("unknown scheduler '" + name + "' (expected rrf, op, pf or marl)");
}

std::unique_ptr<schedulers::AllocPolicy> make_policy(const SchedulerSpec& spec,
                                                     const simcore::CellConfig& cell,
                                                     int episode_length) {
  switch (spec.kind) {
    case SchedulerSpec::Kind::Pf:
      return std::make_unique<schedulers::PfPolicy>(spec.pf);
    case SchedulerSpec::Kind::Op:
      return std::make_unique<schedulers::OpPolicy>();
    case SchedulerSpec::Kind::Rrf:
      return std::make_unique<schedulers::RrfPolicy>();
    case SchedulerSpec::Kind::Marl:
      return std::make_unique<qmix::MarlPolicy>(spec.checkpoint, cell, episode_length,
                                                spec.epsilon);
  }
  throw ConfigError("unhandled scheduler kind");
}

std::vector<std::uint64_t> EvalConfig::seed_list() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n_seeds; ++i) out.push_back(seed_base + static_cast<std::uint64_t>(i));
  return out;
}

void EvalConfig::validate() const {
  if (schedulers.empty()) throw ConfigError("eval needs at least one scheduler");
  for (const auto& s : schedulers) (void)parse_scheduler_spec(s);
  if (episode_length < 1) throw ConfigError("episode_length must be >= 1");
  const auto list = seed_list();
  if (list.empty()) throw ConfigError("eval needs at least one seed");
  std::set<std::uint64_t> uniq(list.begin(), list.end());
  if (uniq.size() != list.size()) throw ConfigError("seeds must be distinct");
}

nlohmann::json cell_to_json(const simcore::CellConfig& c) {
  return {{"tx_power_per_rb_dbm", c.tx_power_per_rb_dbm},
          {"rbs_per_rbg", c.rbs_per_rbg},
          {"n_rbgs", c.n_rbgs},
          {"rbg_bandwidth_hz", c.rbg_bandwidth_hz},
          {"noise_density_dbm_hz", c.noise_density_dbm_hz},
          {"mcs_min", c.mcs_min},
          {"mcs_max", c.mcs_max},
          {"se_table", c.se_table},
          {"res_per_rb", c.res_per_rb},
          {"cqi_slope", c.cqi_slope},
          {"cqi_intercept", c.cqi_intercept},
          {"fading_std", c.fading_std},
          {"cqi_offset_min", c.cqi_offset_min},
          {"cqi_offset_max", c.cqi_offset_max},
          {"olla_step_ack", c.olla_step_ack},
          {"olla_step_nack", c.olla_step_nack},
          {"olla_clamp", c.olla_clamp},
          {"n_harq", c.n_harq},
          {"harq_feedback_period", c.harq_feedback_period},
          {"harq_max_attempts", c.harq_max_attempts},
          {"arrival_rate", c.arrival_rate},
          {"initial_users", c.initial_users},
          {"max_users", c.max_users},
          {"buffer_min_bits", c.buffer_min_bits},
          {"buffer_max_bits", c.buffer_max_bits},
          {"rsrp_min_dbm", c.rsrp_min_dbm},
          {"rsrp_max_dbm", c.rsrp_max_dbm},
          {"initial_cqi", c.initial_cqi},
          {"full_buffer", c.full_buffer},
          {"ma_coeff", c.ma_coeff}};
}

simcore::CellConfig cell_from_json(const nlohmann::json& j) {
  simcore::CellConfig c = simcore::default_cell_config();
  check_keys(j, "cell",
             {"tx_power_per_rb_dbm", "rbs_per_rbg", "n_rbgs", "rbg_bandwidth_hz",
              "noise_density_dbm_hz", "mcs_min", "mcs_max", "se_table", "res_per_rb", "cqi_slope",
              "cqi_intercept", "fading_std", "cqi_offset_min", "cqi_offset_max", "olla_step_ack",
              "olla_step_nack", "olla_clamp", "n_harq", "harq_feedback_period",
              "harq_max_attempts", "arrival_rate", "initial_users", "max_users",
              "buffer_min_bits", "buffer_max_bits", "rsrp_min_dbm", "rsrp_max_dbm", "initial_cqi",
              "full_buffer", "ma_coeff"});
  read_field(j, "tx_power_per_rb_dbm", c.tx_power_per_rb_dbm, "cell");
  read_field(j, "rbs_per_rbg", c.rbs_per_rbg, "cell");
  read_field(j, "n_rbgs", c.n_rbgs, "cell");
  read_field(j, "rbg_bandwidth_hz", c.rbg_bandwidth_hz, "cell");
  read_field(j, "noise_density_dbm_hz", c.noise_density_dbm_hz, "cell");
  read_field(j, "mcs_min", c.mcs_min, "cell");
  read_field(j, "mcs_max", c.mcs_max, "cell");
  read_field(j, "se_table", c.se_table, "cell");
  read_field(j, "res_per_rb", c.res_per_rb, "cell");
  read_field(j, "cqi_slope", c.cqi_slope, "cell");
  read_field(j, "cqi_intercept", c.cqi_intercept, "cell");
  read_field(j, "fading_std", c.fading_std, "cell");
  read_field(j, "cqi_offset_min", c.cqi_offset_min, "cell");
  read_field(j, "cqi_offset_max", c.cqi_offset_max, "cell");
  read_field(j, "olla_step_ack", c.olla_step_ack, "cell");
  read_field(j, "olla_step_nack", c.olla_step_nack, "cell");
  read_field(j, "olla_clamp", c.olla_clamp, "cell");
  read_field(j, "n_harq", c.n_harq, "cell");
  read_field(j, "harq_feedback_period", c.harq_feedback_period, "cell");
  read_field(j, "harq_max_attempts", c.harq_max_attempts, "cell");
  read_field(j, "arrival_rate", c.arrival_rate, "cell");
  read_field(j, "initial_users", c.initial_users, "cell");
  read_field(j, "max_users", c.max_users, "cell");
  read_field(j, "buffer_min_bits", c.buffer_min_bits, "cell");
  read_field(j, "buffer_max_bits", c.buffer_max_bits, "cell");
  read_field(j, "rsrp_min_dbm", c.rsrp_min_dbm, "cell");
  read_field(j, "rsrp_max_dbm", c.rsrp_max_dbm, "cell");
  read_field(j, "initial_cqi", c.initial_cqi, "cell");
  read_field(j, "full_buffer", c.full_buffer, "cell");
  read_field(j, "ma_coeff", c.ma_coeff, "cell");
  return c;
}

nlohmann::json train_to_json(const qmix::TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"ttis_per_epoch", t.ttis_per_epoch},
          {"batches_per_tti", t.batches_per_tti},
          {"batch_size", t.batch_size},
          {"replay_capacity", t.replay_capacity},
          {"lr0", t.lr0},
          {"lr_decay", t.lr_decay},
          {"lr_floor_frac", t.lr_floor_frac},
          {"momentum", t.momentum},
          {"grad_clip", t.grad_clip},
          {"gamma", t.gamma},
          {"epsilon", t.epsilon},
          {"centralized", t.centralized},
          {"use_target_net", t.use_target_net},
          {"target_sync_period", t.target_sync_period},
          {"reward_delta_norm", t.reward_delta_norm},
          {"loss_abort_threshold", t.loss_abort_threshold},
          {"hidden", t.hidden},
          {"mix_hidden", t.mix_hidden},
          {"seed", t.seed},
          {"divergence_dump_path", t.divergence_dump_path}};
}

namespace {

qmix::TrainConfig train_from_json(const nlohmann::json& j, const simcore::CellConfig& cell) {
  qmix::TrainConfig t;
  t.cell = cell;
  check_keys(j, "train",
             {"epochs", "ttis_per_epoch", "batches_per_tti", "batch_size", "replay_capacity",
              "lr0", "lr_decay", "lr_floor_frac", "momentum", "grad_clip", "gamma", "epsilon",
              "centralized",
              "use_target_net", "target_sync_period", "reward_delta_norm", "loss_abort_threshold",
              "hidden", "mix_hidden", "seed", "divergence_dump_path"});
  read_field(j, "epochs", t.epochs, "train");
  read_field(j, "ttis_per_epoch", t.ttis_per_epoch, "train");
  read_field(j, "batches_per_tti", t.batches_per_tti, "train");
  read_field(j, "batch_size", t.batch_size, "train");
  read_field(j, "replay_capacity", t.replay_capacity, "train");
  read_field(j, "lr0", t.lr0, "train");
  read_field(j, "lr_decay", t.lr_decay, "train");
  read_field(j, "lr_floor_frac", t.lr_floor_frac, "train");
  read_field(j, "momentum", t.momentum, "train");
  read_field(j, "grad_clip", t.grad_clip, "train");
  read_field(j, "gamma", t.gamma, "train");
  read_field(j, "epsilon", t.epsilon, "train");
  read_field(j, "centralized", t.centralized, "train");
  read_field(j, "use_target_net", t.use_target_net, "train");
  read_field(j, "target_sync_period", t.target_sync_period, "train");
  read_field(j, "reward_delta_norm", t.reward_delta_norm, "train");
  read_field(j, "loss_abort_threshold", t.loss_abort_threshold, "train");
  read_field(j, "hidden", t.hidden, "train");
  read_field(j, "mix_hidden", t.mix_hidden, "train");
  read_field(j, "seed", t.seed, "train");
  read_field(j, "divergence_dump_path", t.divergence_dump_path, "train");
  return t;
}

EvalConfig eval_from_json(const nlohmann::json& j) {
  EvalConfig e;
  check_keys(j, "eval",
             {"schedulers", "seeds", "n_seeds", "seed_base", "episode_length", "output_dir",
              "write_traces"});
  read_field(j, "schedulers", e.schedulers, "eval");
  read_field(j, "seeds", e.seeds, "eval");
  read_field(j, "n_seeds", e.n_seeds, "eval");
  read_field(j, "seed_base", e.seed_base, "eval");
  read_field(j, "episode_length", e.episode_length, "eval");
  read_field(j, "output_dir", e.output_dir, "eval");
  read_field(j, "write_traces", e.write_traces, "eval");
  return e;
}

}  // namespace

nlohmann::json eval_to_json(const EvalConfig& e) {
  return {{"schedulers", e.schedulers}, {"seeds", e.seeds},
          {"n_seeds", e.n_seeds},       {"seed_base", e.seed_base},
          {"episode_length", e.episode_length}, {"output_dir", e.output_dir},
          {"write_traces", e.write_traces}};
}

nlohmann::json experiment_to_json(const ExperimentConfig& cfg) {
  return {{"cell", cell_to_json(cfg.cell)},
          {"train", train_to_json(cfg.train)},
          {"eval", eval_to_json(cfg.eval)}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  check_keys(j, "(root)", {"cell", "train", "eval"});
  ExperimentConfig cfg;
  if (j.contains("cell")) cfg.cell = cell_from_json(j.at("cell"));
  cfg.train = j.contains("train") ? train_from_json(j.at("train"), cfg.cell)
                                  : [&] {
                                      qmix::TrainConfig t;
                                      t.cell = cfg.cell;
                                      return t;
                                    }();
  if (j.contains("eval")) cfg.eval = eval_from_json(j.at("eval"));
  cfg.cell.validate();
  cfg.train.validate();
  cfg.eval.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return experiment_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::uint64_t h = simcore::fnv1a64(experiment_to_json(cfg).dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

simcore::Trace run_policy_episode(const simcore::CellConfig& cell,
                                  schedulers::AllocPolicy& policy, std::uint64_t seed, int ttis) {
  if (ttis < 1) throw ContractViolation("episode length must be >= 1");
  simcore::CellState s = simcore::make_initial_state(cell, seed);
  simcore::Trace trace;
  trace.reserve(static_cast<std::size_t>(ttis));
  std::vector<int> pending;
  for (const auto& ue : s.ues) pending.push_back(ue.id);
  for (int i = 0; i < ttis; ++i) {
    simcore::TtiRecord rec;
    rec.t = s.t;
    rec.ues = simcore::snapshot_users(s);
    rec.rbg_busy = s.rbg_busy;
    rec.admissions = pending;
    const simcore::SchedulerView view = simcore::make_scheduler_view(s);
    const simcore::Allocation alloc = policy.decide(s, view);
    rec.alloc = alloc.rbg_to_ue;
    auto [next, ev] = simcore::step(std::move(s), alloc);
    s = std::move(next);
    rec.feedback = ev.feedback;
    rec.transmissions = ev.transmissions;
    rec.departures = ev.departures;
    rec.dropped_arrivals = ev.dropped_arrivals;
    rec.harq_skips = ev.harq_skips;
    pending = ev.admissions;
    trace.push_back(std::move(rec));
  }
  return trace;
}

RunKpis kpis_from_trace(const simcore::Trace& trace) {
  if (trace.empty()) throw ContractViolation("cannot compute KPIs of an empty trace");
  const metrics::RateLedger ledger = metrics::build_ledger(trace);
  const int t_end = trace.back().t + 1;
  RunKpis k;
  k.audr = metrics::audr(ledger, t_end);
  k.five_tudr = metrics::five_tile(ledger, t_end);
  k.jain = metrics::jain_index(ledger.rates(t_end));
  const metrics::ResidenceStats rs = metrics::residence_stats(trace);
  k.completed_users = rs.completed_users;
  k.mean_residence_ttis = rs.mean_residence_ttis;
  k.mean_transmission_ttis = rs.mean_transmission_ttis;
  return k;
}

namespace {

std::vector<RunKpis> run_spec_over_seeds(const simcore::CellConfig& cell,
                                         const SchedulerSpec& spec,
                                         const std::vector<std::uint64_t>& seeds,
                                         int episode_length, const std::string& trace_dir) {
  auto policy = make_policy(spec, cell, episode_length);
  std::vector<RunKpis> out;
  for (std::uint64_t seed : seeds) {
    policy->reset();
    const simcore::Trace trace = run_policy_episode(cell, *policy, seed, episode_length);
    if (!trace_dir.empty()) {
      const std::string path =
          trace_dir + "/trace_" + sanitize(spec.label) + "_seed" + std::to_string(seed) + ".jsonl";
      simcore::write_trace_jsonl(path, trace);
    }
    out.push_back(kpis_from_trace(trace));
  }
  return out;
}

SeedStats mean_stats(const std::vector<RunKpis>& runs) {
  SeedStats m;
  for (const auto& k : runs) {
    m.audr += k.audr;
    m.five += k.five_tudr;
    m.jain += k.jain;
  }
  const double n = static_cast<double>(runs.size());
  m.audr /= n;
  m.five /= n;
  m.jain /= n;
  return m;
}

}  // namespace

std::vector<RunRow> run_eval(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.cell.validate();
  cfg.eval.validate();
  ensure_dir(cfg.eval.output_dir);
  const std::string hash = config_hash(cfg);
  const auto seeds = cfg.eval.seed_list();

  std::vector<RunRow> rows;
  std::vector<std::string> run_lines{
      "scheduler,seed,audr,five_tudr,jain,completed_users,mean_residence_ttis,"
      "mean_transmission_ttis,config_hash"};
  std::vector<std::string> summary_lines{
      "scheduler,n_seeds,mean_audr,mean_five_tudr,mean_jain,config_hash"};

  for (const auto& spec_str : cfg.eval.schedulers) {
    const SchedulerSpec spec = parse_scheduler_spec(spec_str);
    const auto runs = run_spec_over_seeds(cfg.cell, spec, seeds, cfg.eval.episode_length,
                                          cfg.eval.write_traces ? cfg.eval.output_dir : "");
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const RunKpis& k = runs[i];
      rows.push_back({spec.label, seeds[i], k});
      std::ostringstream os;
      os << spec.label << ',' << seeds[i] << ',' << format_number(k.audr) << ','
         << format_number(k.five_tudr) << ',' << format_number(k.jain) << ','
         << k.completed_users << ',' << format_number(k.mean_residence_ttis) << ','
         << format_number(k.mean_transmission_ttis) << ',' << hash;
      run_lines.push_back(os.str());
    }
    const SeedStats m = mean_stats(runs);
    std::ostringstream os;
    os << spec.label << ',' << seeds.size() << ',' << format_number(m.audr) << ','
       << format_number(m.five) << ',' << format_number(m.jain) << ',' << hash;
    summary_lines.push_back(os.str());
    log << "eval " << spec.label << ": mean audr " << format_number(m.audr)
        << ", mean 5tudr " << format_number(m.five) << " over " << seeds.size() << " seeds\n";
  }

  write_lines(cfg.eval.output_dir + "/eval_runs.csv", run_lines);
  write_lines(cfg.eval.output_dir + "/eval_summary.csv", summary_lines);
  log << "wrote " << cfg.eval.output_dir << "/eval_runs.csv and eval_summary.csv\n";
  return rows;
}

std::vector<double> default_pf_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(static_cast<double>(i) / 50.0);
  return grid;
}

std::vector<double> run_pf_sweep(const ExperimentConfig& cfg, const std::vector<double>& grid,
                                 std::ostream& log) {
  if (grid.empty()) throw ConfigError("pf sweep needs a non-empty alpha1 grid");
  cfg.cell.validate();
  cfg.eval.validate();
  ensure_dir(cfg.eval.output_dir);
  const std::string hash = config_hash(cfg);
  const auto seeds = cfg.eval.seed_list();

  std::vector<std::string> lines{"label,alpha1,n_seeds,mean_audr,mean_five_tudr,config_hash"};
  std::vector<double> curve;
  for (double a1 : grid) {
    SchedulerSpec spec;
    spec.kind = SchedulerSpec::Kind::Pf;
    spec.pf.alpha1 = a1;
    spec.pf.alpha2 = 1.0;
    spec.label = "pf:" + format_number(a1) + ":1";
    const auto runs = run_spec_over_seeds(cfg.cell, spec, seeds, cfg.eval.episode_length, "");
    const SeedStats m = mean_stats(runs);
    curve.push_back(m.five);
    std::ostringstream os;
    os << spec.label << ',' << format_number(a1) << ',' << seeds.size() << ','
       << format_number(m.audr) << ',' << format_number(m.five) << ',' << hash;
    lines.push_back(os.str());
    log << "sweep alpha1=" << format_number(a1) << ": mean 5tudr " << format_number(m.five)
        << '\n';
  }
  for (const char* ref : {"rrf", "op"}) {
    const SchedulerSpec spec = parse_scheduler_spec(ref);
    const auto runs = run_spec_over_seeds(cfg.cell, spec, seeds, cfg.eval.episode_length, "");
    const SeedStats m = mean_stats(runs);
    std::ostringstream os;
    os << spec.label << ",," << seeds.size() << ',' << format_number(m.audr) << ','
       << format_number(m.five) << ',' << hash;
    lines.push_back(os.str());
    log << "sweep reference " << ref << ": mean 5tudr " << format_number(m.five) << '\n';
  }
  write_lines(cfg.eval.output_dir + "/pf_sweep.csv", lines);
  log << "wrote " << cfg.eval.output_dir << "/pf_sweep.csv\n";
  return curve;
}

std::vector<CompareSummary> run_compare(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.cell.validate();
  cfg.eval.validate();
  if (cfg.eval.schedulers.size() < 2)
    throw ConfigError("compare needs at least two schedulers (first one is the subject)");
  ensure_dir(cfg.eval.output_dir);
  const std::string hash = config_hash(cfg);
  const auto seeds = cfg.eval.seed_list();

  std::vector<std::vector<RunKpis>> all;
  std::vector<SchedulerSpec> specs;
  for (const auto& s : cfg.eval.schedulers) {
    specs.push_back(parse_scheduler_spec(s));
    all.push_back(
        run_spec_over_seeds(cfg.cell, specs.back(), seeds, cfg.eval.episode_length, ""));
  }

  std::vector<std::string> run_lines{"pair,seed,audr_diff,five_tudr_diff,config_hash"};
  std::vector<std::string> cdf_lines{"pair,metric,diff,cdf,config_hash"};
  std::vector<std::string> summary_lines{
      "pair,n_seeds,mean_audr_diff,mean_five_tudr_diff,config_hash"};
  std::vector<CompareSummary> out;

  for (std::size_t b = 1; b < all.size(); ++b) {
    const std::string pair = specs[0].label + "-vs-" + specs[b].label;
    std::vector<double> d_audr, d_five;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      d_audr.push_back(all[0][i].audr - all[b][i].audr);
      d_five.push_back(all[0][i].five_tudr - all[b][i].five_tudr);
      std::ostringstream os;
      os << pair << ',' << seeds[i] << ',' << format_number(d_audr.back()) << ','
         << format_number(d_five.back()) << ',' << hash;
      run_lines.push_back(os.str());
    }
    const auto emit_cdf = [&](const char* metric, std::vector<double> d) {
      std::sort(d.begin(), d.end());
      for (std::size_t i = 0; i < d.size(); ++i) {
        std::ostringstream os;
        os << pair << ',' << metric << ',' << format_number(d[i]) << ','
           << format_number(static_cast<double>(i + 1) / static_cast<double>(d.size())) << ','
           << hash;
        cdf_lines.push_back(os.str());
      }
    };
    emit_cdf("audr", d_audr);
    emit_cdf("five_tudr", d_five);

    CompareSummary cs;
    cs.pair = pair;
    for (double d : d_audr) cs.mean_audr_diff += d;
    for (double d : d_five) cs.mean_five_tudr_diff += d;
    cs.mean_audr_diff /= static_cast<double>(seeds.size());
    cs.mean_five_tudr_diff /= static_cast<double>(seeds.size());
    out.push_back(cs);
    std::ostringstream os;
    os << pair << ',' << seeds.size() << ',' << format_number(cs.mean_audr_diff) << ','
       << format_number(cs.mean_five_tudr_diff) << ',' << hash;
    summary_lines.push_back(os.str());
    log << "compare " << pair << ": mean audr diff " << format_number(cs.mean_audr_diff)
        << ", mean 5tudr diff " << format_number(cs.mean_five_tudr_diff) << '\n';
  }

  write_lines(cfg.eval.output_dir + "/compare_runs.csv", run_lines);
  write_lines(cfg.eval.output_dir + "/compare_cdf.csv", cdf_lines);
  write_lines(cfg.eval.output_dir + "/compare_summary.csv", summary_lines);
  log << "wrote " << cfg.eval.output_dir << "/compare_{runs,cdf,summary}.csv\n";
  return out;
}

void run_analyze(const std::vector<std::string>& trace_paths,
                 const std::vector<int>& snapshot_ttis, const std::string& output_dir,
                 std::ostream& log) {
  if (trace_paths.empty()) throw ConfigError("analyze needs at least one trace file");
  ensure_dir(output_dir);

  static const char* kFeatureNames[6] = {"rsrp",            "rbg_cqi",    "buffer",
                                         "scheduled_times", "olla_alpha", "hist_rate"};

  std::vector<std::string> summary_lines{
      "trace,ttis,audr,five_tudr,jain,completed_users,mean_residence_ttis,"
      "mean_transmission_ttis,total_tx_ttis"};
  std::vector<std::string> share_lines{"trace,rbgs_spanned,tti_count,share"};
  std::vector<std::string> corr_lines{"trace,rbg,feature,correlation"};
  std::vector<std::string> snap_lines{"trace,t,ue_id,rbg,chosen"};

  for (const auto& path : trace_paths) {
    const simcore::Trace trace = simcore::read_trace_jsonl(path);
    if (trace.empty()) throw ConfigError("trace file is empty: " + path);
    const RunKpis k = kpis_from_trace(trace);
    const metrics::ResidenceStats rs = metrics::residence_stats(trace);
    {
      std::ostringstream os;
      os << path << ',' << trace.size() << ',' << format_number(k.audr) << ','
         << format_number(k.five_tudr) << ',' << format_number(k.jain) << ','
         << rs.completed_users << ',' << format_number(rs.mean_residence_ttis) << ','
         << format_number(rs.mean_transmission_ttis) << ',' << rs.total_tx_ttis;
      summary_lines.push_back(os.str());
    }

    long total = 0;
    for (long c : rs.rbg_count_hist) total += c;
    for (std::size_t jx = 0; jx < rs.rbg_count_hist.size(); ++jx) {
      std::ostringstream os;
      os << path << ',' << (jx + 1) << ',' << rs.rbg_count_hist[jx] << ','
         << format_number(total > 0 ? static_cast<double>(rs.rbg_count_hist[jx]) /
                                          static_cast<double>(total)
                                    : 0.0);
      share_lines.push_back(os.str());
    }

    const Eigen::MatrixXd corr = metrics::feature_correlation(trace);
    for (Eigen::Index r = 0; r < corr.rows(); ++r)
      for (Eigen::Index c = 0; c < corr.cols(); ++c) {
        std::ostringstream os;
        os << path << ',' << r << ',' << kFeatureNames[c] << ',' << format_number(corr(r, c));
        corr_lines.push_back(os.str());
      }

    for (int t : snapshot_ttis) {
      const simcore::TtiRecord* rec = nullptr;
      for (const auto& r : trace)
        if (r.t == t) rec = &r;
      if (!rec) throw ConfigError("snapshot TTI " + std::to_string(t) + " not in trace " + path);
      for (const auto& ue : rec->ues)
        for (std::size_t kx = 0; kx < rec->alloc.size(); ++kx) {
          std::ostringstream os;
          os << path << ',' << t << ',' << ue.id << ',' << kx << ','
             << (rec->alloc[kx] == ue.id ? 1 : 0);
          snap_lines.push_back(os.str());
        }
    }
    log << "analyzed " << path << " (" << trace.size() << " TTIs)\n";
  }

  write_lines(output_dir + "/analyze_summary.csv", summary_lines);
  write_lines(output_dir + "/analyze_rbg_share.csv", share_lines);
  write_lines(output_dir + "/analyze_correlation.csv", corr_lines);
  write_lines(output_dir + "/analyze_snapshots.csv", snap_lines);
  log << "wrote " << output_dir << "/analyze_{summary,rbg_share,correlation,snapshots}.csv\n";
}

}  // namespace marlsched::harness
