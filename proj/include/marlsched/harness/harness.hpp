#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "marlsched/metrics/metrics.hpp"
#include "marlsched/qmix/trainer.hpp"
#include "marlsched/schedulers/schedulers.hpp"
#include "marlsched/simcore/simulator.hpp"
#include "marlsched/simcore/trace.hpp"

namespace marlsched::harness {

// Scheduler spec strings name one allocation rule each:
//   "rrf"                 round-robin full bandwidth
//   "op"                  opportunistic
//   "pf[:a1[:a2]]"        proportional fair, exponents default 1:1
//   "marl:<ckpt>[:eps]"   frozen checkpoint policy, greedy unless eps given
struct SchedulerSpec {
  enum class Kind { Pf, Op, Rrf, Marl };
  std::string label;  // the original spec string, used as the row label
  Kind kind = Kind::Pf;
  schedulers::PfParams pf{};
  std::string checkpoint;
  double epsilon = 0.0;
};

SchedulerSpec parse_scheduler_spec(const std::string& spec);

// Instantiates the policy behind a spec. MARL specs read their checkpoint
// here; a missing or mismatched file is a ConfigError.
std::unique_ptr<schedulers::AllocPolicy> make_policy(const SchedulerSpec& spec,
                                                     const simcore::CellConfig& cell,
                                                     int episode_length);

// Evaluation-side experiment parameters. Seeds may be listed explicitly;
// otherwise seed_base, seed_base+1, ... seed_base+n_seeds-1 are used.
struct EvalConfig {
  std::vector<std::string> schedulers{"pf", "op", "rrf"};
  std::vector<std::uint64_t> seeds;
  int n_seeds = 100;
  std::uint64_t seed_base = 1;
  int episode_length = 1000;
  std::string output_dir = "out";
  bool write_traces = false;

  std::vector<std::uint64_t> seed_list() const;
  void validate() const;  // distinct seeds, non-empty schedulers, sane lengths
};

// One config file drives every subcommand: the cell, the training recipe,
// and the evaluation layout, mirrored field-for-field into JSON.
struct ExperimentConfig {
  simcore::CellConfig cell = simcore::default_cell_config();
  qmix::TrainConfig train;  // train.cell is kept identical to cell
  EvalConfig eval;
  ExperimentConfig() { train.cell = cell; }
};

nlohmann::json cell_to_json(const simcore::CellConfig& cfg);
simcore::CellConfig cell_from_json(const nlohmann::json& j);
nlohmann::json train_to_json(const qmix::TrainConfig& cfg);
nlohmann::json eval_to_json(const EvalConfig& cfg);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// 16-hex-digit stamp of the canonical config serialization; written into
// every emitted table so rows can be traced back to their exact setup.
std::string config_hash(const ExperimentConfig& cfg);

// Runs one policy for `ttis` steps from a fresh cell and records the full
// per-TTI trace (decision context, allocation, outcomes). Every KPI this
// module reports is recomputed from such a trace, never from live state.
simcore::Trace run_policy_episode(const simcore::CellConfig& cell,
                                  schedulers::AllocPolicy& policy, std::uint64_t seed, int ttis);

struct RunKpis {
  double audr = 0.0;
  double five_tudr = 0.0;
  double jain = 0.0;
  long completed_users = 0;
  double mean_residence_ttis = 0.0;
  double mean_transmission_ttis = 0.0;
};

RunKpis kpis_from_trace(const simcore::Trace& trace);

// Shared row type for everything the eval-style commands emit.
struct RunRow {
  std::string scheduler;
  std::uint64_t seed = 0;
  RunKpis kpis;
};

// Runs every (scheduler, seed) pair of the eval section. Writes
// eval_runs.csv and eval_summary.csv into output_dir (plus one trace file
// per run when write_traces is set) and returns the per-run rows.
std::vector<RunRow> run_eval(const ExperimentConfig& cfg, std::ostream& log);

// Proportional-fair exponent sweep: alpha1 over `grid` with alpha2 fixed at
// 1, plus "rrf" and "op" reference rows. Writes pf_sweep.csv. Returns the
// mean 5TUDR per grid point in grid order.
std::vector<double> run_pf_sweep(const ExperimentConfig& cfg, const std::vector<double>& grid,
                                 std::ostream& log);

// Default sweep grid 0, 0.02, ..., 1.
std::vector<double> default_pf_grid();

// Pairwise comparison against the first configured scheduler: per-seed KPI
// differences (subject minus baseline), their empirical CDFs, and mean
// differences. Writes compare_runs.csv, compare_cdf.csv, compare_summary.csv.
struct CompareSummary {
  std::string pair;  // "<subject>-vs-<baseline>"
  double mean_audr_diff = 0.0;
  double mean_five_tudr_diff = 0.0;
};

std::vector<CompareSummary> run_compare(const ExperimentConfig& cfg, std::ostream& log);

// Post-hoc report over persisted traces: KPI recomputation, residence and
// transmission statistics, RBG-span share, per-RBG feature correlations, and
// allocation snapshots at the requested TTIs. Writes analyze_summary.csv,
// analyze_rbg_share.csv, analyze_correlation.csv, analyze_snapshots.csv.
void run_analyze(const std::vector<std::string>& trace_paths,
                 const std::vector<int>& snapshot_ttis, const std::string& output_dir,
                 std::ostream& log);

// Shortest decimal form that round-trips a double ("%.12g" width cap).
std::string format_number(double v);

}  // namespace marlsched::harness
