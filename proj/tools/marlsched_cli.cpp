// Command-line front end: train, eval, sweep-pf, compare, analyze.
// Exit codes: 0 success, 2 configuration error, 3 runtime contract violation
// or aborted training.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marlsched/errors.hpp"
#include "marlsched/harness/harness.hpp"
#include "marlsched/qmix/trainer.hpp"

namespace fs = std::filesystem;
using namespace marlsched;

namespace {

struct CliArgs {
  std::string config_path;
  // train
  std::string train_out = "model.ckpt";
  std::string train_log;
  bool centralized = false;
  bool distributional = false;
  int epochs = -1;
  std::int64_t train_seed = -1;
  // shared eval-style overrides
  std::vector<std::string> schedulers;
  int n_seeds = -1;
  int episode_length = -1;
  std::string output_dir;
  bool write_traces = false;
  // sweep
  std::vector<double> grid;
  // analyze
  std::vector<std::string> traces;
  std::vector<int> snapshot_ttis;
  std::string analyze_out = "out";
};

void apply_eval_overrides(const CLI::App* cmd, const CliArgs& a, harness::ExperimentConfig& cfg) {
  if (cmd->count("--scheduler") > 0) cfg.eval.schedulers = a.schedulers;
  if (cmd->count("--n-seeds") > 0) {
    cfg.eval.seeds.clear();
    cfg.eval.n_seeds = a.n_seeds;
  }
  if (cmd->count("--episode-length") > 0) cfg.eval.episode_length = a.episode_length;
  if (cmd->count("--output-dir") > 0) cfg.eval.output_dir = a.output_dir;
  if (cmd->count("--write-traces") > 0) cfg.eval.write_traces = true;
}

int cmd_train(const CLI::App* cmd, const CliArgs& a) {
  harness::ExperimentConfig cfg = harness::load_experiment_config(a.config_path);
  qmix::TrainConfig tc = cfg.train;
  if (a.centralized) tc.centralized = true;
  if (a.distributional) tc.centralized = false;
  if (cmd->count("--epochs") > 0) tc.epochs = a.epochs;
  if (cmd->count("--seed") > 0) tc.seed = static_cast<std::uint64_t>(a.train_seed);
  tc.validate();

  std::ofstream log_file;
  if (!a.train_log.empty()) {
    if (const fs::path parent = fs::path(a.train_log).parent_path(); !parent.empty())
      fs::create_directories(parent);
    log_file.open(a.train_log, std::ios::binary);
    if (!log_file) throw ConfigError("cannot write training log: " + a.train_log);
  }

  qmix::Trainer<float> trainer(tc);
  std::vector<qmix::EpochLog> logs;
  for (int e = 0; e < tc.epochs; ++e) {
    logs.push_back(trainer.run_epoch(e));
    const std::string line = qmix::Trainer<float>::epoch_log_json(logs.back()).dump();
    std::cout << line << '\n' << std::flush;
    if (log_file) log_file << line << '\n' << std::flush;
  }

  if (const fs::path parent = fs::path(a.train_out).parent_path(); !parent.empty())
    fs::create_directories(parent);
  trainer.save(a.train_out, {{"config_hash", harness::config_hash(cfg)}});
  std::cout << "checkpoint written: " << a.train_out << '\n';
  return 0;
}

int cmd_eval(const CLI::App* cmd, const CliArgs& a) {
  harness::ExperimentConfig cfg = harness::load_experiment_config(a.config_path);
  apply_eval_overrides(cmd, a, cfg);
  (void)harness::run_eval(cfg, std::cout);
  return 0;
}

int cmd_sweep(const CLI::App* cmd, const CliArgs& a) {
  harness::ExperimentConfig cfg = harness::load_experiment_config(a.config_path);
  apply_eval_overrides(cmd, a, cfg);
  const std::vector<double> grid =
      cmd->count("--grid") > 0 ? a.grid : harness::default_pf_grid();
  (void)harness::run_pf_sweep(cfg, grid, std::cout);
  return 0;
}

int cmd_compare(const CLI::App* cmd, const CliArgs& a) {
  harness::ExperimentConfig cfg = harness::load_experiment_config(a.config_path);
  apply_eval_overrides(cmd, a, cfg);
  (void)harness::run_compare(cfg, std::cout);
  return 0;
}

int cmd_analyze(const CliArgs& a) {
  harness::run_analyze(a.traces, a.snapshot_ttis, a.analyze_out, std::cout);
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"deterministic single-cell downlink scheduling arena"};
  app.require_subcommand(1);
  CliArgs a;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", a.config_path, "experiment config JSON file")->required();
  };
  auto add_eval_flags = [&](CLI::App* cmd) {
    cmd->add_option("--scheduler", a.schedulers,
                    "scheduler spec, repeatable (rrf | op | pf[:a1[:a2]] | marl:<ckpt>[:eps])");
    cmd->add_option("--n-seeds", a.n_seeds, "number of evaluation seeds");
    cmd->add_option("--episode-length", a.episode_length, "TTIs per evaluation episode");
    cmd->add_option("--output-dir", a.output_dir, "directory for emitted tables");
    cmd->add_flag("--write-traces", a.write_traces, "persist one trace JSONL per run");
  };

  CLI::App* train = app.add_subcommand("train", "train a mixing-network policy");
  add_config(train);
  train->add_option("--out", a.train_out, "checkpoint output path");
  train->add_option("--log", a.train_log, "per-epoch JSONL log path");
  auto* flag_c = train->add_flag("--centralized", a.centralized, "share one agent net");
  auto* flag_d = train->add_flag("--distributional", a.distributional, "per-agent nets");
  flag_c->excludes(flag_d);
  train->add_option("--epochs", a.epochs, "override epoch count");
  train->add_option("--seed", a.train_seed, "override training seed");

  CLI::App* eval = app.add_subcommand("eval", "run schedulers over seeds, emit KPI tables");
  add_config(eval);
  add_eval_flags(eval);

  CLI::App* sweep = app.add_subcommand("sweep-pf", "proportional-fair alpha1 sweep");
  add_config(sweep);
  add_eval_flags(sweep);
  sweep->add_option("--grid", a.grid, "explicit alpha1 values")->delimiter(',');

  CLI::App* compare =
      app.add_subcommand("compare", "per-seed KPI differences vs the first scheduler");
  add_config(compare);
  add_eval_flags(compare);

  CLI::App* analyze = app.add_subcommand("analyze", "recompute reports from persisted traces");
  analyze->add_option("--trace", a.traces, "trace JSONL path, repeatable")->required();
  analyze->add_option("--snapshot-tti", a.snapshot_ttis, "emit an allocation snapshot at this TTI");
  analyze->add_option("--output-dir", a.analyze_out, "directory for emitted tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (train->parsed()) return cmd_train(train, a);
  if (eval->parsed()) return cmd_eval(eval, a);
  if (sweep->parsed()) return cmd_sweep(sweep, a);
  if (compare->parsed()) return cmd_compare(compare, a);
  if (analyze->parsed()) return cmd_analyze(a);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const TrainingDiverged& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return 3;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return 3;
  }
}
