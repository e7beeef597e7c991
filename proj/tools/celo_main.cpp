// celo: meta-train the learned optimizer, sweep Adam baselines, evaluate
// optimizers, and score them with outlier-robust aggregate metrics.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "celo/baselines.hpp"
#include "celo/checkpoint.hpp"
#include "celo/config.hpp"
#include "celo/error.hpp"
#include "celo/format.hpp"
#include "celo/fpu.hpp"
#include "celo/metrics.hpp"
#include "celo/parallel.hpp"
#include "celo/pes.hpp"
#include "celo/plots.hpp"
#include "celo/record.hpp"
#include "celo/runner.hpp"

namespace fs = std::filesystem;
using namespace celo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  int workers = 0;          // 0 = leave config/default
  int64_t seed_flag = -1;   // -1 = unset
};

Config load_config(const CommonArgs& args) {
  if (!fs::exists(args.config_path)) {
    throw ConfigError("config file not found: " + args.config_path);
  }
  Config config = parse_config_file(args.config_path);
  apply_env_overrides(config);
  if (args.seed_flag >= 0) {
    config.seed = static_cast<uint64_t>(args.seed_flag);
    config.tasks.seed = config.seed;
  }
  if (args.workers > 0) config.pes.workers = args.workers;
  for (const std::string& file : config.tasks.dataset_files) {
    if (!fs::exists(file)) throw ConfigError("dataset file not found: " + file);
  }
  return config;
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  return out;
}

std::vector<TaskInstance> build_suite(const Config& config, const std::string& which) {
  std::vector<TaskInstance> suite = which == "meta_train"
                                        ? make_meta_train_suite(config.tasks)
                                        : make_eval_suite(config.tasks);
  if (!config.tasks.dataset_files.empty()) {
    for (const TaskInstance& task : suite) {
      std::cout << "loaded dataset for " << task.id << " (checksum "
                << task.data->payload_checksum << ")\n";
    }
  }
  return suite;
}

fs::path record_path(const Config& config, const TaskInstance& task,
                     const std::string& optimizer_entry, uint64_t seed) {
  return fs::path(config.out_dir) / "records" / sanitize(task.id) /
         sanitize(optimizer_entry) / ("seed_" + std::to_string(seed) + ".csv");
}

std::unique_ptr<Optimizer> build_optimizer(const OptimizerSpec& spec) {
  if (spec.kind == "adam") {
    AdamConfig config;
    config.lr = std::strtod(spec.arg.c_str(), nullptr);
    return make_adam_optimizer(config);
  }
  if (spec.kind == "sgdm") {
    return make_sgdm_optimizer(std::strtod(spec.arg.c_str(), nullptr));
  }
  const CeloParams phi = checkpoint_load_params(spec.arg);
  if (spec.kind == "celo_ns") {
    return make_celo_optimizer(phi, CeloVariant::NoScheduler, "celo_ns");
  }
  if (spec.kind == "celo_adam") {
    return make_celo_optimizer(phi, CeloVariant::AdamRuleWithScheduler, "celo_adam");
  }
  return make_celo_optimizer(phi, CeloVariant::Full, "celo");
}

// ---------------------------------------------------------------------------
// meta-train

int cmd_meta_train(const CommonArgs& args, const std::string& stage_arg,
                   const std::string& resume_path) {
  const Config config = load_config(args);
  if (stage_arg != "both" && stage_arg != "rule" && stage_arg != "scheduler") {
    throw ConfigError("--stage must be both, rule, or scheduler");
  }
  const auto suite = build_suite(config, "meta_train");
  const fs::path ckpt_dir = fs::path(config.out_dir) / "checkpoints";
  const fs::path log_dir = fs::path(config.out_dir) / "logs";
  const fs::path stage1_ckpt = ckpt_dir / "stage1.ckpt";
  const fs::path stage2_ckpt = ckpt_dir / "stage2.ckpt";

  const int64_t total = config.pes.meta_iters;
  const int64_t stage1_iters = std::max<int64_t>(1, std::llround(config.stage_split *
                                                                 static_cast<double>(total)));
  const int64_t stage2_iters = std::max<int64_t>(1, total - stage1_iters);

  // Validation before any side effects.
  if (stage_arg == "scheduler" && resume_path.empty() && !fs::exists(stage1_ckpt)) {
    throw ConfigError("stage scheduler requires a stage-1 checkpoint at " +
                      stage1_ckpt.string());
  }
  if (!resume_path.empty() && !fs::exists(resume_path)) {
    throw ConfigError("resume checkpoint not found: " + resume_path);
  }

  fs::create_directories(ckpt_dir);
  fs::create_directories(log_dir);
  const RngStream root(config.seed);

  CeloParams phi = make_celo_params(CeloConfig{}, root.child("phi_init"));
  MetaState meta;
  bool resumed = false;
  if (!resume_path.empty()) {
    std::tie(phi, meta) = checkpoint_load(resume_path);
    resumed = true;
    std::cout << "resumed stage " << to_string(meta.stage) << " at meta-iteration "
              << meta.meta_iter << "\n";
  }

  const auto run_one_stage = [&](StageId stage, int64_t iters, const fs::path& ckpt,
                                 const std::string& log_name, bool append_log) {
    PesConfig pes = config.pes;
    pes.meta_iters = iters;
    if (!resumed || meta.stage != stage) {
      meta = make_meta_state(phi, stage, pes);
    }
    const auto log = run_stage(phi, meta, suite, pes, root);
    write_train_log_csv((log_dir / log_name).string(), log, append_log);
    checkpoint_save(phi, meta, ckpt.string());
    double tail = 0.0;
    const size_t window = std::min<size_t>(log.size(), 50);
    for (size_t i = log.size() - window; i < log.size(); ++i) tail += log[i].mean_meta_loss;
    std::cout << "stage " << to_string(stage) << ": " << log.size()
              << " meta-iterations, tail mean meta-loss "
              << format_double(window > 0 ? tail / static_cast<double>(window) : 0.0)
              << ", checkpoint " << ckpt.string() << "\n";
  };

  if (resumed) {
    const StageId stage = meta.stage;
    const bool is_rule = stage == StageId::UpdateRule;
    run_one_stage(stage, is_rule ? stage1_iters : stage2_iters,
                  is_rule ? stage1_ckpt : stage2_ckpt,
                  is_rule ? "stage1_log.csv" : "stage2_log.csv", /*append_log=*/true);
    if (is_rule && stage_arg == "both") {
      resumed = false;
      run_one_stage(StageId::Scheduler, stage2_iters, stage2_ckpt, "stage2_log.csv", false);
    }
    return kExitOk;
  }

  if (stage_arg == "both" || stage_arg == "rule") {
    run_one_stage(StageId::UpdateRule, stage1_iters, stage1_ckpt, "stage1_log.csv", false);
  } else {
    phi = checkpoint_load_params(stage1_ckpt.string());
  }
  if (stage_arg == "both" || stage_arg == "scheduler") {
    run_one_stage(StageId::Scheduler, stage2_iters, stage2_ckpt, "stage2_log.csv", false);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep-adam

int cmd_sweep_adam(const CommonArgs& args) {
  const Config config = load_config(args);
  const auto suite = build_suite(config, config.eval_suite);
  const std::vector<double> rates = half_power_sweep();
  const RngStream root(config.seed);

  const fs::path base_dir = fs::path(config.out_dir) / "baselines";
  fs::create_directories(base_dir);

  for (size_t ti = 0; ti < suite.size(); ++ti) {
    const TaskInstance& task = suite[ti];
    const fs::path task_dir = base_dir / sanitize(task.id);
    fs::create_directories(task_dir);

    std::vector<RunRecord> trials(rates.size());
    parallel_for(static_cast<int64_t>(rates.size()), config.pes.workers, [&](int64_t k) {
      auto opt = make_adam_optimizer({.lr = rates[static_cast<size_t>(k)]});
      // All trials share theta0 and batches; only the rate differs.
      RunRecord record = run_training(*opt, task, config.eval_steps,
                                      root.child("sweep").child(task.id));
      record.seed = config.seed;
      trials[static_cast<size_t>(k)] = std::move(record);
    });
    for (size_t k = 0; k < trials.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "trial_%02zu.csv", k);
      write_record_csv((task_dir / name).string(), trials[k]);
    }
    const size_t best = best_trial(trials);  // throws "no valid baseline" if all diverged
    std::ofstream best_out(task_dir / "best.csv");
    best_out << "trial,lr,final_loss\n";
    best_out << best << ',' << format_double(rates[best]) << ','
             << format_double(final_loss(trials[best])) << '\n';
    std::cout << task.id << ": best adam lr " << format_double(rates[best])
              << " final loss " << format_double(final_loss(trials[best])) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const CommonArgs& args) {
  const Config config = load_config(args);
  if (config.optimizers.empty()) {
    throw ConfigError("eval.optimizers is empty; nothing to evaluate");
  }
  std::vector<OptimizerSpec> specs;
  for (const std::string& entry : config.optimizers) {
    OptimizerSpec spec = parse_optimizer_spec(entry);
    if (spec.kind.rfind("celo", 0) == 0 && !fs::exists(spec.arg)) {
      throw ConfigError("checkpoint not found for optimizer \"" + entry + "\"");
    }
    specs.push_back(std::move(spec));
  }
  const auto suite = build_suite(config, config.eval_suite);
  const RngStream root(config.seed);

  struct Job {
    size_t opt;
    size_t task;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (size_t o = 0; o < specs.size(); ++o) {
    for (size_t t = 0; t < suite.size(); ++t) {
      for (uint64_t seed : config.eval_seeds) jobs.push_back({o, t, seed});
    }
  }
  std::vector<RunRecord> results(jobs.size());
  parallel_for(static_cast<int64_t>(jobs.size()), config.pes.workers, [&](int64_t j) {
    const Job& job = jobs[static_cast<size_t>(j)];
    const TaskInstance& task = suite[job.task];
    auto opt = build_optimizer(specs[job.opt]);
    RunRecord record =
        run_training(*opt, task, config.eval_steps,
                     root.child("eval").child(task.id).child(config.optimizers[job.opt])
                         .child("seed", job.seed));
    record.seed = job.seed;
    record.optimizer_id = config.optimizers[job.opt];
    results[static_cast<size_t>(j)] = std::move(record);
  });

  for (size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    const fs::path path =
        record_path(config, suite[job.task], config.optimizers[job.opt], job.seed);
    fs::create_directories(path.parent_path());
    write_record_csv(path.string(), results[j]);
  }
  std::cout << "wrote " << jobs.size() << " run records under "
            << (fs::path(config.out_dir) / "records").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score

std::vector<RunRecord> load_adam_best(const Config& config,
                                      const std::vector<TaskInstance>& suite) {
  const fs::path base_dir = fs::path(config.out_dir) / "baselines";
  if (!fs::exists(base_dir)) {
    throw ConfigError("baseline directory missing: " + base_dir.string() +
                      " (run sweep-adam first)");
  }
  std::vector<RunRecord> best;
  for (const TaskInstance& task : suite) {
    const fs::path task_dir = base_dir / sanitize(task.id);
    const fs::path best_path = task_dir / "best.csv";
    if (!fs::exists(best_path)) {
      throw ConfigError("missing baseline for task " + task.id + ": " + best_path.string());
    }
    std::ifstream in(best_path);
    std::string line;
    std::getline(in, line);  // header
    std::getline(in, line);
    const size_t trial = std::stoul(line.substr(0, line.find(',')));
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%02zu.csv", trial);
    best.push_back(read_record_csv((task_dir / name).string()));
  }
  return best;
}

int cmd_score(const CommonArgs& args) {
  const Config config = load_config(args);
  if (config.optimizers.empty()) {
    throw ConfigError("eval.optimizers is empty; nothing to score");
  }
  const auto suite = build_suite(config, config.eval_suite);
  const std::vector<RunRecord> adam_best = load_adam_best(config, suite);

  // Validate that every record exists before producing any output.
  for (const std::string& entry : config.optimizers) {
    for (const TaskInstance& task : suite) {
      for (uint64_t seed : config.eval_seeds) {
        const fs::path path = record_path(config, task, entry, seed);
        if (!fs::exists(path)) {
          throw ConfigError("missing run record " + path.string() + " (run evaluate first)");
        }
      }
    }
  }

  const fs::path score_dir = fs::path(config.out_dir) / "scores";
  fs::create_directories(score_dir);

  std::vector<MetricReport> reports;
  const auto score_one = [&](const std::string& label,
                             const std::vector<std::vector<RunRecord>>& runs) {
    for (const std::string& criterion_name : config.criteria) {
      const Criterion criterion = criterion_name == "speedup" ? Criterion::Speedup
                                                              : Criterion::FinalLoss;
      ScoreMatrix matrix = criterion == Criterion::Speedup
                               ? speedup_scores(runs, adam_best)
                               : loss_scores(runs, adam_best);
      matrix.optimizer_id = label;
      if (matrix.scores.size() >= 4) {
        reports.push_back(build_report(matrix, criterion));
      }
      write_score_matrix_csv(
          (score_dir / ("scores_" + sanitize(label) + "_" + criterion_name + ".csv")).string(),
          matrix);
    }
  };

  // The tuned baseline scored against itself pins the identity row.
  std::vector<std::vector<RunRecord>> self;
  for (const RunRecord& base : adam_best) self.push_back({base});
  score_one("adam_best", self);

  for (const std::string& entry : config.optimizers) {
    std::vector<std::vector<RunRecord>> runs;
    for (const TaskInstance& task : suite) {
      std::vector<RunRecord> trials;
      for (uint64_t seed : config.eval_seeds) {
        trials.push_back(read_record_csv(record_path(config, task, entry, seed).string()));
      }
      runs.push_back(std::move(trials));
    }
    score_one(entry, runs);
  }

  write_report_csv((score_dir / "report.csv").string(), reports);
  std::cout << "wrote " << (score_dir / "report.csv").string() << " with "
            << reports.size() << " rows\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plot

int cmd_plot(const CommonArgs& args) {
  const Config config = load_config(args);
  const auto suite = build_suite(config, config.eval_suite);
  const fs::path records_dir = fs::path(config.out_dir) / "records";
  if (!fs::exists(records_dir)) {
    throw ConfigError("records directory missing: " + records_dir.string() +
                      " (run evaluate first)");
  }
  const fs::path plot_dir = fs::path(config.out_dir) / "plots";
  fs::create_directories(plot_dir);

  int emitted = 0;
  for (const TaskInstance& task : suite) {
    std::vector<PlotSeries> losses;
    for (const std::string& entry : config.optimizers) {
      for (uint64_t seed : config.eval_seeds) {
        const fs::path path = record_path(config, task, entry, seed);
        if (!fs::exists(path)) continue;
        const RunRecord record = read_record_csv(path.string());
        if (seed == config.eval_seeds.front()) {
          losses.push_back({entry, smooth(record.losses)});
        }
        if (!record.eta.empty()) {
          const std::string stem =
              "schedule_" + sanitize(task.id) + "_" + sanitize(entry) + "_seed" +
              std::to_string(seed);
          write_schedule_trace_csv((plot_dir / (stem + ".csv")).string(), record);
          write_svg_line_chart((plot_dir / (stem + ".svg")).string(),
                               "schedule " + entry + " on " + task.id, "eta",
                               {{"eta", record.eta}}, /*log_y=*/true);
          ++emitted;
        }
      }
    }
    if (!losses.empty()) {
      write_svg_line_chart((plot_dir / (sanitize(task.id) + "_loss.svg")).string(),
                           "training loss on " + task.id, "smoothed loss", losses,
                           /*log_y=*/false);
      ++emitted;
    }
  }
  std::cout << "wrote " << emitted << " plots under " << plot_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  flush_denormals_to_zero();
  CLI::App app{"celo: learned-optimizer meta-training and benchmarking"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string stage = "both";
  std::string resume;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", args.config_path, "config file")->required();
    cmd->add_option("--workers", args.workers, "worker thread count");
    cmd->add_option("--seed", args.seed_flag, "override the config seed");
  };

  CLI::App* train = app.add_subcommand("meta-train", "two-stage PES meta-training");
  add_common(train);
  train->add_option("--stage", stage, "both | rule | scheduler");
  train->add_option("--resume", resume, "checkpoint to resume from");

  CLI::App* sweep = app.add_subcommand("sweep-adam", "learning-rate sweep baseline");
  add_common(sweep);
  CLI::App* evaluate = app.add_subcommand("evaluate", "run optimizers over the task suite");
  add_common(evaluate);
  CLI::App* score = app.add_subcommand("score", "normalized scores and aggregate metrics");
  add_common(score);
  CLI::App* plot = app.add_subcommand("plot", "loss curves and schedule traces");
  add_common(plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_meta_train(args, stage, resume);
    if (sweep->parsed()) return cmd_sweep_adam(args);
    if (evaluate->parsed()) return cmd_evaluate(args);
    if (score->parsed()) return cmd_score(args);
    if (plot->parsed()) return cmd_plot(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
