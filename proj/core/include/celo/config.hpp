#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "celo/pes.hpp"
#include "celo/task.hpp"

namespace celo {

// Declarative run configuration. File format: [section] headers with
// key = value lines; values are numbers, booleans, "strings" (quotes
// optional for bare words) or [comma, separated, arrays]; '#' comments.
// Precedence is CLI flags > CELO_SEED > file > defaults.
struct Config {
  // [io]
  std::string out_dir = "out";
  std::string checkpoint;  // stage-2 checkpoint consumed by evaluate
  uint64_t seed = 17;

  // [tasks]
  SuiteConfig tasks;

  // [metatrain]
  PesConfig pes;
  double stage_split = 0.7;  // share of meta_iters spent on the update rule

  // [eval]
  int64_t eval_steps = 2000;
  std::vector<uint64_t> eval_seeds = {1, 2, 3};
  std::vector<std::string> optimizers;
  std::string eval_suite = "eval";  // "eval" or "meta_train"

  // [score]
  std::vector<std::string> criteria = {"final_loss", "speedup"};
};

Config parse_config_file(const std::string& path);
// CELO_SEED, when set, replaces the config seed.
void apply_env_overrides(Config& config);

struct OptimizerSpec {
  std::string kind;  // adam | sgdm | celo | celo_ns | celo_adam
  std::string arg;   // learning rate or checkpoint path
};

// Parses "kind@arg" entries; celo kinds require a checkpoint path.
OptimizerSpec parse_optimizer_spec(const std::string& entry);

}  // namespace celo
