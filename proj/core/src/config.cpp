#include "celo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "celo/error.hpp"

namespace celo {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

struct RawConfig {
  // (section, key) -> value text
  std::map<std::pair<std::string, std::string>, std::string> values;

  const std::string* find(const std::string& section, const std::string& key) const {
    const auto it = values.find({section, key});
    return it == values.end() ? nullptr : &it->second;
  }
};

RawConfig parse_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  RawConfig raw;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || section.empty()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": key outside a section");
    }
    raw.values[{section, key}] = value;
  }
  return raw;
}

std::vector<std::string> parse_array(const std::string& value, const std::string& where) {
  std::string body = trim(value);
  if (body.empty() || body.front() != '[' || body.back() != ']') {
    throw ConfigError(where + ": expected an array like [a, b]");
  }
  body = body.substr(1, body.size() - 2);
  std::vector<std::string> items;
  std::string item;
  std::istringstream stream(body);
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(unquote(item));
  }
  return items;
}

class Reader {
 public:
  Reader(const RawConfig& raw, std::string path) : raw_(raw), path_(std::move(path)) {}

  void str(const std::string& s, const std::string& k, std::string* out) {
    if (const std::string* v = raw_.find(s, k)) {
      *out = unquote(*v);
      seen(s, k);
    }
  }
  void f64(const std::string& s, const std::string& k, double* out) {
    if (const std::string* v = raw_.find(s, k)) {
      char* end = nullptr;
      const double parsed = std::strtod(v->c_str(), &end);
      if (end == v->c_str() || *end != '\0') bad(s, k, "a number");
      *out = parsed;
      seen(s, k);
    }
  }
  void i64(const std::string& s, const std::string& k, int64_t* out) {
    double v = static_cast<double>(*out);
    const bool had = raw_.find(s, k) != nullptr;
    f64(s, k, &v);
    if (had) *out = static_cast<int64_t>(v);
  }
  void u64(const std::string& s, const std::string& k, uint64_t* out) {
    if (const std::string* v = raw_.find(s, k)) {
      char* end = nullptr;
      const unsigned long long parsed = std::strtoull(v->c_str(), &end, 10);
      if (end == v->c_str() || *end != '\0') bad(s, k, "an unsigned integer");
      *out = parsed;
      seen(s, k);
    }
  }
  void str_array(const std::string& s, const std::string& k, std::vector<std::string>* out) {
    if (const std::string* v = raw_.find(s, k)) {
      *out = parse_array(*v, path_ + ": [" + s + "] " + k);
      seen(s, k);
    }
  }
  void u64_array(const std::string& s, const std::string& k, std::vector<uint64_t>* out) {
    if (const std::string* v = raw_.find(s, k)) {
      out->clear();
      for (const std::string& item : parse_array(*v, path_ + ": [" + s + "] " + k)) {
        char* end = nullptr;
        const unsigned long long parsed = std::strtoull(item.c_str(), &end, 10);
        if (end == item.c_str() || *end != '\0') bad(s, k, "unsigned integers");
        out->push_back(parsed);
      }
      seen(s, k);
    }
  }

  // Every (section, key) in the file must have been consumed.
  void check_exhausted() const {
    for (const auto& [sk, value] : raw_.values) {
      if (!seen_.count(sk)) {
        throw ConfigError(path_ + ": unknown option [" + sk.first + "] " + sk.second);
      }
    }
  }

 private:
  void seen(const std::string& s, const std::string& k) { seen_.insert({s, k}); }
  [[noreturn]] void bad(const std::string& s, const std::string& k, const std::string& want) {
    throw ConfigError(path_ + ": [" + s + "] " + k + " must be " + want);
  }

  const RawConfig& raw_;
  std::string path_;
  std::set<std::pair<std::string, std::string>> seen_;
};

}  // namespace

Config parse_config_file(const std::string& path) {
  const RawConfig raw = parse_raw(path);
  Reader r(raw, path);
  Config config;

  r.str("io", "out_dir", &config.out_dir);
  r.str("io", "checkpoint", &config.checkpoint);
  r.u64("io", "seed", &config.seed);

  r.i64("tasks", "count", &config.tasks.count);
  r.i64("tasks", "classes", &config.tasks.classes);
  r.i64("tasks", "dim", &config.tasks.dim);
  r.i64("tasks", "examples", &config.tasks.examples);
  r.i64("tasks", "batch_size", &config.tasks.batch_size);
  r.f64("tasks", "margin", &config.tasks.margin);
  r.str_array("tasks", "dataset_files", &config.tasks.dataset_files);

  r.f64("metatrain", "sigma", &config.pes.sigma);
  r.i64("metatrain", "truncation", &config.pes.truncation);
  r.i64("metatrain", "pairs", &config.pes.pairs);
  r.i64("metatrain", "unroll_min", &config.pes.unroll_min);
  r.i64("metatrain", "unroll_max", &config.pes.unroll_max);
  r.i64("metatrain", "meta_iters", &config.pes.meta_iters);
  r.f64("metatrain", "meta_lr", &config.pes.meta_lr);
  r.f64("metatrain", "meta_lr_min", &config.pes.meta_lr_min);
  r.f64("metatrain", "weight_decay", &config.pes.weight_decay);
  r.f64("metatrain", "grad_clip", &config.pes.grad_clip);
  r.f64("metatrain", "stage_split", &config.stage_split);

  r.i64("eval", "steps", &config.eval_steps);
  r.u64_array("eval", "seeds", &config.eval_seeds);
  r.str_array("eval", "optimizers", &config.optimizers);
  r.str("eval", "suite", &config.eval_suite);

  r.str_array("score", "criteria", &config.criteria);
  r.check_exhausted();

  config.tasks.seed = config.seed;

  if (config.pes.sigma <= 0) throw ConfigError("metatrain.sigma must be positive");
  if (config.pes.truncation < 1) throw ConfigError("metatrain.truncation must be >= 1");
  if (config.pes.pairs < 1) throw ConfigError("metatrain.pairs must be >= 1");
  if (config.pes.unroll_min < 1 || config.pes.unroll_min > config.pes.unroll_max) {
    throw ConfigError("metatrain unroll range must satisfy 1 <= min <= max");
  }
  if (config.stage_split <= 0.0 || config.stage_split >= 1.0) {
    throw ConfigError("metatrain.stage_split must lie in (0, 1)");
  }
  if (config.eval_steps < 10) throw ConfigError("eval.steps must be >= 10");
  if (config.eval_suite != "eval" && config.eval_suite != "meta_train") {
    throw ConfigError("eval.suite must be \"eval\" or \"meta_train\"");
  }
  for (const std::string& c : config.criteria) {
    if (c != "final_loss" && c != "speedup") {
      throw ConfigError("score.criteria entries must be final_loss or speedup");
    }
  }
  return config;
}

void apply_env_overrides(Config& config) {
  if (const char* env = std::getenv("CELO_SEED")) {
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError("CELO_SEED must be an unsigned integer");
    config.seed = parsed;
    config.tasks.seed = parsed;
  }
}

OptimizerSpec parse_optimizer_spec(const std::string& entry) {
  const auto at = entry.find('@');
  OptimizerSpec spec;
  spec.kind = at == std::string::npos ? entry : entry.substr(0, at);
  spec.arg = at == std::string::npos ? "" : entry.substr(at + 1);
  if (spec.kind != "adam" && spec.kind != "sgdm" && spec.kind != "celo" &&
      spec.kind != "celo_ns" && spec.kind != "celo_adam") {
    throw ConfigError("unknown optimizer kind in \"" + entry +
                      "\"; expected adam|sgdm|celo|celo_ns|celo_adam");
  }
  if (spec.kind == "adam" || spec.kind == "sgdm") {
    char* end = nullptr;
    const double lr = std::strtod(spec.arg.c_str(), &end);
    if (spec.arg.empty() || end == spec.arg.c_str() || *end != '\0' || lr <= 0) {
      throw ConfigError("optimizer \"" + entry + "\" needs a positive learning rate");
    }
  } else if (spec.arg.empty()) {
    throw ConfigError("optimizer \"" + entry + "\" needs a checkpoint path");
  }
  return spec;
}

}  // namespace celo
