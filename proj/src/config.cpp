#include "faithrl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "faithrl/reward.hpp"

namespace faithrl {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& raw,
                            const std::string& expected) {
  throw Error(ErrorCode::InvalidArgument,
              "config key '" + key + "': expected " + expected + ", got '" + raw + "'");
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config config;
  std::istringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  origin + ":" + std::to_string(line_number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      throw Error(ErrorCode::InvalidArgument,
                  origin + ":" + std::to_string(line_number) + ": malformed key '" + key + "'");
    }
    if (config.values_.count(key) != 0) {
      throw Error(ErrorCode::InvalidArgument,
                  origin + ":" + std::to_string(line_number) + ": duplicate key '" + key + "'");
    }
    config.values_[key] = value;
  }
  return config;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) {
    throw Error(ErrorCode::InvalidArgument, "malformed config key '" + key + "'");
  }
  values_[key] = trim(value);
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Config::raw(const std::string& key) const {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error(ErrorCode::InvalidArgument, "missing config key '" + key + "'");
  }
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  char* end = nullptr;
  const long long parsed = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') bad_value(key, v, "an integer");
  return static_cast<int64_t>(parsed);
}

double Config::get_double(const std::string& key, double fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  char* end = nullptr;
  const double parsed = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') bad_value(key, v, "a number");
  return parsed;
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    bad_value(key, v, "a number list like [a, b]");
  }
  std::vector<double> out;
  const std::string inner = trim(v.substr(1, v.size() - 2));
  if (inner.empty()) return out;
  std::istringstream stream(inner);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const std::string token = trim(item);
    char* end = nullptr;
    const double parsed = std::strtod(token.c_str(), &end);
    if (token.empty() || end == token.c_str() || *end != '\0') {
      bad_value(key, v, "a number list like [a, b]");
    }
    out.push_back(parsed);
  }
  return out;
}

void Config::require_all_consumed() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (consumed_.count(key) == 0) {
      if (!unknown.empty()) unknown += ", ";
      unknown += "'" + key + "'";
    }
  }
  if (!unknown.empty()) {
    throw Error(ErrorCode::InvalidArgument, "unknown config key(s): " + unknown);
  }
}

std::vector<std::pair<std::string, std::string>> Config::entries() const {
  return {values_.begin(), values_.end()};
}

WorldConfig world_config_from(const Config& config) {
  WorldConfig world;
  world.chain_length = static_cast<int>(config.get_int("world.chain_length", world.chain_length));
  world.num_distractors =
      static_cast<int>(config.get_int("world.num_distractors", world.num_distractors));
  world.unanswerable_fraction =
      config.get_double("world.unanswerable_fraction", world.unanswerable_fraction);
  world.capability = config.get_double("world.capability", world.capability);
  world.guess_rate = config.get_double("world.guess_rate", world.guess_rate);
  world.validate();
  return world;
}

OptimizerConfig optimizer_config_from(const Config& config) {
  OptimizerConfig opt;
  opt.group_size =
      static_cast<std::size_t>(config.get_int("optimizer.group_size",
                                              static_cast<int64_t>(opt.group_size)));
  opt.clip_epsilon = config.get_double("optimizer.clip_epsilon", opt.clip_epsilon);
  opt.alpha = config.get_double("optimizer.alpha", opt.alpha);
  opt.learning_rate = config.get_double("optimizer.learning_rate", opt.learning_rate);
  opt.std_floor = config.get_double("optimizer.std_floor", opt.std_floor);
  const std::string norm = config.get_string("optimizer.normalization", "population");
  if (norm == "population") {
    opt.normalization = Normalization::Population;
  } else if (norm == "sample") {
    opt.normalization = Normalization::Sample;
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "config key 'optimizer.normalization': expected population|sample, got '" +
                    norm + "'");
  }
  opt.kl_enabled = config.get_bool("optimizer.kl_enabled", opt.kl_enabled);
  opt.validate();
  return opt;
}

ExperimentConfig experiment_config_from(const Config& config) {
  ExperimentConfig exp;
  exp.world = world_config_from(config);
  exp.optimizer = optimizer_config_from(config);
  exp.reward_variant =
      RewardScheme::parse_variant(config.get_string("reward.variant", "geometric"));
  if (config.has("reward.baseline_x") || config.has("reward.baseline_y")) {
    CapabilityPoint point;
    point.x = config.get_double("reward.baseline_x", 0.0);
    point.y = config.get_double("reward.baseline_y", 0.0);
    point.validate();
    exp.fixed_baseline = point;
  }
  exp.baseline_rollouts =
      static_cast<int>(config.get_int("reward.baseline_rollouts", exp.baseline_rollouts));
  exp.baseline_refresh = config.get_bool("reward.baseline_refresh", exp.baseline_refresh);
  exp.baseline_refresh_every = static_cast<uint64_t>(
      config.get_int("reward.baseline_refresh_every",
                     static_cast<int64_t>(exp.baseline_refresh_every)));
  exp.seed = static_cast<uint64_t>(config.get_int("train.seed", 0));
  exp.steps = static_cast<int>(config.get_int("train.steps", exp.steps));
  exp.groups_per_step =
      static_cast<int>(config.get_int("train.groups_per_step", exp.groups_per_step));
  exp.eval_instances =
      static_cast<int>(config.get_int("train.eval_instances", exp.eval_instances));
  const std::vector<double> logits = config.get_list("train.init_logits", {});
  if (!logits.empty()) {
    if (logits.size() != static_cast<std::size_t>(kNumParams)) {
      throw Error(ErrorCode::InvalidArgument,
                  "config key 'train.init_logits': expected " + std::to_string(kNumParams) +
                      " numbers, got " + std::to_string(logits.size()));
    }
    for (int i = 0; i < kNumParams; ++i) exp.init_logits[static_cast<std::size_t>(i)] = logits[static_cast<std::size_t>(i)];
  }
  exp.validate();
  return exp;
}

ScoreOptions score_options_from(const Config& config) {
  ScoreOptions options;
  options.optimizer = optimizer_config_from(config);
  const std::string variant = config.get_string("reward.variant", "objective_a");
  RewardScheme scheme;
  scheme.variant = RewardScheme::parse_variant(variant);
  if (scheme.variant == RewardVariant::Geometric) {
    CapabilityPoint point;
    point.x = config.get_double("reward.baseline_x", 0.0);
    point.y = config.get_double("reward.baseline_y", 0.0);
    scheme = RewardScheme::geometric(point);
  }
  options.scheme = scheme;
  return options;
}

PruneOptions prune_options_from(const Config& config) {
  PruneOptions options;
  options.seed = static_cast<uint64_t>(config.get_int("prune.seed", 0));
  const int64_t attempts = config.get_int("prune.attempts", options.attempts);
  if (attempts < 0) {
    throw Error(ErrorCode::InvalidArgument, "config key 'prune.attempts': must be >= 0");
  }
  options.attempts = static_cast<uint32_t>(attempts);
  options.density_threshold =
      static_cast<int>(config.get_int("prune.density_threshold", options.density_threshold));
  if (options.density_threshold < 1) {
    throw Error(ErrorCode::InvalidArgument, "config key 'prune.density_threshold': must be >= 1");
  }
  return options;
}

Solver solver_from(const Config& config) {
  const WorldConfig world = world_config_from(config);
  const uint64_t seed = static_cast<uint64_t>(config.get_int("solver.seed", 0));
  const std::vector<double> logits = config.get_list("solver.init_logits", {});
  std::array<double, kNumParams> init{};
  if (!logits.empty()) {
    if (logits.size() != static_cast<std::size_t>(kNumParams)) {
      throw Error(ErrorCode::InvalidArgument,
                  "config key 'solver.init_logits': expected " + std::to_string(kNumParams) +
                      " numbers, got " + std::to_string(logits.size()));
    }
    for (int i = 0; i < kNumParams; ++i) init[static_cast<std::size_t>(i)] = logits[static_cast<std::size_t>(i)];
  }
  return make_toy_solver(make_policy(init), world, seed);
}

JudgeConfig judge_config_from(const Config& config, bool require_usable) {
  JudgeConfig judge;
  const char* env_endpoint = std::getenv("JUDGE_ENDPOINT");
  const char* env_model = std::getenv("JUDGE_MODEL");
  judge.endpoint =
      config.get_string("judge.endpoint", env_endpoint != nullptr ? env_endpoint : "");
  judge.model = config.get_string("judge.model", env_model != nullptr ? env_model : "");
  judge.max_in_flight =
      static_cast<int>(config.get_int("judge.max_in_flight", judge.max_in_flight));
  judge.temperature = config.get_double("judge.temperature", judge.temperature);
  judge.timeout_ms = static_cast<int>(config.get_int("judge.timeout_ms", judge.timeout_ms));
  judge.retries = static_cast<int>(config.get_int("judge.retries", judge.retries));
  judge.max_tokens = static_cast<int>(config.get_int("judge.max_tokens", judge.max_tokens));
  judge.fail_closed = config.get_bool("judge.fail_closed", judge.fail_closed);
  if (require_usable) judge.validate();
  return judge;
}

}  // namespace faithrl
