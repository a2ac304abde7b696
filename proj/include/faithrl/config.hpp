#pragma once

// Plain-text experiment configuration: one `dotted.key = value` pair per line,
// `#` starts a comment, values are scalars or `[a, b, c]` number lists.
// Typed accessors parse on demand and report the offending key by name.
// Flag overrides are applied with set() and win over file values.
//
// Consumers mark keys as read; require_all_consumed() then rejects any key the
// run never used, so a misspelled key fails loudly instead of being ignored.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "faithrl/error.hpp"
#include "faithrl/grpo.hpp"
#include "faithrl/judge.hpp"
#include "faithrl/synthenv.hpp"

namespace faithrl {

class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<config>");

  // Insert or overwrite (used for command-line overrides; overrides win).
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;

  // Throws Error(InvalidArgument) naming every key that was never read.
  void require_all_consumed() const;

  // All keys in sorted order with their raw values (for run manifests).
  std::vector<std::pair<std::string, std::string>> entries() const;

 private:
  std::string raw(const std::string& key) const;  // marks the key consumed
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

// Builders from config keys to module configs. Each reads its own key family
// (world.*, optimizer.*, reward.*, train.*, prune.*, solver.*, judge.*).
WorldConfig world_config_from(const Config& config);
OptimizerConfig optimizer_config_from(const Config& config);
ExperimentConfig experiment_config_from(const Config& config);
ScoreOptions score_options_from(const Config& config);
PruneOptions prune_options_from(const Config& config);
// The prune solver is the toy policy rolled out in the configured world.
Solver solver_from(const Config& config);
// endpoint/model fall back to JUDGE_ENDPOINT / JUDGE_MODEL when keys absent.
// require_usable=false reads (and consumes) the keys without demanding an
// endpoint — for runs that turn out to have nothing to judge.
JudgeConfig judge_config_from(const Config& config, bool require_usable = true);

}  // namespace faithrl
