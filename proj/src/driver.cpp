#include "faithrl/driver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "faithrl/datagen.hpp"
#include "faithrl/error.hpp"
#include "faithrl/jsonl.hpp"
#include "faithrl/judge.hpp"
#include "faithrl/synthenv.hpp"
#include "faithrl/version.hpp"

namespace faithrl {

namespace {

using nlohmann::json;

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  int64_t elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// NaN is not representable in JSON; manifests carry it as null.
json number_or_null(double v) {
  if (std::isfinite(v)) return json(v);
  return json(nullptr);
}

json config_snapshot(const Config& config) {
  json snapshot = json::object();
  for (const auto& [key, value] : config.entries()) snapshot[key] = value;
  return snapshot;
}

void write_json_file(const std::string& path, const json& value) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path);
  out << value.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

void write_manifest(const std::string& path, const std::string& command,
                    const Config& config, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, int64_t wall_ms,
                    const json& summary) {
  if (path.empty()) return;
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["config"] = config_snapshot(config);
  manifest["inputs"] = inputs;
  manifest["outputs"] = outputs;
  manifest["wall_ms"] = wall_ms;
  manifest["summary"] = summary;
  write_json_file(path, manifest);
}

json stats_json(const ExactStats& stats) {
  json j;
  j["p_correct"] = number_or_null(stats.rates.p_correct);
  j["p_miss"] = number_or_null(stats.rates.p_miss);
  j["p_hallucination"] = number_or_null(stats.rates.p_hallucination);
  j["p_faithful"] = number_or_null(stats.rates.p_faithful);
  j["expected_geometric"] = number_or_null(stats.expected_geometric);
  j["ths"] = number_or_null(stats.ths_value);
  j["faithful_ratio"] = number_or_null(stats.faithful_ratio);
  return j;
}

}  // namespace

// --- train ----------------------------------------------------------------------

TrainOutcome run_train(const Config& config, const std::string& metrics_path,
                       const std::string& manifest_path) {
  WallClock clock;
  const ExperimentConfig experiment = experiment_config_from(config);
  config.require_all_consumed();

  const ExperimentResult result = run_objective_experiment(experiment);
  write_metrics_csv(metrics_path, result.curve);

  TrainOutcome outcome;
  outcome.initial_stats = result.initial_stats;
  outcome.final_stats = result.final_stats;
  outcome.baseline_used = result.baseline_used;
  outcome.baseline_available = result.baseline_available;
  outcome.metrics_path = metrics_path;
  outcome.manifest_path = manifest_path;
  outcome.rows_written = static_cast<int64_t>(result.curve.size());

  json summary;
  summary["initial"] = stats_json(result.initial_stats);
  summary["final"] = stats_json(result.final_stats);
  summary["baseline_available"] = result.baseline_available;
  summary["baseline"] = {{"x", result.baseline_used.x}, {"y", result.baseline_used.y}};
  summary["rows"] = outcome.rows_written;
  write_manifest(manifest_path, "train", config, {}, {metrics_path}, clock.elapsed_ms(),
                 summary);
  return outcome;
}

// --- score ----------------------------------------------------------------------

namespace {

// File-order trajectory index within each instance; the (instance_id, index)
// pair is the join key between trajectory and verdict records.
std::vector<std::size_t> per_instance_indices(const std::vector<TrajectoryRecord>& records) {
  std::map<std::string, std::size_t> counters;
  std::vector<std::size_t> indices;
  indices.reserve(records.size());
  for (const TrajectoryRecord& record : records) {
    indices.push_back(counters[record.instance_id]++);
  }
  return indices;
}

std::vector<VerdictRecord> judge_verdicts(const Config& config,
                                          const std::vector<Instance>& instances,
                                          const std::vector<TrajectoryRecord>& records) {
  std::map<std::string, const Instance*> by_id;
  for (const Instance& instance : instances) by_id[instance.id] = &instance;

  const std::vector<std::size_t> indices = per_instance_indices(records);
  std::vector<VerdictRecord> verdicts(records.size());
  std::vector<JudgeRequest> requests;
  // Maps request slot → (record, step) so batched replies land on the right verdict.
  std::vector<std::pair<std::size_t, std::size_t>> slots;

  for (std::size_t r = 0; r < records.size(); ++r) {
    const TrajectoryRecord& record = records[r];
    const auto found = by_id.find(record.instance_id);
    if (found == by_id.end()) {
      throw Error(ErrorCode::Schema, "unknown instance id: " + record.instance_id);
    }
    const Instance& instance = *found->second;
    const std::string evidence_text = join_lines(instance.evidence);
    VerdictRecord& verdict = verdicts[r];
    verdict.instance_id = record.instance_id;
    verdict.trajectory_index = indices[r];
    verdict.step_verdicts.assign(record.trajectory.steps.size(), 0);
    for (std::size_t s = 0; s < record.trajectory.steps.size(); ++s) {
      const std::string& segment = record.trajectory.steps[s].text;
      if (segment.empty()) continue;  // nothing to judge; stays 0
      requests.push_back(make_step_request(record.instance_id,
                                           static_cast<int>(indices[r]),
                                           static_cast<int>(s), evidence_text, segment));
      slots.emplace_back(r, s);
    }
  }

  // Resolve the judge config either way so judge.* keys count as consumed,
  // but only demand a usable endpoint when something will be sent.
  const JudgeConfig judge = judge_config_from(config, !requests.empty());
  if (!requests.empty()) {
    const std::vector<JudgeResult> results = judge_batch(requests, judge);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const JudgeResult& result = results[i];
      if (!result.ok) throw Error(result.error_code, result.error);
      verdicts[slots[i].first].step_verdicts[slots[i].second] = result.value;
    }
  }
  return verdicts;
}

}  // namespace

ScoreOutcome run_score(const Config& config, const std::string& instances_path,
                       const std::string& trajectories_path,
                       const std::string& verdicts_path,
                       const std::string& scores_path,
                       const std::string& manifest_path) {
  WallClock clock;
  const std::vector<Instance> instances = jsonl::read_instances(instances_path);
  const std::vector<TrajectoryRecord> records = jsonl::read_trajectories(trajectories_path);

  ScoreOutcome outcome;
  outcome.instances = instances.size();
  outcome.trajectories = records.size();
  outcome.judge_used = verdicts_path.empty();
  outcome.scores_path = scores_path;
  outcome.manifest_path = manifest_path;

  const ScoreOptions options = score_options_from(config);
  std::vector<VerdictRecord> verdicts;
  if (verdicts_path.empty()) {
    verdicts = judge_verdicts(config, instances, records);
  } else {
    verdicts = jsonl::read_verdicts(verdicts_path);
  }
  config.require_all_consumed();

  std::vector<ScoreRecord> scores;
  if (!records.empty()) {
    scores = score_trajectories(instances, records, verdicts, options);
  }
  jsonl::write_scores(scores_path, scores);
  outcome.records_written = scores.size();

  std::vector<std::string> inputs = {instances_path, trajectories_path};
  if (!verdicts_path.empty()) inputs.push_back(verdicts_path);
  json summary;
  summary["instances"] = outcome.instances;
  summary["trajectories"] = outcome.trajectories;
  summary["records_written"] = outcome.records_written;
  summary["judge_used"] = outcome.judge_used;
  write_manifest(manifest_path, "score", config, inputs, {scores_path},
                 clock.elapsed_ms(), summary);
  return outcome;
}

// --- prune ----------------------------------------------------------------------

PruneOutcome run_prune(const Config& config, const std::string& instances_path,
                       const std::string& output_path,
                       const std::string& report_path,
                       const std::string& manifest_path) {
  WallClock clock;
  const std::vector<Instance> instances = jsonl::read_instances(instances_path);
  const PruneOptions options = prune_options_from(config);
  const Solver solver = solver_from(config);
  config.require_all_consumed();

  const PruneResult result = prune_dataset(instances, solver, options);
  jsonl::write_instances(output_path, result.kept);
  if (!report_path.empty()) jsonl::write_prune_reports(report_path, result.reports);

  PruneOutcome outcome;
  outcome.input_instances = instances.size();
  outcome.kept = result.kept.size();
  outcome.output_path = output_path;
  outcome.report_path = report_path;
  outcome.manifest_path = manifest_path;
  for (const PruneReport& report : result.reports) {
    if (report.status == "cannot_prune") {
      ++outcome.cannot_prune;
    } else if (report.status == "filter_aborted") {
      ++outcome.filter_aborted;
    } else if (report.solvability.ran && !report.solvability.kept) {
      ++outcome.filtered_out;
    }
  }

  json summary;
  summary["input_instances"] = outcome.input_instances;
  summary["kept"] = outcome.kept;
  summary["cannot_prune"] = outcome.cannot_prune;
  summary["filter_aborted"] = outcome.filter_aborted;
  summary["filtered_out"] = outcome.filtered_out;
  std::vector<std::string> outputs = {output_path};
  if (!report_path.empty()) outputs.push_back(report_path);
  write_manifest(manifest_path, "prune", config, {instances_path}, outputs,
                 clock.elapsed_ms(), summary);
  return outcome;
}

// --- verify ---------------------------------------------------------------------

namespace {

struct VerifyReport {
  bool holds = false;
  std::string summary;
  json details;
};

const char* variant_config_name(RewardVariant variant) {
  switch (variant) {
    case RewardVariant::BinaryCorrectness: return "objective_a";
    case RewardVariant::NegativeHallucination: return "objective_b";
    case RewardVariant::FaithfulnessIndicator: return "objective_c";
    case RewardVariant::Geometric: return "geometric";
  }
  return "?";
}

// Theorem 1: run the configured objective across consecutive seeds and test
// the final exact miss rate against the objective's asymptotic band.
VerifyReport verify_theorem1(const Config& config) {
  ExperimentConfig experiment = experiment_config_from(config);
  const int seed_count = static_cast<int>(config.get_int("verify.seeds", 5));
  if (seed_count < 1) {
    throw Error(ErrorCode::InvalidArgument, "verify.seeds must be >= 1");
  }
  if (experiment.reward_variant == RewardVariant::Geometric) {
    throw Error(ErrorCode::InvalidArgument,
                "verify 1 tests the refusal asymptotics of objective_a, "
                "objective_b or objective_c; set reward.variant");
  }
  config.require_all_consumed();

  const double equilibrium = miss_equilibrium(experiment.world);
  const uint64_t base_seed = experiment.seed;
  VerifyReport report;
  report.holds = true;
  json seeds = json::array();
  double worst = 0.0;
  bool first = true;
  for (int i = 0; i < seed_count; ++i) {
    experiment.seed = base_seed + static_cast<uint64_t>(i);
    const ExperimentResult result = run_objective_experiment(experiment);
    const double p_miss = result.final_stats.rates.p_miss;
    bool in_band = false;
    switch (experiment.reward_variant) {
      case RewardVariant::BinaryCorrectness:
        in_band = p_miss < 0.05;
        break;
      case RewardVariant::NegativeHallucination:
        in_band = p_miss > 0.95;
        break;
      case RewardVariant::FaithfulnessIndicator:
        in_band = p_miss > 0.05 && p_miss < 0.95 &&
                  std::abs(p_miss - equilibrium) <= 0.15;
        break;
      case RewardVariant::Geometric:
        break;
    }
    report.holds = report.holds && in_band;
    seeds.push_back({{"seed", experiment.seed},
                     {"p_miss", number_or_null(p_miss)},
                     {"in_band", in_band}});
    if (first || std::abs(p_miss - equilibrium) > std::abs(worst - equilibrium)) {
      worst = p_miss;
      first = false;
    }
  }

  const char* band = experiment.reward_variant == RewardVariant::BinaryCorrectness
                         ? "P(M) < 0.05"
                         : experiment.reward_variant == RewardVariant::NegativeHallucination
                               ? "P(M) > 0.95"
                               : "0.05 < P(M) < 0.95 and |P(M) - (1 - c^k)| <= 0.15";
  report.details["objective"] = variant_config_name(experiment.reward_variant);
  report.details["band"] = band;
  report.details["miss_equilibrium"] = equilibrium;
  report.details["seeds"] = seeds;
  std::ostringstream line;
  line << "objective " << variant_config_name(experiment.reward_variant) << ": band "
       << band << ", " << seed_count << " seeds, worst final P(M) = " << worst;
  report.summary = line.str();
  return report;
}

// Theorem 2: exact gradient alignment over random policies in an enumerable
// world: cos(∇E[R_geo], ∇THS) = 1 and the fitted constant equals baseline.y.
VerifyReport verify_theorem2(const Config& config) {
  const WorldConfig world = world_config_from(config);
  const uint64_t seed = static_cast<uint64_t>(config.get_int("train.seed", 0));
  const int pool_size = static_cast<int>(config.get_int("train.eval_instances", 8));
  const int policies = static_cast<int>(config.get_int("verify.policies", 20));
  const double tolerance = config.get_double("verify.tolerance", 1e-9);
  const double scale = config.get_double("verify.scale", 2.0);
  CapabilityPoint baseline{0.7, 0.1};
  baseline.x = config.get_double("reward.baseline_x", baseline.x);
  baseline.y = config.get_double("reward.baseline_y", baseline.y);
  baseline.validate();
  if (pool_size < 1 || policies < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "train.eval_instances and verify.policies must be >= 1");
  }
  config.require_all_consumed();

  std::vector<Instance> pool;
  pool.reserve(static_cast<std::size_t>(pool_size));
  Rng root(seed);
  for (int i = 0; i < pool_size; ++i) {
    pool.push_back(generate_instance(root.split("eval", static_cast<uint64_t>(i)).next_u64(),
                                     world));
  }

  VerifyReport report;
  report.holds = true;
  double worst_cosine_gap = 0.0;
  double worst_constant_gap = 0.0;
  int degenerate = 0;
  json rows = json::array();
  for (int p = 0; p < policies; ++p) {
    Rng rng = root.split("policy", static_cast<uint64_t>(p));
    const ToyPolicy policy = random_policy(rng, scale);
    const AlignmentReport alignment =
        verify_theorem2_alignment(policy, pool, baseline, world, tolerance);
    report.holds = report.holds && alignment.holds;
    if (alignment.degenerate) {
      ++degenerate;
    } else {
      worst_cosine_gap = std::max(worst_cosine_gap, std::abs(alignment.cosine - 1.0));
      worst_constant_gap =
          std::max(worst_constant_gap, std::abs(alignment.fitted_c - alignment.expected_c));
    }
    rows.push_back({{"policy", p},
                    {"cosine", number_or_null(alignment.cosine)},
                    {"fitted_c", number_or_null(alignment.fitted_c)},
                    {"expected_c", alignment.expected_c},
                    {"degenerate", alignment.degenerate},
                    {"holds", alignment.holds}});
  }

  report.details["policies"] = rows;
  report.details["tolerance"] = tolerance;
  report.details["baseline"] = {{"x", baseline.x}, {"y", baseline.y}};
  report.details["worst_cosine_gap"] = worst_cosine_gap;
  report.details["worst_constant_gap"] = worst_constant_gap;
  report.details["degenerate_policies"] = degenerate;
  std::ostringstream line;
  line << policies << " random policies over " << pool_size
       << " instances: max |cos - 1| = " << worst_cosine_gap << ", max |C - y0| = "
       << worst_constant_gap;
  report.summary = line.str();
  return report;
}

// Theorem 3: the mismatch-case suite under the configured alpha; holds iff
// every Spurious A>0 / Faltered A<=0 entry has exactly zero step contribution.
VerifyReport verify_theorem3(const Config& config) {
  const OptimizerConfig optimizer = optimizer_config_from(config);
  config.require_all_consumed();

  std::vector<TrajectoryGroup> suite = build_mismatch_suite();
  for (TrajectoryGroup& group : suite) finalize_group(group, optimizer);
  const RectificationReport rectification = verify_theorem3_rectification(suite, optimizer);

  std::size_t filtered = 0;
  double max_unfiltered_step = 0.0;
  for (const RectificationEntry& entry : rectification.entries) {
    const bool is_filtered = (entry.match == MatchClass::Spurious && entry.advantage > 0.0) ||
                             (entry.match == MatchClass::Faltered && entry.advantage <= 0.0);
    if (is_filtered) {
      ++filtered;
    } else {
      max_unfiltered_step = std::max(max_unfiltered_step, entry.step_contribution);
    }
  }

  VerifyReport report;
  report.holds = rectification.holds;
  report.details["alpha"] = optimizer.alpha;
  report.details["groups"] = suite.size();
  report.details["entries"] = rectification.entries.size();
  report.details["filtered_entries"] = filtered;
  report.details["max_filtered_step_contribution"] =
      rectification.max_filtered_step_contribution;
  report.details["max_unfiltered_step_contribution"] = max_unfiltered_step;
  std::ostringstream line;
  line << "alpha = " << optimizer.alpha << ": max filtered step contribution = "
       << rectification.max_filtered_step_contribution << " over " << filtered
       << " filtered of " << rectification.entries.size() << " entries";
  report.summary = line.str();
  return report;
}

}  // namespace

VerifyOutcome run_verify(const Config& config, int theorem,
                         const std::string& report_path,
                         const std::string& manifest_path) {
  WallClock clock;
  VerifyReport report;
  switch (theorem) {
    case 1: report = verify_theorem1(config); break;
    case 2: report = verify_theorem2(config); break;
    case 3: report = verify_theorem3(config); break;
    default:
      throw Error(ErrorCode::InvalidArgument,
                  "theorem must be 1, 2 or 3 (got " + std::to_string(theorem) + ")");
  }

  json body;
  body["theorem"] = theorem;
  body["holds"] = report.holds;
  body["summary"] = report.summary;
  body["details"] = report.details;
  if (!report_path.empty()) write_json_file(report_path, body);

  VerifyOutcome outcome;
  outcome.theorem = theorem;
  outcome.holds = report.holds;
  outcome.summary = report.summary;
  outcome.report_path = report_path;
  outcome.manifest_path = manifest_path;

  json summary;
  summary["theorem"] = theorem;
  summary["holds"] = report.holds;
  summary["line"] = report.summary;
  std::vector<std::string> outputs;
  if (!report_path.empty()) outputs.push_back(report_path);
  write_manifest(manifest_path, "verify", config, {}, outputs, clock.elapsed_ms(),
                 summary);
  return outcome;
}

// --- mismatch suite --------------------------------------------------------------

namespace {

enum class RatioRegime { Unit, High, Low, Mixed };

double regime_factor(RatioRegime regime, std::size_t token) {
  switch (regime) {
    case RatioRegime::Unit: return 1.0;
    case RatioRegime::High: return 1.3;
    case RatioRegime::Low: return 0.7;
    case RatioRegime::Mixed: return token % 2 == 0 ? 0.9 : 1.1;
  }
  return 1.0;
}

Trajectory make_suite_trajectory(MatchClass match, std::size_t step_count,
                                 std::size_t answer_tokens, RatioRegime regime) {
  const bool faithful_steps = match == MatchClass::Faithful || match == MatchClass::Faltered;
  const bool correct = match == MatchClass::Faithful || match == MatchClass::Spurious;
  Trajectory trajectory;
  const std::size_t total = step_count + answer_tokens;
  trajectory.logprobs_old.assign(total, -0.7);
  trajectory.logprobs_new.resize(total);
  for (std::size_t t = 0; t < total; ++t) {
    trajectory.logprobs_new[t] = trajectory.logprobs_old[t] + std::log(regime_factor(regime, t));
  }
  for (std::size_t s = 0; s < step_count; ++s) {
    Step step;
    step.text = faithful_steps ? "cite e" + std::to_string(s + 1) : "unsupported leap";
    if (faithful_steps) step.cited_items.push_back("e" + std::to_string(s + 1));
    trajectory.steps.push_back(std::move(step));
    trajectory.step_spans.push_back({s, s + 1});
  }
  trajectory.step_spans.push_back({step_count, total});
  trajectory.answer = correct ? "gold" : "not gold";
  trajectory.validate();
  return trajectory;
}

// One group of four trajectories, one per match class, with the given reward
// pattern. Verdict vectors are all-ones for Faithful/Faltered and all-zeros
// for Spurious/HallucinatedBoth (the trajectory-level verifier broadcast).
TrajectoryGroup make_suite_group(const std::string& id, std::size_t step_count,
                                 std::size_t answer_tokens, RatioRegime regime,
                                 const std::array<double, 4>& rewards) {
  static constexpr std::array<MatchClass, 4> kOrder = {
      MatchClass::Spurious, MatchClass::Faltered, MatchClass::Faithful,
      MatchClass::HallucinatedBoth};
  TrajectoryGroup group;
  group.instance_id = id;
  for (std::size_t i = 0; i < kOrder.size(); ++i) {
    const MatchClass match = kOrder[i];
    const bool faithful_steps = match == MatchClass::Faithful || match == MatchClass::Faltered;
    const bool correct = match == MatchClass::Faithful || match == MatchClass::Spurious;
    group.trajectories.push_back(
        make_suite_trajectory(match, step_count, answer_tokens, regime));
    group.rewards.push_back(rewards[i]);
    group.outcomes.push_back(correct ? OutcomeClass::Correct : OutcomeClass::Hallucination);
    group.matches.push_back(match);
    group.step_verdicts.emplace_back(step_count, faithful_steps ? 1 : 0);
  }
  return group;
}

}  // namespace

std::vector<TrajectoryGroup> build_mismatch_suite() {
  static constexpr std::array<RatioRegime, 4> kRegimes = {
      RatioRegime::Unit, RatioRegime::High, RatioRegime::Low, RatioRegime::Mixed};
  // Reward patterns over (Spurious, Faltered, Faithful, HallucinatedBoth):
  // the first puts Spurious on A>0 and Faltered on A<0 (both filtered), the
  // second flips the signs, the third is zero-spread (A = 0 boundary).
  static constexpr std::array<std::array<double, 4>, 3> kRewardPatterns = {{
      {1.0, 0.0, 1.0, 0.0},
      {0.0, 1.0, 0.0, 1.0},
      {1.0, 1.0, 1.0, 1.0},
  }};
  static const char* kRegimeNames[] = {"unit", "high", "low", "mixed"};

  std::vector<TrajectoryGroup> suite;
  for (std::size_t step_count = 1; step_count <= 3; ++step_count) {
    for (std::size_t regime = 0; regime < kRegimes.size(); ++regime) {
      for (std::size_t pattern = 0; pattern < kRewardPatterns.size(); ++pattern) {
        for (std::size_t answer_tokens = 1; answer_tokens <= 2; ++answer_tokens) {
          std::string id = "suite-s" + std::to_string(step_count) + "-" +
                           kRegimeNames[regime] + "-p" + std::to_string(pattern) +
                           "-a" + std::to_string(answer_tokens);
          suite.push_back(make_suite_group(id, step_count, answer_tokens,
                                           kRegimes[regime], kRewardPatterns[pattern]));
        }
      }
    }
  }
  return suite;
}

// --- report ---------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_csv_number(const std::string& text, const std::string& path) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t consumed = 0;
    const double value = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Schema, path + ": bad numeric field '" + text + "'");
  }
}

}  // namespace

ReportOutcome run_report(const std::vector<std::string>& csv_paths,
                         const std::string& summary_path) {
  ReportOutcome outcome;
  outcome.summary_path = summary_path;

  for (const std::string& path : csv_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open metrics csv: " + path);
    std::string line;
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::Schema, path + ": empty metrics csv");
    }
    if (line != format_metrics_header()) {
      throw Error(ErrorCode::Schema, path + ": unrecognized metrics header");
    }
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> fields = split_csv_line(line);
      if (fields.size() != 10) {
        throw Error(ErrorCode::Schema, path + ": expected 10 fields per row");
      }
      rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw Error(ErrorCode::Schema, path + ": no data rows");

    const std::vector<std::string>& first = rows.front();
    const std::vector<std::string>& last = rows.back();
    ReportRow row;
    row.path = path;
    row.steps = static_cast<int64_t>(rows.size()) - 1;  // row 0 is the baseline row
    row.final_p_correct = parse_csv_number(last[1], path);
    row.final_p_miss = parse_csv_number(last[2], path);
    row.final_p_hallucination = parse_csv_number(last[3], path);
    row.final_ths = parse_csv_number(last[4], path);
    row.final_faithful_ratio = parse_csv_number(last[5], path);
    row.delta_faithful_ratio =
        row.final_faithful_ratio - parse_csv_number(first[5], path);
    outcome.rows.push_back(row);
  }

  std::ostringstream table;
  table << "file,steps,final_p_correct,final_p_miss,final_p_hallucination,"
           "final_ths,final_faithful_ratio,delta_faithful_ratio\n";
  char buffer[512];
  for (const ReportRow& row : outcome.rows) {
    std::snprintf(buffer, sizeof(buffer), "%s,%lld,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n",
                  row.path.c_str(), static_cast<long long>(row.steps),
                  row.final_p_correct, row.final_p_miss, row.final_p_hallucination,
                  row.final_ths, row.final_faithful_ratio, row.delta_faithful_ratio);
    table << buffer;
  }
  outcome.table = table.str();

  if (!summary_path.empty()) {
    std::ofstream out(summary_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + summary_path);
    out << outcome.table;
    if (!out) throw Error(ErrorCode::Io, "write failed: " + summary_path);
  }
  return outcome;
}

}  // namespace faithrl
