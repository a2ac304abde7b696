#include "faithrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "faithrl/error.hpp"

namespace faithrl {

void OptimizerConfig::validate() const {
  if (group_size < 2) {
    throw Error(ErrorCode::InvalidArgument, "group_size must be at least 2");
  }
  if (!(clip_epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "clip_epsilon must be positive");
  }
  if (!(std_floor > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "std_floor must be positive");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0,1]");
  }
  if (!std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidArgument, "learning_rate must be finite");
  }
  if (kl_enabled) {
    throw Error(ErrorCode::InvalidArgument,
                "kl_enabled is not supported: no KL term is implemented");
  }
}

void TrajectoryGroup::validate(bool require_derived) const {
  const std::size_t n = trajectories.size();
  if (rewards.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "rewards/trajectories length mismatch");
  }
  for (const Trajectory& t : trajectories) {
    t.validate();
    if (t.token_count() == 0) {
      throw Error(ErrorCode::InvalidArgument, "trajectory with zero tokens");
    }
  }
  if (!outcomes.empty() && outcomes.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "outcomes length mismatch");
  }
  if (!matches.empty() && matches.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "matches length mismatch");
  }
  if (!step_verdicts.empty()) {
    if (step_verdicts.size() != n) {
      throw Error(ErrorCode::InvalidArgument, "step_verdicts length mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (step_verdicts[i].size() != trajectories[i].steps.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "step_verdicts[i] does not align with trajectory steps");
      }
    }
  }
  if (!require_derived) return;
  if (advantages.size() != n || token_ratios.size() != n || modulations.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "derived lists not populated");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (token_ratios[i].size() != trajectories[i].token_count() ||
        modulations[i].size() != trajectories[i].token_count()) {
      throw Error(ErrorCode::InvalidArgument, "per-token lists do not align");
    }
  }
}

std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     const OptimizerConfig& config) {
  const std::size_t n = rewards.size();
  if (n < 2) {
    throw Error(ErrorCode::GroupTooSmall, "advantage normalization needs a group of at least 2");
  }
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  if (*lo == *hi) {
    // Zero spread: exactly zero advantages, no division by the floored σ.
    return std::vector<double>(n, 0.0);
  }
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double denom = config.normalization == Normalization::Population
                           ? static_cast<double>(n)
                           : static_cast<double>(n - 1);
  const double sigma = std::sqrt(ss / denom);
  std::vector<double> advantages(n);
  const double scale = 1.0 / std::max(sigma, config.std_floor);
  for (std::size_t i = 0; i < n; ++i) {
    advantages[i] = (rewards[i] - mean) * scale;
  }
  return advantages;
}

double clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
  if (!(ratio > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "probability ratio must be positive");
  }
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

bool surrogate_unclipped(double ratio, double advantage, double clip_epsilon) {
  if (advantage > 0.0) return ratio <= 1.0 + clip_epsilon;
  if (advantage < 0.0) return ratio >= 1.0 - clip_epsilon;
  return true;  // zero advantage: both branches are 0 with zero gradient
}

void finalize_group(TrajectoryGroup& group, const OptimizerConfig& config) {
  config.validate();
  group.validate(false);
  if (group.step_verdicts.size() != group.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "finalize_group needs step_verdicts for every trajectory");
  }
  group.advantages = group_advantages(group.rewards, config);
  group.token_ratios.clear();
  group.modulations.clear();
  group.token_ratios.reserve(group.size());
  group.modulations.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Trajectory& traj = group.trajectories[i];
    std::vector<double> ratios(traj.token_count());
    for (std::size_t t = 0; t < traj.token_count(); ++t) {
      const double rho = std::exp(traj.logprobs_new[t] - traj.logprobs_old[t]);
      if (!std::isfinite(rho) || !(rho > 0.0)) {
        throw Error(ErrorCode::NumericalFailure, "non-finite probability ratio");
      }
      ratios[t] = rho;
    }
    group.token_ratios.push_back(std::move(ratios));
    group.modulations.push_back(token_modulation(traj, group.step_verdicts[i],
                                                 group.advantages[i], config.alpha));
  }
}

namespace {

double objective_impl(const std::vector<TrajectoryGroup>& groups,
                      const OptimizerConfig& config, bool use_modulation) {
  config.validate();
  if (groups.empty()) {
    throw Error(ErrorCode::EmptyBatch, "objective over zero groups");
  }
  double total = 0.0;
  for (const TrajectoryGroup& group : groups) {
    group.validate(false);
    const std::size_t n = group.size();
    if (group.advantages.size() != n || group.token_ratios.size() != n ||
        (use_modulation && group.modulations.size() != n)) {
      throw Error(ErrorCode::InvalidArgument, "group missing derived lists; run finalize_group");
    }
    double group_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Trajectory& traj = group.trajectories[i];
      const std::size_t tokens = traj.token_count();
      if (group.token_ratios[i].size() != tokens ||
          (use_modulation && group.modulations[i].size() != tokens)) {
        throw Error(ErrorCode::InvalidArgument, "per-token lists do not align");
      }
      double traj_sum = 0.0;
      for (std::size_t t = 0; t < tokens; ++t) {
        const double m = use_modulation ? group.modulations[i][t] : 1.0;
        traj_sum += m * clipped_surrogate(group.token_ratios[i][t],
                                          group.advantages[i], config.clip_epsilon);
      }
      group_sum += traj_sum / static_cast<double>(tokens);
    }
    total += group_sum / static_cast<double>(n);
  }
  const double objective = total / static_cast<double>(groups.size());
  if (!std::isfinite(objective)) {
    throw Error(ErrorCode::NumericalFailure, "non-finite objective");
  }
  return objective;
}

}  // namespace

double faithrl_objective(const std::vector<TrajectoryGroup>& groups,
                         const OptimizerConfig& config) {
  return objective_impl(groups, config, /*use_modulation=*/true);
}

double grpo_objective(const std::vector<TrajectoryGroup>& groups,
                      const OptimizerConfig& config) {
  return objective_impl(groups, config, /*use_modulation=*/false);
}

double token_gradient_coefficient(const TrajectoryGroup& group, std::size_t i,
                                  std::size_t t, const OptimizerConfig& config) {
  const double a = group.advantages.at(i);
  const double rho = group.token_ratios.at(i).at(t);
  if (!surrogate_unclipped(rho, a, config.clip_epsilon)) return 0.0;
  const double m = group.modulations.at(i).at(t);
  const double inv_tokens = 1.0 / static_cast<double>(group.trajectories[i].token_count());
  const double inv_n = 1.0 / static_cast<double>(group.size());
  return inv_n * inv_tokens * m * a * rho;
}

RectificationReport verify_theorem3_rectification(
    const std::vector<TrajectoryGroup>& groups, const OptimizerConfig& config) {
  RectificationReport report;
  for (const TrajectoryGroup& group : groups) {
    group.validate(true);
    if (group.matches.size() != group.size()) {
      throw Error(ErrorCode::InvalidArgument, "match classes not populated");
    }
    for (std::size_t i = 0; i < group.size(); ++i) {
      const Trajectory& traj = group.trajectories[i];
      RectificationEntry entry;
      entry.instance_id = group.instance_id;
      entry.trajectory_index = i;
      entry.match = group.matches[i];
      entry.advantage = group.advantages[i];
      const Span answer = traj.answer_span();
      for (std::size_t t = 0; t < traj.token_count(); ++t) {
        const double c = std::abs(token_gradient_coefficient(group, i, t, config));
        if (t >= answer.begin && t < answer.end) {
          entry.answer_contribution += c;
        } else {
          entry.step_contribution += c;
        }
      }
      const bool filtered =
          (entry.match == MatchClass::Spurious && entry.advantage > 0.0) ||
          (entry.match == MatchClass::Faltered && entry.advantage <= 0.0);
      if (filtered) {
        report.max_filtered_step_contribution =
            std::max(report.max_filtered_step_contribution, entry.step_contribution);
      }
      report.entries.push_back(std::move(entry));
    }
  }
  report.holds = report.max_filtered_step_contribution == 0.0;
  return report;
}

std::vector<ScoreRecord> score_trajectories(const std::vector<Instance>& instances,
                                            const std::vector<TrajectoryRecord>& trajectories,
                                            const std::vector<VerdictRecord>& verdicts,
                                            const ScoreOptions& options) {
  std::map<std::string, const Instance*> instance_by_id;
  for (const Instance& instance : instances) {
    if (!instance_by_id.emplace(instance.id, &instance).second) {
      throw Error(ErrorCode::Schema, "duplicate instance id: " + instance.id);
    }
  }
  std::map<std::pair<std::string, std::size_t>, const VerdictRecord*> verdict_by_key;
  for (const VerdictRecord& v : verdicts) {
    if (!verdict_by_key.emplace(std::make_pair(v.instance_id, v.trajectory_index), &v).second) {
      throw Error(ErrorCode::Schema, "duplicate verdict row for instance " + v.instance_id);
    }
  }

  // Group trajectory records by instance id, keeping file order both across
  // groups (first appearance) and within a group (trajectory_index order).
  std::vector<std::string> order;
  std::map<std::string, std::vector<const TrajectoryRecord*>> by_instance;
  for (const TrajectoryRecord& rec : trajectories) {
    auto [it, inserted] = by_instance.try_emplace(rec.instance_id);
    if (inserted) order.push_back(rec.instance_id);
    it->second.push_back(&rec);
  }

  const AnswerMatcher matcher = options.matcher ? options.matcher : AnswerMatcher(exact_match);
  std::vector<ScoreRecord> out;
  for (const std::string& id : order) {
    const auto inst_it = instance_by_id.find(id);
    if (inst_it == instance_by_id.end()) {
      throw Error(ErrorCode::Schema, "trajectory references unknown instance id: " + id);
    }
    const Instance& instance = *inst_it->second;
    const auto& recs = by_instance[id];
    if (recs.size() < 2) {
      throw Error(ErrorCode::GroupTooSmall,
                  "instance " + id + " has fewer than 2 trajectories to normalize over");
    }
    TrajectoryGroup group;
    group.instance_id = id;
    for (std::size_t j = 0; j < recs.size(); ++j) {
      const Trajectory& traj = recs[j]->trajectory;
      traj.validate();
      const auto v_it = verdict_by_key.find(std::make_pair(id, j));
      if (v_it == verdict_by_key.end()) {
        throw Error(ErrorCode::Schema, "missing verdict row for instance " + id +
                                           " trajectory " + std::to_string(j));
      }
      const std::vector<int>& stepv = v_it->second->step_verdicts;
      if (stepv.size() != traj.steps.size()) {
        throw Error(ErrorCode::Schema, "verdict count does not match step count for instance " +
                                           id + " trajectory " + std::to_string(j));
      }
      const OutcomeClass outcome = classify_outcome(traj, instance, matcher);
      const MatchClass match = classify_match(traj, outcome, stepv);
      group.trajectories.push_back(traj);
      group.rewards.push_back(objective_reward(options.scheme, outcome, match));
      group.outcomes.push_back(outcome);
      group.matches.push_back(match);
      group.step_verdicts.push_back(stepv);
    }
    finalize_group(group, options.optimizer);
    for (std::size_t j = 0; j < group.size(); ++j) {
      ScoreRecord rec;
      rec.instance_id = id;
      rec.trajectory_index = j;
      rec.advantage = group.advantages[j];
      rec.modulation = group.modulations[j];
      rec.modulated_advantage.reserve(rec.modulation.size());
      for (double m : rec.modulation) {
        rec.modulated_advantage.push_back(m * rec.advantage);
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace faithrl
