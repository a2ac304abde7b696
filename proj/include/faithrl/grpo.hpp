#pragma once

// Group-relative advantage estimation, the clipped surrogate, and the
// modulated training objective. Also the score-only pipeline that turns
// ingested trajectories + verdicts into per-token modulated advantages for
// external trainers.

#include <cstddef>
#include <string>
#include <vector>

#include "faithrl/core.hpp"
#include "faithrl/faam.hpp"
#include "faithrl/reward.hpp"

namespace faithrl {

enum class Normalization { Population, Sample };

struct OptimizerConfig {
  std::size_t group_size = 8;  // N
  double clip_epsilon = 0.2;
  double alpha = 0.0;
  double learning_rate = 0.05;
  double std_floor = 1e-8;
  Normalization normalization = Normalization::Population;
  bool kl_enabled = false;  // no KL term exists in this codebase; true is rejected

  // Throws Error(InvalidArgument) unless group_size ≥ 2, clip_epsilon > 0,
  // std_floor > 0, alpha ∈ [0,1], learning_rate finite, kl_enabled == false.
  void validate() const;
};

// One group of N trajectories rolled out (or ingested) for a single instance.
// rewards is the only input list finalize_group() requires besides the
// trajectories themselves; advantages / token_ratios / modulations are derived.
// outcomes / matches / step_verdicts are labels the producer fills in when it
// can (the synthetic environment always does; score mode fills verdicts from
// the verdict file and outcomes from the gold answers).
struct TrajectoryGroup {
  std::string instance_id;
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<std::vector<double>> token_ratios;  // ρ_{i,t} = exp(new − old)
  std::vector<std::vector<double>> modulations;   // M_{i,t}
  std::vector<OutcomeClass> outcomes;
  std::vector<MatchClass> matches;
  std::vector<std::vector<int>> step_verdicts;

  std::size_t size() const { return trajectories.size(); }

  // Structural check. Lists that must always align: trajectories/rewards.
  // When require_derived, advantages/token_ratios/modulations must be
  // populated and aligned too. Throws Error(InvalidArgument) on violation.
  void validate(bool require_derived) const;
};

// A_i = (r_i − μ) / max(σ, std_floor); exactly zero for a zero-spread group.
// Throws Error(GroupTooSmall) when rewards.size() < 2.
std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     const OptimizerConfig& config);

// min(ρ·A, clip(ρ, 1−ε, 1+ε)·A). Throws Error(InvalidArgument) unless ρ > 0.
double clipped_surrogate(double ratio, double advantage, double clip_epsilon);

// True when the surrogate at (ρ, A) sits on the unclipped branch, i.e. the
// branch whose gradient flows (ties go to the unclipped branch).
bool surrogate_unclipped(double ratio, double advantage, double clip_epsilon);

// Derives advantages from rewards, token ratios from the trajectories'
// logprob pairs, and modulations from step_verdicts + config.alpha.
// Requires step_verdicts populated (Error(InvalidArgument) otherwise).
void finalize_group(TrajectoryGroup& group, const OptimizerConfig& config);

// Mean over groups of (1/N)·Σ_i (1/|τ_i|)·Σ_t M_{i,t}·L_clip(i,t).
// Requires derived lists populated. Throws Error(EmptyBatch) on no groups.
double faithrl_objective(const std::vector<TrajectoryGroup>& groups,
                         const OptimizerConfig& config);

// The unmodulated objective of plain group-RL: same accumulation with
// M ≡ 1. faithrl_objective with alpha = 1 equals this bitwise.
double grpo_objective(const std::vector<TrajectoryGroup>& groups,
                      const OptimizerConfig& config);

// The scalar multiplying ∇log π for token t of trajectory i, excluding the
// outer (1/G) factor: (1/N)·(1/|τ_i|)·M_{i,t}·A_i·ρ_{i,t}·[unclipped].
// Used by the analytic gradient and by the rectification report.
double token_gradient_coefficient(const TrajectoryGroup& group, std::size_t i,
                                  std::size_t t, const OptimizerConfig& config);

// --- Theorem-3 rectification report -----------------------------------------

struct RectificationEntry {
  std::string instance_id;
  std::size_t trajectory_index = 0;
  MatchClass match = MatchClass::Faithful;
  double advantage = 0.0;
  double step_contribution = 0.0;    // Σ over reasoning-step tokens of |coeff|
  double answer_contribution = 0.0;  // Σ over answer-span tokens of |coeff|
};

struct RectificationReport {
  std::vector<RectificationEntry> entries;
  // Max |step_contribution| over Spurious entries with A > 0 and Faltered
  // entries with A ≤ 0 — exactly 0.0 when Theorem 3's filter holds.
  double max_filtered_step_contribution = 0.0;
  bool holds = false;
};

// Measures contributions under config.alpha as given: holds is true only when
// every filtered step contribution is exactly 0 (the alpha = 0 regime).
// Requires matches populated. Pure report; asserts nothing itself.
RectificationReport verify_theorem3_rectification(
    const std::vector<TrajectoryGroup>& groups, const OptimizerConfig& config);

// --- Score-only mode ---------------------------------------------------------

struct TrajectoryRecord {
  std::string instance_id;
  Trajectory trajectory;
};

struct VerdictRecord {
  std::string instance_id;
  std::size_t trajectory_index = 0;
  std::vector<int> step_verdicts;
};

struct ScoreRecord {
  std::string instance_id;
  std::size_t trajectory_index = 0;
  double advantage = 0.0;
  std::vector<double> modulation;
  std::vector<double> modulated_advantage;
};

struct ScoreOptions {
  RewardScheme scheme = RewardScheme::objective_a();
  OptimizerConfig optimizer;
  AnswerMatcher matcher;  // defaults to exact_match when empty
};

// Groups the trajectory records by instance id (file order preserved inside a
// group), attaches verdicts by (instance_id, trajectory_index), classifies
// each answer against the instance gold, rewards it per the scheme, and
// normalizes within the group. Missing instance / missing verdict row /
// verdict length mismatch / duplicate (id, index) → Error(Schema). Groups of
// size 1 → Error(GroupTooSmall).
std::vector<ScoreRecord> score_trajectories(const std::vector<Instance>& instances,
                                            const std::vector<TrajectoryRecord>& trajectories,
                                            const std::vector<VerdictRecord>& verdicts,
                                            const ScoreOptions& options);

}  // namespace faithrl
