#pragma once

// A finite, enumerable multi-hop world and a 12-parameter softmax policy.
//
// An instance is a unique evidence chain e1 → … → ek ending in a gold answer,
// plus distractor documents. The policy walks the chain with four abstract
// actions — cite the next evidence item, cite a distractor, answer now,
// refuse — conditioned on one of three observable states:
//   Found: the per-hop knowledge head located the next evidence item,
//   Stuck: it did not (always the case at a pruned hop),
//   Done:  the full chain has been cited.
// Each cite/distract action is one step and one token. Every deliberate
// terminal costs exactly two tokens — the action token plus a θ-free
// answer-content token — so trajectories terminating at the same progress
// point have equal token counts and the per-token 1/|τ| weighting treats
// answering and refusing symmetrically. Answering at Done yields the gold
// answer deterministically (correctness sufficiency by construction); its
// span is [answer action, content]. Answering early emits an uncited "leap"
// step (always unfaithful) whose token is the action, followed by a
// content-only answer span: the guess recovers the answer embedded in the
// final-hop document with probability guess_rate when that document is
// present, and is a fixed wrong string otherwise — so lucky guesses exist and
// are always Spurious. Refusing answers IDK with span [refuse action,
// content]. Trajectories that exhaust the action budget (chain_length + 2)
// are coerced to a single-token θ-free refusal.
//
// Head draws (one Bernoulli(capability) per hop, forced to 0 where the hop's
// document is missing) are environment randomness, sampled per trajectory and
// enumerated exactly alongside action choices and the guess branch.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "faithrl/core.hpp"
#include "faithrl/datagen.hpp"
#include "faithrl/grpo.hpp"
#include "faithrl/metrics.hpp"
#include "faithrl/reward.hpp"
#include "faithrl/rng.hpp"

namespace faithrl {

struct WorldConfig {
  int chain_length = 2;  // k ≥ 2
  int num_distractors = 2;
  double unanswerable_fraction = 0.0;
  double capability = 0.8;  // per-hop head success probability
  double guess_rate = 0.2;  // must be strictly inside (0,1)

  int horizon() const { return chain_length + 2; }
  // Throws Error(InvalidArgument) on violations.
  void validate() const;
};

inline constexpr int kNumStates = 3;   // Found, Stuck, Done
inline constexpr int kNumActions = 4;  // Cite, Distract, Answer, Refuse
inline constexpr int kNumParams = kNumStates * kNumActions;

enum class ToyState { Found = 0, Stuck = 1, Done = 2 };
enum class ToyAction { Cite = 0, Distract = 1, Answer = 2, Refuse = 3 };

using PolicyGradient = std::array<double, kNumParams>;

struct ToyPolicy {
  // Row-major: logits[state * kNumActions + action]. Cite and Distract are
  // document-selection moves, masked (illegal) outside Found; their Stuck and
  // Done parameters are inert. Stuck and Done offer answer-or-refuse only.
  std::array<double, kNumParams> logits{};

  static bool action_legal(int state, int action);
  // Masked softmax over the state's legal actions; illegal entries are 0.
  std::array<double, kNumActions> action_probs(int state) const;
  double log_prob(int state, int action) const;  // action must be legal
  // ∂ log π(action|state) / ∂ logits: δ − π over the state's legal row.
  PolicyGradient log_prob_gradient(int state, int action) const;
};

ToyPolicy make_policy(const std::array<double, kNumParams>& logits);
// Logits i.i.d. uniform in [−scale, scale].
ToyPolicy random_policy(Rng& rng, double scale = 1.0);

// Per-token annotation parallel to a Trajectory's tokens. Learnable tokens
// were sampled from the policy at (state, action); the rest carry fixed
// environment log-probabilities (guess content, coerced refusal).
struct ToyToken {
  int state = 0;
  int action = 0;
  bool learnable = false;
  double logprob = 0.0;
};

struct ToyTrace {
  std::vector<ToyToken> tokens;
};

// A trajectory group plus the traces needed to differentiate through it.
struct ToyGroup {
  TrajectoryGroup group;
  std::vector<ToyTrace> traces;
};

// Deterministic instance construction. The gold answer is embedded only in
// the final evidence document ("yields answer: …"), so a pruned final hop
// makes it unrecoverable to guessing. With probability unanswerable_fraction
// the instance is pruned (via prune_evidence) into an unanswerable one.
Instance generate_instance(uint64_t seed, const WorldConfig& config);

struct ToyRolloutResult {
  Trajectory trajectory;
  ToyTrace trace;
  std::vector<int> step_verdicts;  // symbolic verifier, one per step
  OutcomeClass outcome = OutcomeClass::Miss;
  MatchClass match = MatchClass::Faithful;
};

ToyRolloutResult rollout_trajectory(const ToyPolicy& policy, const Instance& instance,
                                    const WorldConfig& config, Rng& rng);

// N independent rollouts (split seeds). Fills trajectories, traces, verdicts,
// outcomes and matches; rewards are applied separately by apply_reward_scheme.
// logprobs_old = logprobs_new = the sampling policy's log-probs.
ToyGroup rollout_group(const ToyPolicy& policy, const Instance& instance,
                       const WorldConfig& config, std::size_t n, uint64_t seed);

// rewards[i] = objective_reward(scheme, outcomes[i], matches[i]).
void apply_reward_scheme(ToyGroup& batch, const RewardScheme& scheme);

// Recomputes logprobs_new of every learnable token (and the affected
// probability ratios) under `policy`, leaving advantages/modulations fixed.
void refresh_logprobs(ToyGroup& batch, const ToyPolicy& policy);

// --- Exact enumeration --------------------------------------------------------

struct EnumeratedTrajectory {
  Trajectory trajectory;
  ToyTrace trace;
  std::vector<int> step_verdicts;
  OutcomeClass outcome = OutcomeClass::Miss;
  MatchClass match = MatchClass::Faithful;
  double probability = 0.0;  // joint over head draws, actions, guess branch
};

// Every trajectory the (policy, instance) pair can produce, with exact
// probabilities summing to 1. Throws Error(EnumerationOverflow) when the
// space exceeds max_size.
std::vector<EnumeratedTrajectory> enumerate_trajectory_space(
    const ToyPolicy& policy, const Instance& instance, const WorldConfig& config,
    std::size_t max_size = 1000000);

struct ExactStats {
  RateSummary rates;
  double expected_geometric = 0.0;  // NaN without a baseline
  double ths_value = 0.0;           // NaN without a baseline or when undefined
  double faithful_ratio = 0.0;      // E[faithful steps] / E[steps]; NaN at 0/0
};

// Exact expectations over the uniform mixture of `instances`.
ExactStats exact_policy_stats(const ToyPolicy& policy,
                              const std::vector<Instance>& instances,
                              const WorldConfig& config,
                              const std::optional<CapabilityPoint>& baseline);

// ∇_θ E[R_geo] by exact enumeration (reward-weighted score function).
PolicyGradient exact_objective_gradient(const ToyPolicy& policy,
                                        const std::vector<Instance>& instances,
                                        const WorldConfig& config,
                                        const CapabilityPoint& baseline);

// ∇_θ P(outcome class) by exact enumeration (indicator-weighted).
PolicyGradient exact_rate_gradient(const ToyPolicy& policy,
                                   const std::vector<Instance>& instances,
                                   const WorldConfig& config, OutcomeClass which);

// --- Theorem 2: gradient alignment -------------------------------------------

struct AlignmentReport {
  PolicyGradient grad_objective{};  // ∇ E[R_geo], reward-weighted path
  PolicyGradient grad_ths{};        // ∇ THS assembled from rate gradients
  double objective_norm = 0.0;
  double ths_norm = 0.0;
  double cosine = 0.0;    // NaN when degenerate
  double fitted_c = 0.0;  // ⟨∇J, ∇THS⟩ / ⟨∇THS, ∇THS⟩; NaN when degenerate
  double expected_c = 0.0;  // 2·S_ideal = baseline.y
  bool degenerate = false;  // both gradients ≈ 0 (stationary policy)
  bool holds = false;
};

// Exact-enumeration check that ∇E[R_geo] = y0·∇THS. Throws
// Error(THSUndefined) when baseline.y == 0.
AlignmentReport verify_theorem2_alignment(const ToyPolicy& policy,
                                          const std::vector<Instance>& instances,
                                          const CapabilityPoint& baseline,
                                          const WorldConfig& config,
                                          double tolerance = 1e-9);

// --- Analytic policy gradient -------------------------------------------------

// ∇_θ of faithrl_objective over these batches under `policy` (advantages,
// modulations and clip branches held fixed; ratios at the current
// logprobs_new, which must reflect `policy` — see refresh_logprobs).
PolicyGradient objective_gradient(const ToyPolicy& policy,
                                  const std::vector<ToyGroup>& batches,
                                  const OptimizerConfig& config);

// One ascent step: logits += learning_rate · gradient. Throws
// Error(NumericalFailure) on a non-finite gradient or parameter.
ToyPolicy policy_gradient_step(const ToyPolicy& policy,
                               const std::vector<ToyGroup>& batches,
                               const OptimizerConfig& config);

// --- Adapters ------------------------------------------------------------------

// Single-rollout solver for the datagen solvability filter (best-of-N comes
// from the filter's attempt loop). Deterministic per (instance id, attempt).
Solver make_toy_solver(const ToyPolicy& policy, const WorldConfig& config, uint64_t seed);

// Outcome source for offline baseline estimation, same determinism contract.
OutcomeSource make_outcome_source(const ToyPolicy& policy, const WorldConfig& config,
                                  uint64_t seed);

// --- The objective experiment: training loop ----------------------------------

struct ExperimentConfig {
  WorldConfig world;
  OptimizerConfig optimizer;
  RewardVariant reward_variant = RewardVariant::BinaryCorrectness;
  // Geometric reward baseline: fixed point, or estimated offline when unset.
  std::optional<CapabilityPoint> fixed_baseline;
  uint64_t baseline_rollouts = 4;  // per eval instance, when estimating
  bool baseline_refresh = false;   // re-estimate periodically (default off)
  uint64_t baseline_refresh_every = 0;  // steps; 0 = never

  uint64_t seed = 0;
  int steps = 2000;
  int groups_per_step = 1;  // fresh instances (groups) sampled per step
  int eval_instances = 64;  // fixed offline pool for baseline + exact stats
  std::array<double, kNumParams> init_logits{};

  void validate() const;
};

struct ExperimentResult {
  std::vector<MetricsRow> curve;  // row 0 = exact initial stats; rows 1..steps
                                  // = per-step sampled-batch metrics
  ExactStats initial_stats;       // exact, over the eval pool
  ExactStats final_stats;
  CapabilityPoint baseline_used;  // estimated or fixed; (0,0) if unavailable
  bool baseline_available = false;
  ToyPolicy final_policy;
};

// Trains the toy policy with the configured reward and emits the rate curve.
// Throws Error(NumericalFailure) on divergence.
ExperimentResult run_objective_experiment(const ExperimentConfig& config);

// The capability-implied miss-rate equilibrium of the faithfulness objective:
// 1 − capability^chain_length.
double miss_equilibrium(const WorldConfig& config);

}  // namespace faithrl
