#pragma once

// Reward schemes: the binary group-RL reward, the geometric reward derived
// from the baseline capability point, and the three objective rewards used by
// the refusal-asymptotics experiment; plus offline baseline estimation.

#include <functional>
#include <string>
#include <vector>

#include "faithrl/core.hpp"
#include "faithrl/metrics.hpp"

namespace faithrl {

enum class RewardVariant {
  BinaryCorrectness,      // objective A / vanilla binary reward
  NegativeHallucination,  // objective B
  FaithfulnessIndicator,  // objective C
  Geometric,
};

struct RewardScheme {
  RewardVariant variant = RewardVariant::BinaryCorrectness;
  CapabilityPoint baseline;  // used by Geometric only

  static RewardScheme objective_a() { return {RewardVariant::BinaryCorrectness, {}}; }
  static RewardScheme objective_b() { return {RewardVariant::NegativeHallucination, {}}; }
  static RewardScheme objective_c() { return {RewardVariant::FaithfulnessIndicator, {}}; }
  // Throws Error(InvalidArgument) unless the point is valid and x > 0 or y > 0.
  static RewardScheme geometric(const CapabilityPoint& baseline);

  // Parses the config spelling: objective_a | objective_b | objective_c | geometric.
  static RewardVariant parse_variant(const std::string& name);
};

// 1 iff Correct, else 0.
double grpo_reward(OutcomeClass outcome);

// Correct → +baseline.y; Miss → 0; Hallucination → −baseline.x.
double geometric_reward(OutcomeClass outcome, const CapabilityPoint& baseline);

// Dispatch over the scheme. `match` is consulted only by FaithfulnessIndicator
// (reward 1 iff the trajectory is Faithful).
double objective_reward(const RewardScheme& scheme, OutcomeClass outcome, MatchClass match);

// One rollout outcome for instance `instance`, rollout index `r` (the source
// owns its own seeding; indices make parallel estimation order-independent).
using OutcomeSource = std::function<OutcomeClass(const Instance& instance, uint64_t r)>;

// Empirical (P(C), P(H)) over rollouts_per_instance × instances, computed once
// before training and then held fixed. Throws Error(EmptyBatch) on an empty
// instance list, Error(InvalidArgument) when rollouts_per_instance == 0.
CapabilityPoint estimate_baseline(const OutcomeSource& source,
                                  const std::vector<Instance>& instances,
                                  uint64_t rollouts_per_instance);

}  // namespace faithrl
