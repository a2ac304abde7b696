#include "faithrl/reward.hpp"

#include "faithrl/error.hpp"

namespace faithrl {

RewardScheme RewardScheme::geometric(const CapabilityPoint& baseline) {
  baseline.validate();
  if (!(baseline.x > 0.0 || baseline.y > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "geometric reward needs a baseline with x > 0 or y > 0");
  }
  return {RewardVariant::Geometric, baseline};
}

RewardVariant RewardScheme::parse_variant(const std::string& name) {
  if (name == "objective_a") return RewardVariant::BinaryCorrectness;
  if (name == "objective_b") return RewardVariant::NegativeHallucination;
  if (name == "objective_c") return RewardVariant::FaithfulnessIndicator;
  if (name == "geometric") return RewardVariant::Geometric;
  throw Error(ErrorCode::InvalidArgument, "unknown reward variant: " + name);
}

double grpo_reward(OutcomeClass outcome) {
  return outcome == OutcomeClass::Correct ? 1.0 : 0.0;
}

double geometric_reward(OutcomeClass outcome, const CapabilityPoint& baseline) {
  switch (outcome) {
    case OutcomeClass::Correct: return baseline.y;
    case OutcomeClass::Miss: return 0.0;
    case OutcomeClass::Hallucination: return -baseline.x;
  }
  throw Error(ErrorCode::InvalidArgument, "unreachable outcome value");
}

double objective_reward(const RewardScheme& scheme, OutcomeClass outcome, MatchClass match) {
  switch (scheme.variant) {
    case RewardVariant::BinaryCorrectness:
      return grpo_reward(outcome);
    case RewardVariant::NegativeHallucination:
      return outcome == OutcomeClass::Hallucination ? -1.0 : 0.0;
    case RewardVariant::FaithfulnessIndicator:
      return match == MatchClass::Faithful ? 1.0 : 0.0;
    case RewardVariant::Geometric:
      return geometric_reward(outcome, scheme.baseline);
  }
  throw Error(ErrorCode::InvalidArgument, "unreachable reward variant");
}

CapabilityPoint estimate_baseline(const OutcomeSource& source,
                                  const std::vector<Instance>& instances,
                                  uint64_t rollouts_per_instance) {
  if (instances.empty()) {
    throw Error(ErrorCode::EmptyBatch, "baseline estimation over an empty instance list");
  }
  if (rollouts_per_instance == 0) {
    throw Error(ErrorCode::InvalidArgument, "rollouts_per_instance must be positive");
  }
  uint64_t correct = 0;
  uint64_t hallucinated = 0;
  uint64_t total = 0;
  for (const Instance& instance : instances) {
    for (uint64_t r = 0; r < rollouts_per_instance; ++r) {
      switch (source(instance, r)) {
        case OutcomeClass::Correct: ++correct; break;
        case OutcomeClass::Hallucination: ++hallucinated; break;
        case OutcomeClass::Miss: break;
      }
      ++total;
    }
  }
  CapabilityPoint point;
  point.x = static_cast<double>(correct) / static_cast<double>(total);
  point.y = static_cast<double>(hallucinated) / static_cast<double>(total);
  return point;
}

}  // namespace faithrl
