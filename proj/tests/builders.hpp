#pragma once

// Hand-built domain objects for tests: minimal valid instances and
// trajectories with one token per step plus a one-token answer span.

#include <string>
#include <vector>

#include "faithrl/core.hpp"

namespace testutil {

// Two-hop answerable instance with one distractor; gold answer "gold".
inline faithrl::Instance make_instance(const std::string& id = "t1") {
  faithrl::Instance instance;
  instance.id = id;
  instance.question = "what does the chain yield?";
  instance.documents = {
      {"e1", "hop 1: alpha leads to beta"},
      {"e2", "hop 2: beta yields answer: gold"},
      {"d1", "noise 1: zeta is unrelated"},
  };
  instance.evidence = {"hop 1: alpha leads to beta", "hop 2: beta yields answer: gold"};
  instance.gold_answer = "gold";
  instance.answerable = true;
  return instance;
}

// `cited` holds one cited-item list per step; answer span is one token.
inline faithrl::Trajectory make_trajectory(
    const std::vector<std::vector<std::string>>& cited, const std::string& answer,
    double logprob = -0.5) {
  faithrl::Trajectory trajectory;
  const std::size_t steps = cited.size();
  for (std::size_t s = 0; s < steps; ++s) {
    faithrl::Step step;
    step.text = cited[s].empty() ? "unsupported leap" : "cite " + cited[s].front();
    step.cited_items = cited[s];
    trajectory.steps.push_back(step);
    trajectory.step_spans.push_back({s, s + 1});
  }
  trajectory.step_spans.push_back({steps, steps + 1});
  trajectory.answer = answer;
  trajectory.logprobs_old.assign(steps + 1, logprob);
  trajectory.logprobs_new.assign(steps + 1, logprob);
  return trajectory;
}

}  // namespace testutil
