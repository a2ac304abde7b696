#pragma once

// Faithfulness-aware advantage modulation: per-token scaling of the group
// advantage driven by per-step faithfulness verdicts. Tokens inside a
// reasoning step share that step's verdict; answer-span tokens are never
// modulated. alpha in [0,1] interpolates between full modulation (0) and the
// unmodulated baseline (1).

#include <cstdint>
#include <vector>

#include "faithrl/core.hpp"

namespace faithrl {

// Rule-based verifier for symbolic trajectories: 1 iff the step cites at
// least one item and every cited item is evidence-supported — the item either
// resolves (as a doc_id) to a document whose text is an evidence statement,
// or is itself an evidence statement. Contentless steps (no citations) are 0:
// a step that adds no new information is never counted faithful.
int verify_step_symbolic(const Step& step, const Instance& instance);

// Scalar modulation factor:
//   A > 0:  (1 - alpha) * v + alpha        (keep faithful credit, starve unfaithful)
//   A <= 0: (1 - alpha) * (1 - v) + alpha  (keep unfaithful blame, shield faithful)
// Throws Error(InvalidArgument) for alpha outside [0,1] or verdict outside {0,1}.
double modulation_factor(double advantage, int verdict, double alpha);

// Per-token factors for one trajectory, length trajectory.token_count().
// step_verdicts must align with trajectory.steps (Error(InvalidArgument)
// otherwise); the trajectory must pass validate(). Answer tokens get 1.0.
std::vector<double> token_modulation(const Trajectory& trajectory,
                                     const std::vector<int>& step_verdicts,
                                     double advantage,
                                     double alpha);

// Convenience: factor[t] * advantage for every token.
std::vector<double> modulated_advantages(const Trajectory& trajectory,
                                         const std::vector<int>& step_verdicts,
                                         double advantage,
                                         double alpha);

}  // namespace faithrl
