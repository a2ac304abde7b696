#include "faithrl/faam.hpp"

#include <algorithm>

#include "faithrl/error.hpp"

namespace faithrl {

int verify_step_symbolic(const Step& step, const Instance& instance) {
  if (step.cited_items.empty()) return 0;
  for (const std::string& item : step.cited_items) {
    const Document* doc = instance.find_document(item);
    const std::string& statement = doc != nullptr ? doc->text : item;
    if (std::find(instance.evidence.begin(), instance.evidence.end(), statement) ==
        instance.evidence.end()) {
      return 0;
    }
  }
  return 1;
}

double modulation_factor(double advantage, int verdict, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0,1]");
  }
  if (verdict != 0 && verdict != 1) {
    throw Error(ErrorCode::InvalidArgument, "step verdict must be 0 or 1");
  }
  const double v = static_cast<double>(verdict);
  if (advantage > 0.0) {
    return (1.0 - alpha) * v + alpha;
  }
  return (1.0 - alpha) * (1.0 - v) + alpha;
}

std::vector<double> token_modulation(const Trajectory& trajectory,
                                     const std::vector<int>& step_verdicts,
                                     double advantage,
                                     double alpha) {
  trajectory.validate();
  if (step_verdicts.size() != trajectory.steps.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "step verdict count does not match trajectory step count");
  }
  std::vector<double> factors(trajectory.token_count(), 1.0);
  for (std::size_t j = 0; j < trajectory.steps.size(); ++j) {
    const double m = modulation_factor(advantage, step_verdicts[j], alpha);
    const Span& span = trajectory.step_spans[j];
    for (std::size_t t = span.begin; t < span.end; ++t) {
      factors[t] = m;
    }
  }
  // Answer span tokens keep the initial 1.0.
  return factors;
}

std::vector<double> modulated_advantages(const Trajectory& trajectory,
                                         const std::vector<int>& step_verdicts,
                                         double advantage,
                                         double alpha) {
  std::vector<double> out = token_modulation(trajectory, step_verdicts, advantage, alpha);
  for (double& m : out) m *= advantage;
  return out;
}

}  // namespace faithrl
