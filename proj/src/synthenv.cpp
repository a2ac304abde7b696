#include "faithrl/synthenv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include "faithrl/error.hpp"
#include "faithrl/faam.hpp"

namespace faithrl {

namespace {

constexpr const char* kWrongGuess = "unsupported-claim";
constexpr const char* kAnswerMarker = "yields answer: ";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string hex8(uint64_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", static_cast<unsigned>(v & 0xffffffffu));
  return std::string(buf);
}

std::string hex16(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Static facts about an instance that the dynamics need: which evidence hop
// still has a backing document, the distractor ids, and the answer string a
// guess can recover from the final-hop document (empty when unrecoverable).
struct WorldView {
  std::vector<std::string> hop_doc_ids;  // per real hop; "" when doc missing
  std::vector<bool> hop_present;
  std::vector<std::string> distractor_ids;
  std::string guess_candidate;
  int hops = 0;
};

WorldView build_view(const Instance& instance) {
  WorldView view;
  std::vector<std::string> hop_statements;
  for (const std::string& e : instance.evidence) {
    if (e == kIdk) continue;
    hop_statements.push_back(e);
  }
  view.hops = static_cast<int>(hop_statements.size());
  view.hop_doc_ids.assign(hop_statements.size(), std::string());
  view.hop_present.assign(hop_statements.size(), false);
  for (const Document& doc : instance.documents) {
    bool is_evidence = false;
    for (std::size_t h = 0; h < hop_statements.size(); ++h) {
      if (doc.text == hop_statements[h]) {
        if (!view.hop_present[h]) {
          view.hop_doc_ids[h] = doc.doc_id;
          view.hop_present[h] = true;
        }
        is_evidence = true;
      }
    }
    if (!is_evidence) view.distractor_ids.push_back(doc.doc_id);
    const std::size_t pos = doc.text.find(kAnswerMarker);
    if (pos != std::string::npos && view.guess_candidate.empty()) {
      view.guess_candidate = doc.text.substr(pos + std::string(kAnswerMarker).size());
    }
  }
  return view;
}

int state_index(ToyState s) { return static_cast<int>(s); }
int action_index(ToyAction a) { return static_cast<int>(a); }

Step make_cite_step(const std::string& doc_id) {
  Step step;
  step.text = "cite " + doc_id;
  step.cited_items.push_back(doc_id);
  return step;
}

Step make_leap_step() {
  Step step;
  step.text = "answer without support";
  return step;
}

// Assembles the Trajectory from accumulated steps plus the answer token, and
// classifies it. Token layout: one token per step, then one answer token.
ToyRolloutResult assemble(const Instance& instance, std::vector<Step> steps,
                          std::vector<ToyToken> tokens, std::string answer) {
  ToyRolloutResult result;
  result.trajectory.steps = std::move(steps);
  result.trajectory.answer = std::move(answer);
  const std::size_t total = tokens.size();
  result.trajectory.logprobs_old.reserve(total);
  for (const ToyToken& tok : tokens) {
    result.trajectory.logprobs_old.push_back(tok.logprob);
  }
  result.trajectory.logprobs_new = result.trajectory.logprobs_old;
  for (std::size_t j = 0; j < result.trajectory.steps.size(); ++j) {
    result.trajectory.step_spans.push_back({j, j + 1});
  }
  result.trajectory.step_spans.push_back({result.trajectory.steps.size(), total});
  result.trace.tokens = std::move(tokens);
  result.trajectory.validate();
  result.step_verdicts.reserve(result.trajectory.steps.size());
  for (const Step& step : result.trajectory.steps) {
    result.step_verdicts.push_back(verify_step_symbolic(step, instance));
  }
  result.outcome = classify_outcome(result.trajectory, instance);
  result.match = classify_match(result.trajectory, result.outcome, result.step_verdicts);
  return result;
}

double dot(const PolicyGradient& a, const PolicyGradient& b) {
  double s = 0.0;
  for (int i = 0; i < kNumParams; ++i) s += a[i] * b[i];
  return s;
}

double norm(const PolicyGradient& g) { return std::sqrt(dot(g, g)); }

}  // namespace

void WorldConfig::validate() const {
  if (chain_length < 2) {
    throw Error(ErrorCode::InvalidArgument, "chain_length must be at least 2");
  }
  if (num_distractors < 1) {
    throw Error(ErrorCode::InvalidArgument, "num_distractors must be at least 1");
  }
  if (!(unanswerable_fraction >= 0.0 && unanswerable_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "unanswerable_fraction must lie in [0,1]");
  }
  if (!(capability >= 0.0 && capability <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "capability must lie in [0,1]");
  }
  if (!(guess_rate > 0.0 && guess_rate < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "guess_rate must be strictly between 0 and 1 so lucky guesses exist");
  }
}

double miss_equilibrium(const WorldConfig& config) {
  return 1.0 - std::pow(config.capability, config.chain_length);
}

bool ToyPolicy::action_legal(int state, int action) {
  if (state < 0 || state >= kNumStates || action < 0 || action >= kNumActions) return false;
  // Cite and Distract are document-selection moves, only available while a
  // document is in hand (Found). Stuck and Done reduce to answer-or-refuse,
  // mirroring the decision structure of the refusal-equilibrium analysis.
  if (action == action_index(ToyAction::Cite) || action == action_index(ToyAction::Distract)) {
    return state == state_index(ToyState::Found);
  }
  return true;
}

std::array<double, kNumActions> ToyPolicy::action_probs(int state) const {
  std::array<double, kNumActions> probs{};
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < kNumActions; ++a) {
    if (action_legal(state, a)) max_logit = std::max(max_logit, logits[state * kNumActions + a]);
  }
  double z = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    if (!action_legal(state, a)) continue;
    probs[a] = std::exp(logits[state * kNumActions + a] - max_logit);
    z += probs[a];
  }
  for (int a = 0; a < kNumActions; ++a) probs[a] /= z;
  return probs;
}

double ToyPolicy::log_prob(int state, int action) const {
  if (!action_legal(state, action)) {
    throw Error(ErrorCode::InvalidArgument, "log_prob of an illegal (state, action) pair");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < kNumActions; ++a) {
    if (action_legal(state, a)) max_logit = std::max(max_logit, logits[state * kNumActions + a]);
  }
  double z = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    if (action_legal(state, a)) z += std::exp(logits[state * kNumActions + a] - max_logit);
  }
  return logits[state * kNumActions + action] - max_logit - std::log(z);
}

PolicyGradient ToyPolicy::log_prob_gradient(int state, int action) const {
  if (!action_legal(state, action)) {
    throw Error(ErrorCode::InvalidArgument, "gradient of an illegal (state, action) pair");
  }
  PolicyGradient grad{};
  const std::array<double, kNumActions> probs = action_probs(state);
  for (int a = 0; a < kNumActions; ++a) {
    if (!action_legal(state, a)) continue;
    grad[state * kNumActions + a] = (a == action ? 1.0 : 0.0) - probs[a];
  }
  return grad;
}

ToyPolicy make_policy(const std::array<double, kNumParams>& logits) {
  ToyPolicy policy;
  policy.logits = logits;
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "policy logits must be finite");
    }
  }
  return policy;
}

ToyPolicy random_policy(Rng& rng, double scale) {
  ToyPolicy policy;
  for (double& v : policy.logits) v = (2.0 * rng.next_double() - 1.0) * scale;
  return policy;
}

Instance generate_instance(uint64_t seed, const WorldConfig& config) {
  config.validate();
  Rng rng = Rng(seed).split("instance");
  const int k = config.chain_length;
  std::vector<std::string> keys;
  keys.reserve(static_cast<std::size_t>(k) + 1);
  for (int j = 0; j <= k; ++j) keys.push_back("key-" + hex8(rng.next_u64()));
  const std::string gold = "ans-" + hex8(rng.next_u64());

  Instance instance;
  instance.id = "q" + hex16(seed);
  instance.question = "Starting from " + keys[0] + ", what does the chain finally yield?";
  instance.gold_answer = gold;
  instance.answerable = true;
  for (int j = 1; j <= k; ++j) {
    std::string text;
    if (j < k) {
      text = "hop " + std::to_string(j) + ": " + keys[j - 1] + " leads to " + keys[j];
    } else {
      text = "hop " + std::to_string(j) + ": " + keys[j - 1] + " " + kAnswerMarker + gold;
    }
    instance.evidence.push_back(text);
    instance.documents.push_back({"e" + std::to_string(j), text});
  }
  for (int i = 1; i <= config.num_distractors; ++i) {
    instance.documents.push_back(
        {"d" + std::to_string(i),
         "noise " + std::to_string(i) + ": " + hex8(rng.next_u64()) + " is unrelated"});
  }
  instance.validate();
  if (rng.next_bernoulli(config.unanswerable_fraction)) {
    return prune_evidence(instance, rng.next_u64()).first;
  }
  return instance;
}

ToyRolloutResult rollout_trajectory(const ToyPolicy& policy, const Instance& instance,
                                    const WorldConfig& config, Rng& rng) {
  const WorldView view = build_view(instance);
  std::vector<Step> steps;
  std::vector<ToyToken> tokens;
  std::vector<int> head;  // lazily drawn; -1 = not yet queried
  head.assign(static_cast<std::size_t>(view.hops), -1);
  int p = 0;
  int budget = config.horizon();
  std::size_t distract_counter = 0;

  for (;;) {
    if (budget == 0) {
      // Horizon exhausted: coerced refusal, probability-1 environment token.
      tokens.push_back({0, 0, false, 0.0});
      return assemble(instance, std::move(steps), std::move(tokens), kIdk);
    }
    ToyState state;
    if (p == view.hops) {
      state = ToyState::Done;
    } else {
      if (head[static_cast<std::size_t>(p)] == -1) {
        const bool can_find =
            view.hop_present[static_cast<std::size_t>(p)] && rng.next_bernoulli(config.capability);
        head[static_cast<std::size_t>(p)] = can_find ? 1 : 0;
      }
      state = head[static_cast<std::size_t>(p)] == 1 ? ToyState::Found : ToyState::Stuck;
    }
    const int s = state_index(state);
    const std::array<double, kNumActions> probs = policy.action_probs(s);
    const double u = rng.next_double();
    int action = -1;
    double cumulative = 0.0;
    for (int a = 0; a < kNumActions; ++a) {
      if (!ToyPolicy::action_legal(s, a)) continue;
      cumulative += probs[a];
      if (u < cumulative || a == kNumActions - 1) {
        action = a;
        break;
      }
    }
    if (action == -1) action = action_index(ToyAction::Refuse);
    --budget;
    const double lp = policy.log_prob(s, action);

    switch (static_cast<ToyAction>(action)) {
      case ToyAction::Cite: {
        steps.push_back(make_cite_step(view.hop_doc_ids[static_cast<std::size_t>(p)]));
        tokens.push_back({s, action, true, lp});
        ++p;
        break;
      }
      case ToyAction::Distract: {
        const std::string& id =
            view.distractor_ids[distract_counter % view.distractor_ids.size()];
        ++distract_counter;
        steps.push_back(make_cite_step(id));
        tokens.push_back({s, action, true, lp});
        break;
      }
      case ToyAction::Answer: {
        if (state == ToyState::Done) {
          // Full chain cited: the gold answer follows deterministically.
          tokens.push_back({s, action, true, lp});
          tokens.push_back({0, 0, false, 0.0});
          return assemble(instance, std::move(steps), std::move(tokens), instance.gold_answer);
        }
        // Early answer: an unsupported leap step, then θ-free guess content.
        steps.push_back(make_leap_step());
        tokens.push_back({s, action, true, lp});
        std::string answer;
        double content_lp = 0.0;
        if (!view.guess_candidate.empty()) {
          const bool lucky = rng.next_bernoulli(config.guess_rate);
          answer = lucky ? view.guess_candidate : kWrongGuess;
          content_lp = std::log(lucky ? config.guess_rate : 1.0 - config.guess_rate);
        } else {
          answer = kWrongGuess;
        }
        tokens.push_back({0, 0, false, content_lp});
        return assemble(instance, std::move(steps), std::move(tokens), std::move(answer));
      }
      case ToyAction::Refuse: {
        tokens.push_back({s, action, true, lp});
        tokens.push_back({0, 0, false, 0.0});
        return assemble(instance, std::move(steps), std::move(tokens), kIdk);
      }
    }
  }
}

ToyGroup rollout_group(const ToyPolicy& policy, const Instance& instance,
                       const WorldConfig& config, std::size_t n, uint64_t seed) {
  if (n < 2) {
    throw Error(ErrorCode::GroupTooSmall, "rollout groups need at least 2 trajectories");
  }
  ToyGroup batch;
  batch.group.instance_id = instance.id;
  const Rng root(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Rng traj_rng = root.split("traj", i);
    ToyRolloutResult rolled = rollout_trajectory(policy, instance, config, traj_rng);
    batch.group.trajectories.push_back(std::move(rolled.trajectory));
    batch.group.outcomes.push_back(rolled.outcome);
    batch.group.matches.push_back(rolled.match);
    batch.group.step_verdicts.push_back(std::move(rolled.step_verdicts));
    batch.traces.push_back(std::move(rolled.trace));
  }
  return batch;
}

void apply_reward_scheme(ToyGroup& batch, const RewardScheme& scheme) {
  const std::size_t n = batch.group.size();
  if (batch.group.outcomes.size() != n || batch.group.matches.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "rollout labels missing");
  }
  batch.group.rewards.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    batch.group.rewards[i] =
        objective_reward(scheme, batch.group.outcomes[i], batch.group.matches[i]);
  }
}

void refresh_logprobs(ToyGroup& batch, const ToyPolicy& policy) {
  const std::size_t n = batch.group.size();
  if (batch.traces.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "traces do not align with trajectories");
  }
  for (std::size_t i = 0; i < n; ++i) {
    Trajectory& traj = batch.group.trajectories[i];
    ToyTrace& trace = batch.traces[i];
    if (trace.tokens.size() != traj.token_count()) {
      throw Error(ErrorCode::InvalidArgument, "trace does not align with trajectory tokens");
    }
    for (std::size_t t = 0; t < trace.tokens.size(); ++t) {
      if (!trace.tokens[t].learnable) continue;
      const double lp = policy.log_prob(trace.tokens[t].state, trace.tokens[t].action);
      traj.logprobs_new[t] = lp;
      if (batch.group.token_ratios.size() == n) {
        const double rho = std::exp(lp - traj.logprobs_old[t]);
        if (!std::isfinite(rho) || !(rho > 0.0)) {
          throw Error(ErrorCode::NumericalFailure, "non-finite probability ratio");
        }
        batch.group.token_ratios[i][t] = rho;
      }
    }
  }
}

std::vector<EnumeratedTrajectory> enumerate_trajectory_space(
    const ToyPolicy& policy, const Instance& instance, const WorldConfig& config,
    std::size_t max_size) {
  config.validate();
  const WorldView view = build_view(instance);
  std::vector<EnumeratedTrajectory> out;

  struct Frame {
    int p;
    int budget;
    std::vector<int> head;  // -1 unqueried, else 0/1
    std::size_t distract_counter;
    std::vector<Step> steps;
    std::vector<ToyToken> tokens;
    double probability;
  };

  auto emit = [&](const Frame& frame, std::string answer, bool env_answer_token,
                  double env_logprob, double branch_probability) {
    if (out.size() >= max_size) {
      throw Error(ErrorCode::EnumerationOverflow, "trajectory space exceeds max_size");
    }
    std::vector<ToyToken> tokens = frame.tokens;
    if (env_answer_token) tokens.push_back({0, 0, false, env_logprob});
    EnumeratedTrajectory entry;
    ToyRolloutResult assembled =
        assemble(instance, frame.steps, std::move(tokens), std::move(answer));
    entry.trajectory = std::move(assembled.trajectory);
    entry.trace = std::move(assembled.trace);
    entry.step_verdicts = std::move(assembled.step_verdicts);
    entry.outcome = assembled.outcome;
    entry.match = assembled.match;
    entry.probability = frame.probability * branch_probability;
    out.push_back(std::move(entry));
  };

  // Explicit DFS; each frame sits just before a state resolution + action pick.
  std::vector<Frame> stack;
  Frame root;
  root.p = 0;
  root.budget = config.horizon();
  root.head.assign(static_cast<std::size_t>(view.hops), -1);
  root.distract_counter = 0;
  root.probability = 1.0;
  stack.push_back(std::move(root));

  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();

    if (frame.budget == 0) {
      Frame coerced = frame;  // keep `frame` intact for emit's use of steps
      emit(coerced, kIdk, /*env_answer_token=*/true, 0.0, 1.0);
      continue;
    }

    // Resolve the head draw for the current hop if it is still unqueried.
    if (frame.p < view.hops && frame.head[static_cast<std::size_t>(frame.p)] == -1) {
      const double c = view.hop_present[static_cast<std::size_t>(frame.p)]
                           ? config.capability
                           : 0.0;
      if (c > 0.0) {
        Frame found = frame;
        found.head[static_cast<std::size_t>(frame.p)] = 1;
        found.probability *= c;
        stack.push_back(std::move(found));
      }
      if (c < 1.0) {
        Frame stuck = std::move(frame);
        stuck.head[static_cast<std::size_t>(stuck.p)] = 0;
        stuck.probability *= 1.0 - c;
        stack.push_back(std::move(stuck));
      }
      continue;
    }

    const ToyState state =
        frame.p == view.hops
            ? ToyState::Done
            : (frame.head[static_cast<std::size_t>(frame.p)] == 1 ? ToyState::Found
                                                                  : ToyState::Stuck);
    const int s = state_index(state);
    const std::array<double, kNumActions> probs = policy.action_probs(s);

    for (int a = 0; a < kNumActions; ++a) {
      if (!ToyPolicy::action_legal(s, a)) continue;
      const double pa = probs[a];
      if (pa <= 0.0) continue;
      const double lp = policy.log_prob(s, a);
      switch (static_cast<ToyAction>(a)) {
        case ToyAction::Cite: {
          Frame next = frame;
          next.steps.push_back(make_cite_step(view.hop_doc_ids[static_cast<std::size_t>(next.p)]));
          next.tokens.push_back({s, a, true, lp});
          next.probability *= pa;
          next.p += 1;
          next.budget -= 1;
          stack.push_back(std::move(next));
          break;
        }
        case ToyAction::Distract: {
          Frame next = frame;
          const std::string& id =
              view.distractor_ids[next.distract_counter % view.distractor_ids.size()];
          next.distract_counter += 1;
          next.steps.push_back(make_cite_step(id));
          next.tokens.push_back({s, a, true, lp});
          next.probability *= pa;
          next.budget -= 1;
          stack.push_back(std::move(next));
          break;
        }
        case ToyAction::Answer: {
          if (state == ToyState::Done) {
            Frame leaf = frame;
            leaf.tokens.push_back({s, a, true, lp});
            leaf.probability *= pa;
            emit(leaf, instance.gold_answer, /*env_answer_token=*/true, 0.0, 1.0);
          } else {
            Frame leaf = frame;
            leaf.steps.push_back(make_leap_step());
            leaf.tokens.push_back({s, a, true, lp});
            leaf.probability *= pa;
            if (!view.guess_candidate.empty()) {
              emit(leaf, view.guess_candidate, true, std::log(config.guess_rate),
                   config.guess_rate);
              emit(leaf, kWrongGuess, true, std::log(1.0 - config.guess_rate),
                   1.0 - config.guess_rate);
            } else {
              emit(leaf, kWrongGuess, true, 0.0, 1.0);
            }
          }
          break;
        }
        case ToyAction::Refuse: {
          Frame leaf = frame;
          leaf.tokens.push_back({s, a, true, lp});
          leaf.probability *= pa;
          emit(leaf, kIdk, /*env_answer_token=*/true, 0.0, 1.0);
          break;
        }
      }
    }
  }
  return out;
}

ExactStats exact_policy_stats(const ToyPolicy& policy,
                              const std::vector<Instance>& instances,
                              const WorldConfig& config,
                              const std::optional<CapabilityPoint>& baseline) {
  if (instances.empty()) {
    throw Error(ErrorCode::EmptyBatch, "exact stats over an empty instance list");
  }
  const double w = 1.0 / static_cast<double>(instances.size());
  ExactStats stats;
  double p_correct = 0.0, p_miss = 0.0, p_hall = 0.0, p_faithful = 0.0;
  double faithful_steps = 0.0, total_steps = 0.0;
  double expected_geo = 0.0;
  for (const Instance& instance : instances) {
    const auto space = enumerate_trajectory_space(policy, instance, config);
    for (const EnumeratedTrajectory& entry : space) {
      const double pw = w * entry.probability;
      switch (entry.outcome) {
        case OutcomeClass::Correct: p_correct += pw; break;
        case OutcomeClass::Miss: p_miss += pw; break;
        case OutcomeClass::Hallucination: p_hall += pw; break;
      }
      if (entry.match == MatchClass::Faithful) p_faithful += pw;
      total_steps += pw * static_cast<double>(entry.step_verdicts.size());
      for (int v : entry.step_verdicts) {
        if (v == 1) faithful_steps += pw;
      }
      if (baseline) {
        expected_geo += pw * geometric_reward(entry.outcome, *baseline);
      }
    }
  }
  stats.rates.p_correct = p_correct;
  stats.rates.p_miss = p_miss;
  stats.rates.p_hallucination = p_hall;
  stats.rates.p_faithful = p_faithful;
  stats.faithful_ratio = total_steps > 0.0 ? faithful_steps / total_steps : kNaN;
  if (baseline) {
    stats.expected_geometric = expected_geo;
    try {
      stats.ths_value = ths(*baseline, {p_correct, p_hall});
    } catch (const Error&) {
      stats.ths_value = kNaN;
    }
  } else {
    stats.expected_geometric = kNaN;
    stats.ths_value = kNaN;
  }
  return stats;
}

namespace {

// Shared enumeration-driven accumulation of Σ p(τ)·weight(τ)·∇log p_θ(τ).
template <typename WeightFn>
PolicyGradient enumeration_gradient(const ToyPolicy& policy,
                                    const std::vector<Instance>& instances,
                                    const WorldConfig& config, const WeightFn& weight) {
  if (instances.empty()) {
    throw Error(ErrorCode::EmptyBatch, "gradient over an empty instance list");
  }
  const double w = 1.0 / static_cast<double>(instances.size());
  PolicyGradient grad{};
  for (const Instance& instance : instances) {
    const auto space = enumerate_trajectory_space(policy, instance, config);
    for (const EnumeratedTrajectory& entry : space) {
      const double coeff = w * entry.probability * weight(entry);
      if (coeff == 0.0) continue;
      for (const ToyToken& token : entry.trace.tokens) {
        if (!token.learnable) continue;
        const PolicyGradient g = policy.log_prob_gradient(token.state, token.action);
        for (int i = 0; i < kNumParams; ++i) grad[i] += coeff * g[i];
      }
    }
  }
  return grad;
}

}  // namespace

PolicyGradient exact_objective_gradient(const ToyPolicy& policy,
                                        const std::vector<Instance>& instances,
                                        const WorldConfig& config,
                                        const CapabilityPoint& baseline) {
  baseline.validate();
  return enumeration_gradient(policy, instances, config,
                              [&](const EnumeratedTrajectory& entry) {
                                return geometric_reward(entry.outcome, baseline);
                              });
}

PolicyGradient exact_rate_gradient(const ToyPolicy& policy,
                                   const std::vector<Instance>& instances,
                                   const WorldConfig& config, OutcomeClass which) {
  return enumeration_gradient(policy, instances, config,
                              [&](const EnumeratedTrajectory& entry) {
                                return entry.outcome == which ? 1.0 : 0.0;
                              });
}

AlignmentReport verify_theorem2_alignment(const ToyPolicy& policy,
                                          const std::vector<Instance>& instances,
                                          const CapabilityPoint& baseline,
                                          const WorldConfig& config, double tolerance) {
  baseline.validate();
  if (baseline.y == 0.0) {
    throw Error(ErrorCode::THSUndefined,
                "THS gradient undefined for a baseline with zero hallucination rate");
  }
  AlignmentReport report;
  report.expected_c = baseline.y;
  report.grad_objective = exact_objective_gradient(policy, instances, config, baseline);
  const PolicyGradient grad_correct =
      exact_rate_gradient(policy, instances, config, OutcomeClass::Correct);
  const PolicyGradient grad_hall =
      exact_rate_gradient(policy, instances, config, OutcomeClass::Hallucination);
  // THS(x1, y1) = (x1·y0 − x0·y1)/y0 ⇒ ∇THS = ∇P(C) − (x0/y0)·∇P(H).
  for (int i = 0; i < kNumParams; ++i) {
    report.grad_ths[i] = grad_correct[i] - (baseline.x / baseline.y) * grad_hall[i];
  }
  report.objective_norm = norm(report.grad_objective);
  report.ths_norm = norm(report.grad_ths);
  if (report.objective_norm < 1e-15 && report.ths_norm < 1e-15) {
    report.degenerate = true;
    report.cosine = kNaN;
    report.fitted_c = kNaN;
    report.holds = true;  // 0 = y0 · 0: the proportionality is vacuously exact
    return report;
  }
  report.cosine =
      dot(report.grad_objective, report.grad_ths) / (report.objective_norm * report.ths_norm);
  report.fitted_c =
      dot(report.grad_objective, report.grad_ths) / dot(report.grad_ths, report.grad_ths);
  report.holds = std::abs(report.cosine - 1.0) <= tolerance &&
                 std::abs(report.fitted_c - report.expected_c) <= tolerance;
  return report;
}

PolicyGradient objective_gradient(const ToyPolicy& policy,
                                  const std::vector<ToyGroup>& batches,
                                  const OptimizerConfig& config) {
  config.validate();
  if (batches.empty()) {
    throw Error(ErrorCode::EmptyBatch, "gradient over zero groups");
  }
  PolicyGradient grad{};
  for (const ToyGroup& batch : batches) {
    batch.group.validate(true);
    if (batch.traces.size() != batch.group.size()) {
      throw Error(ErrorCode::InvalidArgument, "traces do not align with trajectories");
    }
    for (std::size_t i = 0; i < batch.group.size(); ++i) {
      const ToyTrace& trace = batch.traces[i];
      if (trace.tokens.size() != batch.group.trajectories[i].token_count()) {
        throw Error(ErrorCode::InvalidArgument, "trace does not align with trajectory tokens");
      }
      for (std::size_t t = 0; t < trace.tokens.size(); ++t) {
        if (!trace.tokens[t].learnable) continue;
        const double coeff = token_gradient_coefficient(batch.group, i, t, config);
        if (coeff == 0.0) continue;
        const PolicyGradient g =
            policy.log_prob_gradient(trace.tokens[t].state, trace.tokens[t].action);
        for (int j = 0; j < kNumParams; ++j) grad[j] += coeff * g[j];
      }
    }
  }
  const double scale = 1.0 / static_cast<double>(batches.size());
  for (int j = 0; j < kNumParams; ++j) {
    grad[j] *= scale;
    if (!std::isfinite(grad[j])) {
      throw Error(ErrorCode::NumericalFailure, "non-finite policy gradient");
    }
  }
  return grad;
}

ToyPolicy policy_gradient_step(const ToyPolicy& policy,
                               const std::vector<ToyGroup>& batches,
                               const OptimizerConfig& config) {
  const PolicyGradient grad = objective_gradient(policy, batches, config);
  ToyPolicy updated = policy;
  for (int j = 0; j < kNumParams; ++j) {
    updated.logits[j] += config.learning_rate * grad[j];
    if (!std::isfinite(updated.logits[j])) {
      throw Error(ErrorCode::NumericalFailure, "non-finite policy parameter after update");
    }
  }
  return updated;
}

Solver make_toy_solver(const ToyPolicy& policy, const WorldConfig& config, uint64_t seed) {
  return [policy, config, seed](const Instance& instance, uint64_t attempt) {
    Rng rng = Rng(seed).split(instance.id, attempt);
    return rollout_trajectory(policy, instance, config, rng).trajectory;
  };
}

OutcomeSource make_outcome_source(const ToyPolicy& policy, const WorldConfig& config,
                                  uint64_t seed) {
  return [policy, config, seed](const Instance& instance, uint64_t r) {
    Rng rng = Rng(seed).split(instance.id, r);
    return rollout_trajectory(policy, instance, config, rng).outcome;
  };
}

void ExperimentConfig::validate() const {
  world.validate();
  optimizer.validate();
  if (steps < 0) throw Error(ErrorCode::InvalidArgument, "steps must be non-negative");
  if (groups_per_step < 1) {
    throw Error(ErrorCode::InvalidArgument, "groups_per_step must be positive");
  }
  if (eval_instances < 1) {
    throw Error(ErrorCode::InvalidArgument, "eval_instances must be positive");
  }
  if (baseline_rollouts < 1) {
    throw Error(ErrorCode::InvalidArgument, "baseline_rollouts must be positive");
  }
  if (fixed_baseline) fixed_baseline->validate();
  for (double v : init_logits) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "init_logits must be finite");
    }
  }
}

namespace {

FaithfulRatio nan_faithful() {
  FaithfulRatio f;
  f.overall = kNaN;
  f.faithful_pos = kNaN;
  f.unfaithful_pos = kNaN;
  f.faithful_neg = kNaN;
  f.unfaithful_neg = kNaN;
  return f;
}

MetricsRow exact_row(int64_t step, const ExactStats& stats) {
  MetricsRow row;
  row.step = step;
  row.rates = stats.rates;
  row.ths_value = stats.ths_value;
  row.faithful = nan_faithful();
  row.faithful.overall = stats.faithful_ratio;
  return row;
}

}  // namespace

ExperimentResult run_objective_experiment(const ExperimentConfig& config) {
  config.validate();
  const Rng root(config.seed);

  std::vector<Instance> eval_pool;
  eval_pool.reserve(static_cast<std::size_t>(config.eval_instances));
  for (int i = 0; i < config.eval_instances; ++i) {
    eval_pool.push_back(generate_instance(
        root.split("eval", static_cast<uint64_t>(i)).next_u64(), config.world));
  }

  ToyPolicy policy = make_policy(config.init_logits);

  ExperimentResult result;
  auto estimate = [&](const ToyPolicy& p, uint64_t salt) {
    return estimate_baseline(
        make_outcome_source(p, config.world, root.split("baseline", salt).next_u64()),
        eval_pool, config.baseline_rollouts);
  };
  CapabilityPoint baseline =
      config.fixed_baseline ? *config.fixed_baseline : estimate(policy, 0);
  result.baseline_used = baseline;
  result.baseline_available = true;

  auto make_scheme = [&](const CapabilityPoint& point) {
    RewardScheme scheme;
    scheme.variant = config.reward_variant;
    if (config.reward_variant == RewardVariant::Geometric) {
      scheme = RewardScheme::geometric(point);  // validates the point
    }
    return scheme;
  };
  RewardScheme scheme = make_scheme(baseline);

  result.initial_stats =
      exact_policy_stats(policy, eval_pool, config.world, baseline);
  result.curve.push_back(exact_row(0, result.initial_stats));

  const std::size_t n = config.optimizer.group_size;
  for (int step = 1; step <= config.steps; ++step) {
    if (config.baseline_refresh && config.baseline_refresh_every > 0 &&
        static_cast<uint64_t>(step) % config.baseline_refresh_every == 0) {
      baseline = estimate(policy, static_cast<uint64_t>(step));
      result.baseline_used = baseline;
      scheme = make_scheme(baseline);
    }
    std::vector<ToyGroup> batch;
    batch.reserve(static_cast<std::size_t>(config.groups_per_step));
    const uint64_t batch_index =
        static_cast<uint64_t>(step - 1) * static_cast<uint64_t>(config.groups_per_step);
    for (int g = 0; g < config.groups_per_step; ++g) {
      const uint64_t slot = batch_index + static_cast<uint64_t>(g);
      Instance instance =
          generate_instance(root.split("inst", slot).next_u64(), config.world);
      ToyGroup toy = rollout_group(policy, instance, config.world, n,
                                   root.split("roll", slot).next_u64());
      apply_reward_scheme(toy, scheme);
      finalize_group(toy.group, config.optimizer);
      batch.push_back(std::move(toy));
    }

    // Batch metrics before the update (the batch was sampled from `policy`).
    MetricsRow row;
    row.step = step;
    std::vector<OutcomeClass> outcomes;
    std::vector<std::vector<int>> verdicts;
    std::vector<double> advantages;
    std::size_t faithful_count = 0;
    for (const ToyGroup& toy : batch) {
      for (std::size_t i = 0; i < toy.group.size(); ++i) {
        outcomes.push_back(toy.group.outcomes[i]);
        verdicts.push_back(toy.group.step_verdicts[i]);
        advantages.push_back(toy.group.advantages[i]);
        if (toy.group.matches[i] == MatchClass::Faithful) ++faithful_count;
      }
    }
    row.rates = summarize_rates(outcomes);
    row.rates.p_faithful =
        static_cast<double>(faithful_count) / static_cast<double>(outcomes.size());
    try {
      row.ths_value = ths(baseline, {row.rates.p_correct, row.rates.p_hallucination});
    } catch (const Error&) {
      row.ths_value = kNaN;
    }
    try {
      row.faithful = faithful_step_ratio(verdicts, advantages);
    } catch (const Error&) {
      row.faithful = nan_faithful();
    }
    result.curve.push_back(row);

    policy = policy_gradient_step(policy, batch, config.optimizer);
  }

  result.final_stats = exact_policy_stats(policy, eval_pool, config.world, baseline);
  result.final_policy = policy;
  return result;
}

}  // namespace faithrl
