// Acceptance gate: the eleven release criteria, one PASS/FAIL line each,
// nonzero exit when any criterion fails. Each criterion enforces its property
// and its runtime budget, and prints the measured quantities so a failing run
// is diagnosable from the log alone.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "faithrl/core.hpp"
#include "faithrl/datagen.hpp"
#include "faithrl/driver.hpp"
#include "faithrl/faam.hpp"
#include "faithrl/grpo.hpp"
#include "faithrl/judge.hpp"
#include "faithrl/metrics.hpp"
#include "faithrl/reward.hpp"
#include "faithrl/rng.hpp"
#include "faithrl/synthenv.hpp"

#include "builders.hpp"
#include "mock_judge.hpp"
#include "test_util.hpp"

using namespace faithrl;

namespace {

// ---- harness -----------------------------------------------------------------

// Collects failure messages (capped so a broken loop cannot flood the log).
struct Failures {
  int count = 0;
  std::string text;

  void fail(const std::string& what) {
    ++count;
    if (count <= 4) {
      if (!text.empty()) text += "; ";
      text += what;
    }
  }
  void expect(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
  std::string render() const {
    if (count <= 4) return text;
    return text + "; … " + std::to_string(count - 4) + " more";
  }
};

std::string fmt(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.6g", v);
  return buffer;
}

struct Criterion {
  int id;
  const char* name;
  double budget_ms;  // 0 = no stated budget
  std::function<void(Failures&, std::string&)> body;
};

// ---- shared fixtures -----------------------------------------------------------

WorldConfig enumerable_world() {
  WorldConfig world;
  world.chain_length = 2;
  world.num_distractors = 1;
  world.unanswerable_fraction = 0.0;
  world.capability = 0.8;
  world.guess_rate = 0.2;
  return world;
}

void set_row(std::array<double, kNumParams>& logits, int state, double cite,
             double distract, double answer, double refuse) {
  logits[state * kNumActions + 0] = cite;
  logits[state * kNumActions + 1] = distract;
  logits[state * kNumActions + 2] = answer;
  logits[state * kNumActions + 3] = refuse;
}

// The frozen experiment configuration shared by the asymptotics and trend
// criteria; only the spec-pinned knobs (variant, alpha, guess_rate, init,
// seed) vary per arm.
ExperimentConfig frozen_experiment() {
  ExperimentConfig config;
  config.world.chain_length = 2;
  config.world.num_distractors = 2;
  config.world.unanswerable_fraction = 0.005;
  config.world.capability = 0.8;
  config.world.guess_rate = 0.2;
  config.optimizer.group_size = 8;
  config.optimizer.clip_epsilon = 0.2;
  config.optimizer.learning_rate = 0.15;
  config.steps = 2000;
  config.groups_per_step = 1;
  config.eval_instances = 400;
  config.baseline_rollouts = 4;
  return config;
}

std::array<double, kNumParams> cautious_init() {
  std::array<double, kNumParams> logits{};
  set_row(logits, 0, 0, 0, 0, 0);  // Found: uniform
  set_row(logits, 1, 0, 0, 0, 1);  // Stuck: refusal-leaning
  set_row(logits, 2, 0, 0, 1, 0);  // Done: answer-leaning
  return logits;
}

std::array<double, kNumParams> eager_init() {
  std::array<double, kNumParams> logits{};
  for (int state = 0; state < kNumStates; ++state) set_row(logits, state, 0, 0, 3, 0);
  return logits;
}

// Ready-to-finalize group: N trajectories with two one-token steps plus a
// one-token answer, controllable probability-ratio factors and verdicts.
TrajectoryGroup make_group(const std::vector<double>& rewards,
                           const std::vector<double>& ratio_factors,
                           const std::vector<std::vector<int>>& verdicts) {
  TrajectoryGroup group;
  group.instance_id = "g1";
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    Trajectory trajectory = testutil::make_trajectory({{"e1"}, {"e2"}}, "gold", -0.7);
    for (double& lp : trajectory.logprobs_new) lp += std::log(ratio_factors[i]);
    group.trajectories.push_back(trajectory);
    group.step_verdicts.push_back(verdicts[i]);
    group.outcomes.push_back(rewards[i] > 0 ? OutcomeClass::Correct
                                            : OutcomeClass::Hallucination);
    group.matches.push_back(rewards[i] > 0 ? MatchClass::Faithful
                                           : MatchClass::HallucinatedBoth);
  }
  group.rewards = rewards;
  return group;
}

template <typename F>
double central_fd(const ToyPolicy& policy, int j, double h, F&& f) {
  ToyPolicy up = policy;
  ToyPolicy down = policy;
  up.logits[static_cast<std::size_t>(j)] += h;
  down.logits[static_cast<std::size_t>(j)] -= h;
  return (f(up) - f(down)) / (2 * h);
}

bool close_rel(double a, double b, double rel, double abs_floor) {
  return std::fabs(a - b) <= abs_floor + rel * std::max(std::fabs(a), std::fabs(b));
}

// ---- criterion 1: THS worked example --------------------------------------------

void criterion_ths(Failures& f, std::string& note) {
  const CapabilityPoint baseline{0.7, 0.1};
  const CapabilityPoint current{0.8, 0.2};
  const double value = ths(baseline, current);
  f.expect(std::fabs(value - (-0.60)) <= 1e-12,
           "ths = " + fmt(value) + ", want -0.60 +/- 1e-12");
  note = "ths((0.7,0.1) -> (0.8,0.2)) = " + fmt(value);
}

// ---- criterion 2: gradient alignment (theorem 2) --------------------------------

void criterion_alignment(Failures& f, std::string& note) {
  const WorldConfig world = enumerable_world();
  std::vector<Instance> pool;
  for (int i = 0; i < 2; ++i) {
    pool.push_back(generate_instance(static_cast<uint64_t>(100 + i), world));
  }
  const CapabilityPoint baseline{0.7, 0.1};

  int held = 0;
  int non_degenerate = 0;
  double worst_cosine_gap = 0.0;
  double worst_constant_gap = 0.0;
  for (uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(600 + trial);
    const ToyPolicy policy = random_policy(rng, 1.2);
    const AlignmentReport report =
        verify_theorem2_alignment(policy, pool, baseline, world, 1e-9);
    if (report.holds) {
      ++held;
    } else {
      f.fail("policy " + std::to_string(trial) + ": |cos-1| = " +
             fmt(std::fabs(report.cosine - 1.0)) + ", |C-y0| = " +
             fmt(std::fabs(report.fitted_c - baseline.y)));
    }
    if (!report.degenerate) {
      ++non_degenerate;
      worst_cosine_gap = std::max(worst_cosine_gap, std::fabs(report.cosine - 1.0));
      worst_constant_gap =
          std::max(worst_constant_gap, std::fabs(report.fitted_c - baseline.y));
    }
  }
  f.expect(non_degenerate >= 16, "only " + std::to_string(non_degenerate) +
                                     "/20 policies non-degenerate");
  note = std::to_string(held) + "/20 hold at 1e-9; max |cos-1| = " +
         fmt(worst_cosine_gap) + ", max |C-y0| = " + fmt(worst_constant_gap);
}

// ---- criterion 3: rectification (theorem 3) --------------------------------------

void criterion_rectification(Failures& f, std::string& note) {
  OptimizerConfig config;
  config.alpha = 0.0;
  std::vector<TrajectoryGroup> suite = build_mismatch_suite();
  for (TrajectoryGroup& group : suite) finalize_group(group, config);
  const RectificationReport at_zero = verify_theorem3_rectification(suite, config);

  int spurious_pos = 0;
  int faltered_neg = 0;
  for (const RectificationEntry& entry : at_zero.entries) {
    const bool filtered =
        (entry.match == MatchClass::Spurious && entry.advantage > 0.0) ||
        (entry.match == MatchClass::Faltered && entry.advantage <= 0.0);
    if (!filtered) continue;
    if (entry.match == MatchClass::Spurious) ++spurious_pos;
    if (entry.match == MatchClass::Faltered) ++faltered_neg;
    if (entry.step_contribution != 0.0) {
      f.fail(std::string(match_name(entry.match)) + " " + entry.instance_id + "[" +
             std::to_string(entry.trajectory_index) +
             "]: step contribution = " + fmt(entry.step_contribution));
    }
  }
  f.expect(spurious_pos >= 1 && faltered_neg >= 1,
           "suite lacks filtered cases (Spurious A>0: " + std::to_string(spurious_pos) +
               ", Faltered A<=0: " + std::to_string(faltered_neg) + ")");
  f.expect(at_zero.holds, "alpha = 0 report does not hold");

  OptimizerConfig leaky = config;
  leaky.alpha = 0.5;
  std::vector<TrajectoryGroup> suite_half = build_mismatch_suite();
  for (TrajectoryGroup& group : suite_half) finalize_group(group, leaky);
  const RectificationReport at_half = verify_theorem3_rectification(suite_half, leaky);
  f.expect(!at_half.holds && at_half.max_filtered_step_contribution > 0.0,
           "alpha = 0.5 should leak (max filtered contribution = " +
               fmt(at_half.max_filtered_step_contribution) + ")");

  note = std::to_string(spurious_pos) + " Spurious(A>0) + " +
         std::to_string(faltered_neg) + " Faltered(A<=0) entries exactly 0 at a=0; " +
         "a=0.5 leaks " + fmt(at_half.max_filtered_step_contribution);
}

// ---- criterion 4: objective asymptotics (theorem 1) ------------------------------

void criterion_asymptotics(Failures& f, std::string& note) {
  ExperimentConfig base = frozen_experiment();
  base.optimizer.alpha = 1.0;
  base.init_logits = cautious_init();
  const double equilibrium = miss_equilibrium(base.world);

  struct Arm {
    const char* label;
    RewardVariant variant;
    double lo = 1.0, hi = 0.0;
  };
  Arm arms[] = {{"A", RewardVariant::BinaryCorrectness},
                {"B", RewardVariant::NegativeHallucination},
                {"C", RewardVariant::FaithfulnessIndicator}};

  for (Arm& arm : arms) {
    ExperimentConfig config = base;
    config.reward_variant = arm.variant;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
      config.seed = seed;
      const ExperimentResult result = run_objective_experiment(config);
      const double p_miss = result.final_stats.rates.p_miss;
      arm.lo = std::min(arm.lo, p_miss);
      arm.hi = std::max(arm.hi, p_miss);
      const std::string where =
          std::string(arm.label) + " seed " + std::to_string(seed) +
          ": P(M) = " + fmt(p_miss);
      if (arm.variant == RewardVariant::BinaryCorrectness) {
        f.expect(p_miss < 0.05, where + ", want < 0.05");
      } else if (arm.variant == RewardVariant::NegativeHallucination) {
        f.expect(p_miss > 0.95, where + ", want > 0.95");
      } else {
        f.expect(p_miss > 0.05 && p_miss < 0.95, where + ", want in (0.05, 0.95)");
        f.expect(std::fabs(p_miss - equilibrium) <= 0.15,
                 where + ", want within 0.15 of equilibrium " + fmt(equilibrium));
      }
    }
  }
  note = "P(M) over 5 seeds: A in [" + fmt(arms[0].lo) + ", " + fmt(arms[0].hi) +
         "], B in [" + fmt(arms[1].lo) + ", " + fmt(arms[1].hi) + "], C in [" +
         fmt(arms[2].lo) + ", " + fmt(arms[2].hi) + "] (eq " + fmt(equilibrium) + ")";
}

// ---- criterion 5: GRPO identity at alpha = 1 --------------------------------------

void criterion_grpo_identity(Failures& f, std::string& note) {
  std::mt19937_64 rng(1023);
  std::uniform_real_distribution<double> reward(-1.0, 1.0);
  std::uniform_real_distribution<double> factor(0.6, 1.6);
  std::uniform_int_distribution<int> coin(0, 1);

  int identical = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    OptimizerConfig config;
    config.group_size = 4;
    config.alpha = 1.0;
    const std::size_t n_groups = 1 + rng() % 3;
    std::vector<TrajectoryGroup> groups;
    for (std::size_t g = 0; g < n_groups; ++g) {
      const std::size_t n = 2 + rng() % 4;
      std::vector<double> rewards;
      std::vector<double> factors;
      std::vector<std::vector<int>> verdicts;
      for (std::size_t i = 0; i < n; ++i) {
        rewards.push_back(reward(rng));
        factors.push_back(factor(rng));
        verdicts.push_back({coin(rng), coin(rng)});
      }
      TrajectoryGroup group = make_group(rewards, factors, verdicts);
      finalize_group(group, config);
      groups.push_back(std::move(group));
    }
    const double modulated = faithrl_objective(groups, config);
    const double plain = grpo_objective(groups, config);
    if (modulated == plain) {
      ++identical;
    } else {
      f.fail("trial " + std::to_string(trial) + ": " + fmt(modulated) +
             " != " + fmt(plain));
    }
  }
  note = std::to_string(identical) + "/1000 batches bitwise identical";
}

// ---- criterion 6: analytic-gradient fidelity ---------------------------------------

void criterion_gradient_fidelity(Failures& f, std::string& note) {
  const WorldConfig world = enumerable_world();
  OptimizerConfig config;
  config.group_size = 4;
  config.alpha = 0.25;
  const double h = 1e-5;

  int checked = 0;
  double worst_gap = 0.0;
  for (uint64_t draw = 0; draw < 100; ++draw) {
    Rng rng(4000 + draw);
    const ToyPolicy policy = random_policy(rng, 1.0);
    const Instance instance = generate_instance(50 + draw, world);
    ToyGroup batch = rollout_group(policy, instance, world, 4, 9000 + draw);
    apply_reward_scheme(batch, RewardScheme::geometric({0.7, 0.1}));
    finalize_group(batch.group, config);

    const std::vector<ToyGroup> batches = {batch};
    const PolicyGradient grad = objective_gradient(policy, batches, config);

    auto objective_at = [&](const ToyPolicy& p) {
      ToyGroup copy = batch;
      refresh_logprobs(copy, p);
      return faithrl_objective({copy.group}, config);
    };
    for (int j = 0; j < kNumParams; ++j) {
      // Skip parameters whose clip branch flips inside the FD stencil; the
      // analytic gradient holds branches fixed by construction.
      ToyPolicy up = policy, down = policy;
      up.logits[static_cast<std::size_t>(j)] += h;
      down.logits[static_cast<std::size_t>(j)] -= h;
      ToyGroup at_up = batch, at_down = batch;
      refresh_logprobs(at_up, up);
      refresh_logprobs(at_down, down);
      bool stable = true;
      for (std::size_t i = 0; i < batch.group.size() && stable; ++i) {
        for (std::size_t t = 0; t < batch.group.token_ratios[i].size() && stable; ++t) {
          const bool b1 = surrogate_unclipped(at_up.group.token_ratios[i][t],
                                              batch.group.advantages[i],
                                              config.clip_epsilon);
          const bool b2 = surrogate_unclipped(at_down.group.token_ratios[i][t],
                                              batch.group.advantages[i],
                                              config.clip_epsilon);
          if (b1 != b2) stable = false;
        }
      }
      if (!stable) continue;
      const double fd = central_fd(policy, j, h, objective_at);
      const double analytic = grad[static_cast<std::size_t>(j)];
      if (!close_rel(analytic, fd, 1e-4, 1e-8)) {
        f.fail("draw " + std::to_string(draw) + " param " + std::to_string(j) + ": " +
               fmt(analytic) + " vs fd " + fmt(fd));
      }
      const double allowance =
          1e-8 + 1e-4 * std::max(std::fabs(analytic), std::fabs(fd));
      worst_gap = std::max(worst_gap, std::fabs(analytic - fd) / allowance);
      ++checked;
    }
  }
  f.expect(checked >= 600, "branch-stability skip left only " +
                               std::to_string(checked) + " coordinates checked");
  note = std::to_string(checked) + "/1200 coords checked, max tolerance share = " +
         fmt(worst_gap);
}

// ---- criterion 7: advantage normalization ------------------------------------------

void criterion_normalization(Failures& f, std::string& note) {
  OptimizerConfig config;
  config.group_size = 4;
  const std::vector<double> advantages = group_advantages({1, 0, 0, 0}, config);
  const double s3 = std::sqrt(3.0);
  const double expected[] = {s3, -1.0 / s3, -1.0 / s3, -1.0 / s3};
  for (std::size_t i = 0; i < advantages.size(); ++i) {
    f.expect(std::fabs(advantages[i] - expected[i]) <= 1e-12,
             "a[" + std::to_string(i) + "] = " + fmt(advantages[i]) + ", want " +
                 fmt(expected[i]) + " +/- 1e-12");
  }
  for (double level : {0.0, 1.0, -0.3, 2.5}) {
    for (double a : group_advantages({level, level, level, level}, config)) {
      f.expect(a == 0.0, "zero-variance group at " + fmt(level) + " gave " + fmt(a));
    }
  }
  note = "[1,0,0,0] -> [sqrt(3), -1/sqrt(3) x3]; flat groups exactly 0";
}

// ---- criterion 8: FAAM modulation table --------------------------------------------

void criterion_faam_table(Failures& f, std::string& note) {
  int cases = 0;
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (double advantage : {1.3, -0.8, 0.0}) {  // 0 exercises the A<=0 branch
      for (int verdict : {0, 1}) {
        const double v = static_cast<double>(verdict);
        const double expected = advantage > 0.0 ? (1.0 - alpha) * v + alpha
                                                : (1.0 - alpha) * (1.0 - v) + alpha;
        const double actual = modulation_factor(advantage, verdict, alpha);
        if (actual != expected) {
          f.fail("M(A=" + fmt(advantage) + ", v=" + std::to_string(verdict) +
                 ", a=" + fmt(alpha) + ") = " + fmt(actual) + ", want " + fmt(expected));
        }
        ++cases;
        if (alpha == 1.0) {
          f.expect(actual == 1.0, "alpha = 1 not identity at A=" + fmt(advantage) +
                                      ", v=" + std::to_string(verdict));
        }
      }
    }
  }
  // Answer-span tokens stay unmodulated even at full modulation strength.
  const Trajectory trajectory = testutil::make_trajectory({{"e1"}, {"e2"}}, "gold");
  const std::vector<double> factors = token_modulation(trajectory, {0, 0}, 1.0, 0.0);
  f.expect(factors.back() == 1.0, "answer token modulated to " + fmt(factors.back()));
  for (double factor : token_modulation(trajectory, {0, 1}, -0.5, 1.0)) {
    f.expect(factor == 1.0, "alpha = 1 token factor " + fmt(factor));
  }
  note = std::to_string(cases) + " (alpha, branch, verdict) cases exact; " +
         "alpha = 1 is the all-ones identity";
}

// ---- criterion 9: faithfulness trend -----------------------------------------------

void criterion_trend(Failures& f, std::string& note) {
  ExperimentConfig base = frozen_experiment();
  base.world.guess_rate = 0.85;  // memorized shortcuts rival evidence-chasing
  base.init_logits = eager_init();

  double faith_lo = 1.0, faith_hi = -1.0, vanilla_lo = 1.0, vanilla_hi = -1.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig faithful = base;
    faithful.reward_variant = RewardVariant::Geometric;
    faithful.optimizer.alpha = 0.0;
    faithful.seed = seed;
    const ExperimentResult geo = run_objective_experiment(faithful);
    const double geo_delta =
        geo.final_stats.faithful_ratio - geo.initial_stats.faithful_ratio;
    faith_lo = std::min(faith_lo, geo_delta);
    faith_hi = std::max(faith_hi, geo_delta);
    f.expect(geo_delta >= 0.15,
             "geometric+a=0 seed " + std::to_string(seed) + ": delta = " +
                 fmt(geo_delta) + ", want >= 0.15");

    ExperimentConfig vanilla = base;
    vanilla.reward_variant = RewardVariant::BinaryCorrectness;
    vanilla.optimizer.alpha = 1.0;
    vanilla.seed = seed;
    const ExperimentResult plain = run_objective_experiment(vanilla);
    const double plain_delta =
        plain.final_stats.faithful_ratio - plain.initial_stats.faithful_ratio;
    vanilla_lo = std::min(vanilla_lo, plain_delta);
    vanilla_hi = std::max(vanilla_hi, plain_delta);
    f.expect(std::fabs(plain_delta) < 0.05,
             "correctness+a=1 seed " + std::to_string(seed) + ": |delta| = " +
                 fmt(std::fabs(plain_delta)) + ", want < 0.05");
  }
  note = "faithful-ratio delta over 5 seeds: geometric+a=0 in [" + fmt(faith_lo) +
         ", " + fmt(faith_hi) + "], correctness+a=1 in [" + fmt(vanilla_lo) + ", " +
         fmt(vanilla_hi) + "]";
}

// ---- criterion 10: datagen contract ------------------------------------------------

void criterion_datagen(Failures& f, std::string& note) {
  WorldConfig world3 = enumerable_world();
  world3.chain_length = 3;
  world3.num_distractors = 2;

  auto backing_docs = [](const Instance& instance, const std::string& statement) {
    int n = 0;
    for (const Document& doc : instance.documents) {
      if (doc.text == statement) ++n;
    }
    return n;
  };

  std::set<int> hops_seen;
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    const Instance instance = generate_instance(seed, world3);
    const auto [pruned, report] = prune_evidence(instance, seed);
    hops_seen.insert(report.removed_hop_index);
    if (report.removed_hop_index < 2 || report.removed_hop_index > 3) {
      f.fail("seed " + std::to_string(seed) + " removed hop " +
             std::to_string(report.removed_hop_index));
    }
    if (backing_docs(pruned, instance.evidence.front()) == 0) {
      f.fail("seed " + std::to_string(seed) + " lost hop 1's backing document");
    }
    if (pruned.gold_answer != kIdk || pruned.answerable) {
      f.fail("seed " + std::to_string(seed) + " not marked unanswerable");
    }
  }
  f.expect(hops_seen.size() == 2, "pruning visited " +
                                      std::to_string(hops_seen.size()) +
                                      " distinct hops, want both of {2, 3}");

  WorldConfig world6 = world3;
  world6.chain_length = 6;
  int max_backed = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const Instance instance = generate_instance(seed, world6);
    const auto [pruned, report] = prune_evidence(instance, seed);
    const auto [dense, extra] = enforce_density(pruned, seed + 1);
    (void)report;
    (void)extra;
    int backed = 0;
    for (const std::string& statement : dense.evidence) {
      if (statement != kIdk && backing_docs(dense, statement) > 0) ++backed;
    }
    max_backed = std::max(max_backed, backed);
    if (backed > 3) {
      f.fail("density seed " + std::to_string(seed) + " left " +
             std::to_string(backed) + " backed statements");
    }
    if (backing_docs(dense, instance.evidence.front()) == 0) {
      f.fail("density seed " + std::to_string(seed) + " removed hop 1");
    }
  }

  int filter_checked = 0;
  for (uint64_t i = 0; i < 40; ++i) {
    const Instance instance = generate_instance(7000 + i, world3);
    const auto [pruned, report] = prune_evidence(instance, 7000 + i);
    (void)report;
    const bool recoverable = (i % 2 == 0);
    const uint64_t lucky_attempt = i % 32;
    const std::string gold = instance.gold_answer;
    const Solver solver = [&, recoverable, lucky_attempt,
                           gold](const Instance&, uint64_t attempt) {
      const bool hit = recoverable && attempt == lucky_attempt;
      return testutil::make_trajectory({{"e1"}}, hit ? gold : "unrelated guess");
    };
    const SolvabilityReport verdict =
        solvability_filter(pruned, gold, solver, 32);
    const bool want_kept = !recoverable;  // kept iff all 32 attempts fail
    if (!verdict.ran || verdict.kept != want_kept) {
      f.fail("filter instance " + std::to_string(i) + ": kept = " +
             std::to_string(verdict.kept) + ", want " + std::to_string(want_kept));
    }
    ++filter_checked;
  }
  note = "1000 prunes spare hop 1 (hops {2,3} both hit); density max backed = " +
         std::to_string(max_backed) + "; filter exact on " +
         std::to_string(filter_checked) + " instances";
}

// ---- criterion 11: judge client ----------------------------------------------------

void criterion_judge(Failures& f, std::string& note) {
  using testutil::MockJudge;
  using testutil::MockReply;
  using testutil::golden_path;
  using testutil::read_file;
  using testutil::text_reply;

  const JudgePrompt outcome = render_outcome_prompt(
      "When was the first transcontinental railroad completed?", "1869",
      "May 10, 1869");
  f.expect(outcome.system_text == read_file(golden_path("judge_outcome_system.txt")),
           "outcome system prompt differs from golden bytes");
  f.expect(outcome.user_text == read_file(golden_path("judge_outcome_user.txt")),
           "outcome user prompt differs from golden bytes");
  const JudgePrompt step = render_step_prompt(
      join_lines({"hop 1: alpha leads to beta", "hop 2: beta yields answer: gamma"}),
      "cite e1");
  f.expect(step.system_text == read_file(golden_path("judge_step_system.txt")),
           "step system prompt differs from golden bytes");
  f.expect(step.user_text == read_file(golden_path("judge_step_user.txt")),
           "step user prompt differs from golden bytes");

  // 200 outcome requests whose expected verdict is derived from the request's
  // own payload: results must land in request slots regardless of completion
  // order, which the per-request pseudo-random delays scramble.
  MockJudge server([](std::size_t, const nlohmann::json& body) -> MockReply {
    const std::string content = body.at("messages").at(1).at("content").get<std::string>();
    const std::size_t pos = content.find("pred-");
    if (pos == std::string::npos) return MockReply{500, "no index", 0};
    const int index = std::atoi(content.c_str() + pos + 5);
    const int delay_ms = static_cast<int>((static_cast<unsigned>(index) * 2654435761u) % 9u);
    return text_reply(index % 2 == 0 ? "1" : "-1", delay_ms);
  });

  JudgeConfig config;
  config.endpoint = server.endpoint();
  config.model = "mock-judge";
  config.max_in_flight = 64;
  config.timeout_ms = 5000;

  std::vector<JudgeRequest> requests;
  for (int i = 0; i < 200; ++i) {
    requests.push_back(make_outcome_request("inst", i, "question?", "gold",
                                            "pred-" + std::to_string(i)));
  }
  const std::vector<JudgeResult> results = judge_batch(requests, config);
  f.expect(results.size() == requests.size(), "result count mismatch");
  int in_order = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const int expected = (i % 2 == 0) ? 1 : -1;
    if (results[i].ok && results[i].value == expected) {
      ++in_order;
    } else {
      f.fail("slot " + std::to_string(i) + ": ok = " + std::to_string(results[i].ok) +
             ", value = " + std::to_string(results[i].value) + ", want " +
             std::to_string(expected));
    }
  }
  f.expect(server.peak_in_flight() <= 64,
           "peak concurrency " + std::to_string(server.peak_in_flight()) + " > 64");
  f.expect(server.peak_in_flight() > 1, "requests never overlapped");
  note = "prompts byte-equal; " + std::to_string(in_order) +
         "/200 slots in request order; peak in-flight = " +
         std::to_string(server.peak_in_flight());
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "THS worked example", 1.0, criterion_ths},
      {2, "theorem 2: gradient alignment", 30000.0, criterion_alignment},
      {3, "theorem 3: rectification", 10000.0, criterion_rectification},
      {4, "theorem 1: objective asymptotics", 300000.0, criterion_asymptotics},
      {5, "GRPO identity at alpha = 1", 10000.0, criterion_grpo_identity},
      {6, "analytic-gradient fidelity", 30000.0, criterion_gradient_fidelity},
      {7, "advantage normalization", 1.0, criterion_normalization},
      {8, "FAAM modulation table", 0.0, criterion_faam_table},
      {9, "faithfulness trend", 300000.0, criterion_trend},
      {10, "datagen contract", 10000.0, criterion_datagen},
      {11, "judge client", 30000.0, criterion_judge},
  };

  int failed = 0;
  for (const Criterion& criterion : criteria) {
    Failures failures;
    std::string note;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.body(failures, note);
    } catch (const std::exception& e) {
      failures.fail(std::string("exception: ") + e.what());
    }
    const double elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                  start)
            .count();
    if (criterion.budget_ms > 0.0 && elapsed_ms >= criterion.budget_ms) {
      failures.fail("runtime " + fmt(elapsed_ms) + " ms exceeds budget " +
                    fmt(criterion.budget_ms) + " ms");
    }
    const bool pass = failures.count == 0;
    failed += pass ? 0 : 1;
    std::string text = note;
    if (!pass) {
      if (!text.empty()) text += " ";
      text += "-- " + failures.render();
    }
    std::printf("%s  %2d  %-34s %9.1f ms  %s\n", pass ? "PASS" : "FAIL", criterion.id,
                criterion.name, elapsed_ms, text.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
