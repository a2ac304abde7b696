#pragma once

// Construction of unanswerable instances from answerable ones: single-hop
// evidence pruning (never hop 1), density enforcement, and the best-of-N
// solvability filter with a pluggable solver.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "faithrl/core.hpp"
#include "faithrl/rng.hpp"

namespace faithrl {

struct SolvabilityReport {
  uint32_t attempts = 0;
  uint32_t successes = 0;
  bool kept = false;
  bool ran = false;  // false = filter_skipped (attempts option was 0)
};

struct PruneReport {
  std::string instance_id;
  // "ok" | "cannot_prune" | "filter_aborted"
  std::string status = "ok";
  std::vector<std::string> removed_doc_ids;
  int removed_hop_index = 0;  // 1-indexed in evidence order; always ≥ 2
  int density_prunes_applied = 0;
  SolvabilityReport solvability;
};

// Produces one candidate trajectory for a pruned instance; the filter only
// inspects its answer. Throwing aborts the filter for that instance.
using Solver = std::function<Trajectory(const Instance& pruned, uint64_t attempt)>;

// Removes exactly one evidence document, chosen uniformly over hops 2..k in
// evidence-list order (hop 1 is never pruned). The pruned statement stays in
// the evidence list — the chain is knowingly broken — and IDK is appended;
// gold_answer becomes IDK, answerable becomes false. Distractors are kept.
// Throws Error(CannotPrune) for instances with fewer than 2 evidence hops
// and for already-unanswerable input (both become "cannot_prune" report rows
// in prune_dataset rather than batch failures).
std::pair<Instance, PruneReport> prune_evidence(const Instance& instance, uint64_t seed);

// Phase-1 follow-up: while more than 3 of the instance's evidence statements
// still have a backing document, remove one more backing document (uniformly,
// never hop 1). Returns the updated instance and the number of extra prunes.
// Expects an already-pruned (unanswerable) instance.
std::pair<Instance, int> enforce_density(const Instance& instance, uint64_t seed,
                                         int threshold = 3);

// Best-of-N recovery check: runs `attempts` solver calls on the pruned
// instance and discards it (kept = false) iff ANY attempt's answer matches
// original_gold under `matcher`. A solver exception aborts the filter with
// Error(FilterAborted).
SolvabilityReport solvability_filter(const Instance& pruned,
                                     const std::string& original_gold,
                                     const Solver& solver,
                                     uint32_t attempts,
                                     const AnswerMatcher& matcher = exact_match);

struct PruneOptions {
  uint64_t seed = 0;
  uint32_t attempts = 32;     // 0 = skip the solvability filter, keep everything
  int density_threshold = 3;  // fixed by the procedure; exposed for tests
};

struct PruneResult {
  std::vector<Instance> kept;        // pruned instances that survived the filter
  std::vector<PruneReport> reports;  // one per input instance, input order
};

// Whole-dataset pipeline: prune + enforce_density + filter per instance.
// Per-instance failures (CannotPrune, FilterAborted) become report rows with
// the corresponding status instead of aborting the batch. Determinism: the
// per-instance seed derives from options.seed and the instance id only.
PruneResult prune_dataset(const std::vector<Instance>& instances,
                          const Solver& solver,
                          const PruneOptions& options);

}  // namespace faithrl
