#include "faithrl/datagen.hpp"

#include <algorithm>
#include <set>

#include "faithrl/error.hpp"

namespace faithrl {

namespace {

// Index into documents of the first document backing evidence hop `hop`
// (1-indexed), or npos when the hop's statement has no backing document.
std::size_t backing_document(const Instance& instance, std::size_t hop) {
  const std::string& statement = instance.evidence[hop - 1];
  for (std::size_t d = 0; d < instance.documents.size(); ++d) {
    if (instance.documents[d].text == statement) return d;
  }
  return static_cast<std::size_t>(-1);
}

// Evidence hops (1-indexed) that still have a backing document, IDK excluded.
std::vector<std::size_t> backed_hops(const Instance& instance) {
  std::vector<std::size_t> hops;
  for (std::size_t h = 1; h <= instance.evidence.size(); ++h) {
    if (instance.evidence[h - 1] == kIdk) continue;
    if (backing_document(instance, h) != static_cast<std::size_t>(-1)) hops.push_back(h);
  }
  return hops;
}

}  // namespace

std::pair<Instance, PruneReport> prune_evidence(const Instance& instance, uint64_t seed) {
  instance.validate();
  PruneReport report;
  report.instance_id = instance.id;
  if (!instance.answerable) {
    throw Error(ErrorCode::CannotPrune, "instance " + instance.id + " is already unanswerable");
  }
  const std::size_t hops = instance.evidence.size();
  if (hops < 2) {
    throw Error(ErrorCode::CannotPrune,
                "instance " + instance.id + " has a single evidence hop; hop 1 is never pruned");
  }
  Rng rng = Rng(seed).split("prune");
  const std::size_t hop = 2 + rng.next_below(hops - 1);  // uniform over 2..hops
  const std::size_t doc_index = backing_document(instance, hop);
  if (doc_index == static_cast<std::size_t>(-1)) {
    throw Error(ErrorCode::Schema,
                "instance " + instance.id + ": evidence hop has no backing document");
  }
  Instance pruned = instance;
  report.removed_hop_index = static_cast<int>(hop);
  report.removed_doc_ids.push_back(pruned.documents[doc_index].doc_id);
  pruned.documents.erase(pruned.documents.begin() + static_cast<std::ptrdiff_t>(doc_index));
  pruned.gold_answer = kIdk;
  pruned.answerable = false;
  // The broken chain stays listed; IDK joins the evidence set.
  if (std::find(pruned.evidence.begin(), pruned.evidence.end(), kIdk) == pruned.evidence.end()) {
    pruned.evidence.push_back(kIdk);
  }
  pruned.validate();
  return {std::move(pruned), std::move(report)};
}

std::pair<Instance, int> enforce_density(const Instance& instance, uint64_t seed,
                                         int threshold) {
  if (instance.answerable) {
    throw Error(ErrorCode::InvalidArgument,
                "enforce_density expects an already-pruned (unanswerable) instance");
  }
  Instance dense = instance;
  Rng rng = Rng(seed).split("density");
  int extra = 0;
  for (;;) {
    std::vector<std::size_t> hops = backed_hops(dense);
    if (hops.size() <= static_cast<std::size_t>(threshold)) break;
    // Hop 1 is never pruned; with > threshold ≥ 1 backed hops there is always
    // at least one eligible target.
    std::vector<std::size_t> eligible;
    for (std::size_t h : hops) {
      if (h >= 2) eligible.push_back(h);
    }
    const std::size_t hop = eligible[rng.next_below(eligible.size())];
    const std::size_t doc_index = backing_document(dense, hop);
    dense.documents.erase(dense.documents.begin() + static_cast<std::ptrdiff_t>(doc_index));
    ++extra;
  }
  return {std::move(dense), extra};
}

SolvabilityReport solvability_filter(const Instance& pruned,
                                     const std::string& original_gold,
                                     const Solver& solver,
                                     uint32_t attempts,
                                     const AnswerMatcher& matcher) {
  SolvabilityReport report;
  report.attempts = attempts;
  if (attempts == 0) {
    report.ran = false;
    report.kept = true;
    return report;
  }
  report.ran = true;
  for (uint32_t a = 0; a < attempts; ++a) {
    Trajectory trajectory;
    try {
      trajectory = solver(pruned, a);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::FilterAborted,
                  "solver failed on instance " + pruned.id + " attempt " +
                      std::to_string(a) + ": " + e.what());
    }
    if (!is_refusal(trajectory.answer) && matcher(trajectory.answer, original_gold)) {
      ++report.successes;
    }
  }
  report.kept = report.successes == 0;
  return report;
}

PruneResult prune_dataset(const std::vector<Instance>& instances,
                          const Solver& solver,
                          const PruneOptions& options) {
  PruneResult result;
  const Rng root(options.seed);
  for (const Instance& instance : instances) {
    const uint64_t instance_seed = root.split(instance.id).next_u64();
    PruneReport report;
    report.instance_id = instance.id;
    try {
      auto [pruned, prune_report] = prune_evidence(instance, instance_seed);
      report = std::move(prune_report);
      auto [dense, extra] = enforce_density(pruned, instance_seed, options.density_threshold);
      report.density_prunes_applied = extra;
      if (extra > 0) {
        // Recover the additionally removed doc ids by set difference.
        std::set<std::string> kept_ids;
        for (const Document& d : dense.documents) kept_ids.insert(d.doc_id);
        for (const Document& d : pruned.documents) {
          if (kept_ids.find(d.doc_id) == kept_ids.end()) {
            report.removed_doc_ids.push_back(d.doc_id);
          }
        }
      }
      report.solvability =
          solvability_filter(dense, instance.gold_answer, solver, options.attempts);
      if (report.solvability.kept) {
        result.kept.push_back(std::move(dense));
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CannotPrune) {
        report.status = "cannot_prune";
      } else if (e.code() == ErrorCode::FilterAborted) {
        report.status = "filter_aborted";
      } else {
        throw;  // schema/config problems abort the batch
      }
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace faithrl
