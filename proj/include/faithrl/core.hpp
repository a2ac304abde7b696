#pragma once

// Domain types and outcome semantics: instances, trajectories, the
// Correct/Miss/Hallucination partition, and the process-outcome mismatch
// partition (Faithful/Spurious/Faltered/HallucinatedBoth).

#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "faithrl/error.hpp"

namespace faithrl {

// Distinguished refusal sentinel. Ingestion folds common refusal phrasings to
// this token; everything downstream compares against the sentinel only.
inline constexpr const char* kIdk = "IDK";

// Lowercase, trim, and collapse internal whitespace runs. The only answer
// normalization applied anywhere.
std::string fold_answer(const std::string& s);

// True if the folded string is the IDK sentinel or a recognized refusal
// phrasing ("i don't know" / "i do not know" / "idk").
bool is_refusal(const std::string& answer);

struct Document {
  std::string doc_id;
  std::string text;
};

struct Instance {
  std::string id;
  std::string question;
  std::vector<Document> documents;   // K(q)
  std::vector<std::string> evidence; // E(q), in hop order; contains IDK when unanswerable
  std::string gold_answer;           // A*, or IDK
  bool answerable = true;

  // Throws Error(Schema) when an invariant fails:
  //  - evidence non-empty
  //  - unanswerable implies gold_answer == IDK and IDK ∈ evidence
  //  - answerable implies every evidence statement appears as a document text
  void validate() const;

  bool has_document(const std::string& doc_id) const;
  const Document* find_document(const std::string& doc_id) const;
};

struct Step {
  std::string text;
  // Knowledge-item identifiers (document ids) this step draws on; empty for
  // free-text ingestion where a judge decides faithfulness.
  std::vector<std::string> cited_items;
};

struct Span {
  size_t begin = 0;  // inclusive
  size_t end = 0;    // exclusive
};

struct Trajectory {
  std::vector<Step> steps;
  std::string answer;
  std::vector<double> logprobs_old;
  std::vector<double> logprobs_new;
  // One span per step plus a final span for the answer segment, partitioning
  // [0, token_count) in order with no gaps or overlaps.
  std::vector<Span> step_spans;

  size_t token_count() const { return logprobs_old.size(); }
  const Span& answer_span() const { return step_spans.back(); }

  // Throws Error(Schema) when span/logprob invariants fail.
  void validate() const;
};

enum class OutcomeClass { Correct, Miss, Hallucination };
enum class MatchClass { Faithful, Spurious, Faltered, HallucinatedBoth };

const char* outcome_name(OutcomeClass c);
const char* match_name(MatchClass m);

// Deterministic answer-equivalence predicate (prediction, gold) → bool.
using AnswerMatcher = std::function<bool(const std::string&, const std::string&)>;

// Default matcher: exact string equality after case/whitespace folding.
bool exact_match(const std::string& prediction, const std::string& gold);

// Refusal detection (exact sentinel check) runs before the matcher:
//   answer IDK, gold IDK  → Correct   (proper refusal of an unanswerable query)
//   answer IDK, gold ≠IDK → Miss
//   otherwise             → matcher(answer, gold) ? Correct : Hallucination
OutcomeClass classify_outcome(const Trajectory& trajectory, const Instance& instance,
                              const AnswerMatcher& matcher = exact_match);

// Step verdicts are 0/1; see faam.hpp for how they are produced.
// Throws Error(InvalidArgument) when verdicts.size() != step count.
MatchClass classify_match(const Trajectory& trajectory, OutcomeClass outcome,
                          const std::vector<int>& verdicts);

// φ(τ): union of cited items over all steps. Free-text trajectories with no
// citations return the empty set.
std::set<std::string> knowledge_extraction(const Trajectory& trajectory);

}  // namespace faithrl
