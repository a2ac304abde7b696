#include "faithrl/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "faithrl/rng.hpp"

namespace faithrl {

double Rng::next_gaussian() {
  // Box-Muller; u in (0,1] to keep log finite.
  double u = 1.0 - next_double();
  double v = next_double();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

std::string fold_answer(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

bool is_refusal(const std::string& answer) {
  if (answer == kIdk) return true;
  const std::string folded = fold_answer(answer);
  return folded == "idk" || folded == "i don't know" || folded == "i do not know";
}

void Instance::validate() const {
  if (evidence.empty())
    throw Error(ErrorCode::Schema, "instance " + id + ": evidence must be non-empty");
  if (!answerable) {
    if (gold_answer != kIdk)
      throw Error(ErrorCode::Schema,
                  "instance " + id + ": unanswerable instance must have gold_answer IDK");
    if (std::find(evidence.begin(), evidence.end(), kIdk) == evidence.end())
      throw Error(ErrorCode::Schema,
                  "instance " + id + ": unanswerable instance must list IDK in evidence");
  } else {
    for (const auto& ev : evidence) {
      bool found = false;
      for (const auto& doc : documents) {
        if (doc.text == ev) {
          found = true;
          break;
        }
      }
      if (!found)
        throw Error(ErrorCode::Schema, "instance " + id +
                                           ": evidence item not present in documents: " + ev);
    }
  }
}

bool Instance::has_document(const std::string& doc_id) const {
  return find_document(doc_id) != nullptr;
}

const Document* Instance::find_document(const std::string& doc_id) const {
  for (const auto& doc : documents)
    if (doc.doc_id == doc_id) return &doc;
  return nullptr;
}

void Trajectory::validate() const {
  if (logprobs_old.size() != logprobs_new.size())
    throw Error(ErrorCode::Schema, "trajectory: logprob vectors differ in length");
  if (step_spans.size() != steps.size() + 1)
    throw Error(ErrorCode::Schema,
                "trajectory: expected one span per step plus the answer segment");
  size_t cursor = 0;
  for (const auto& span : step_spans) {
    if (span.begin != cursor || span.end < span.begin)
      throw Error(ErrorCode::Schema, "trajectory: spans must partition tokens in order");
    cursor = span.end;
  }
  if (cursor != token_count())
    throw Error(ErrorCode::Schema, "trajectory: spans do not cover the token range");
}

const char* outcome_name(OutcomeClass c) {
  switch (c) {
    case OutcomeClass::Correct: return "correct";
    case OutcomeClass::Miss: return "miss";
    case OutcomeClass::Hallucination: return "hallucination";
  }
  return "?";
}

const char* match_name(MatchClass m) {
  switch (m) {
    case MatchClass::Faithful: return "faithful";
    case MatchClass::Spurious: return "spurious";
    case MatchClass::Faltered: return "faltered";
    case MatchClass::HallucinatedBoth: return "hallucinated_both";
  }
  return "?";
}

bool exact_match(const std::string& prediction, const std::string& gold) {
  return fold_answer(prediction) == fold_answer(gold);
}

OutcomeClass classify_outcome(const Trajectory& trajectory, const Instance& instance,
                              const AnswerMatcher& matcher) {
  const bool answer_is_idk = is_refusal(trajectory.answer);
  const bool gold_is_idk = instance.gold_answer == kIdk;
  if (answer_is_idk) return gold_is_idk ? OutcomeClass::Correct : OutcomeClass::Miss;
  if (gold_is_idk) return OutcomeClass::Hallucination;
  return matcher(trajectory.answer, instance.gold_answer) ? OutcomeClass::Correct
                                                          : OutcomeClass::Hallucination;
}

MatchClass classify_match(const Trajectory& trajectory, OutcomeClass outcome,
                          const std::vector<int>& verdicts) {
  if (verdicts.size() != trajectory.steps.size())
    throw Error(ErrorCode::InvalidArgument,
                "classify_match: verdict count does not match step count");
  const bool all_faithful =
      std::all_of(verdicts.begin(), verdicts.end(), [](int v) { return v != 0; });
  if (outcome == OutcomeClass::Correct)
    return all_faithful ? MatchClass::Faithful : MatchClass::Spurious;
  return all_faithful ? MatchClass::Faltered : MatchClass::HallucinatedBoth;
}

std::set<std::string> knowledge_extraction(const Trajectory& trajectory) {
  std::set<std::string> items;
  for (const auto& step : trajectory.steps)
    items.insert(step.cited_items.begin(), step.cited_items.end());
  return items;
}

}  // namespace faithrl
