#pragma once

// Client for an external chat-completion-style verification service. Two
// request kinds: outcome correctness ("1" / "-1") and step faithfulness
// ("1" / "0"). Requests go out as HTTP POST with a JSON body
//   {"model": ..., "messages": [{"role","content"}...],
//    "temperature": ..., "max_tokens": ...}
// and the response carries a JSON object with a "text" field whose first
// non-whitespace token is the verdict digit.
//
// judge_batch is internally concurrent with a bounded in-flight window
// (max_in_flight); results are returned in request order regardless of
// completion order, and per-request failures never abort the batch. Step
// requests for one trajectory place the (shared) evidence block before the
// per-step segment so a caching server can reuse the common prefix.

#include <cstdint>
#include <string>
#include <vector>

#include "faithrl/error.hpp"

namespace faithrl {

struct JudgeConfig {
  std::string endpoint;       // e.g. "http://127.0.0.1:8080/v1/judge"
  std::string model;
  int max_in_flight = 64;     // concurrent request cap
  double temperature = 0.0;
  int timeout_ms = 10000;     // per-attempt connection/read/write timeout
  int retries = 2;            // additional attempts after the first
  int max_tokens = 8;
  // When set, a request that still fails after all retries yields the
  // conservative verdict (step: 0, outcome: Incorrect) instead of an error.
  // Default is a hard error: silently treating judge outages as "unfaithful"
  // would bias downstream advantage modulation.
  bool fail_closed = false;

  void validate() const;  // throws Error(InvalidArgument)
};

// Reads JUDGE_ENDPOINT (required), JUDGE_MODEL (required), and optionally
// JUDGE_MAX_IN_FLIGHT and JUDGE_TIMEOUT_MS. Other fields keep their defaults.
JudgeConfig judge_config_from_env();

enum class JudgeKind { Outcome, StepFaithfulness };

// A rendered two-message prompt (system + user), built from the fixed
// templates below. Rendering is pure string substitution so tests can check
// byte equality against golden files.
struct JudgePrompt {
  std::string system_text;
  std::string user_text;
};

JudgePrompt render_outcome_prompt(const std::string& question, const std::string& gold,
                                  const std::string& prediction);
JudgePrompt render_step_prompt(const std::string& evidence_text,
                               const std::string& segment_text);

// Joins evidence statements into the block substituted into the step prompt.
std::string join_lines(const std::vector<std::string>& lines);

struct JudgeRequest {
  JudgeKind kind = JudgeKind::Outcome;
  JudgePrompt prompt;
  std::string instance_id;
  int trajectory_index = 0;
  int step_index = -1;  // -1 for outcome requests

  void validate() const;  // prompt non-empty
};

JudgeRequest make_outcome_request(const std::string& instance_id, int trajectory_index,
                                  const std::string& question, const std::string& gold,
                                  const std::string& prediction);
JudgeRequest make_step_request(const std::string& instance_id, int trajectory_index,
                               int step_index, const std::string& evidence_text,
                               const std::string& segment_text);

struct JudgeResult {
  bool ok = false;
  // Outcome requests: 1 (correct) or -1 (incorrect). Step requests: 1 or 0.
  int value = 0;
  std::string error;
  ErrorCode error_code = ErrorCode::JudgeUnavailable;
};

enum class OutcomeJudgment { Correct, Incorrect };

// Single-request conveniences; throw Error(JudgeProtocolError /
// JudgeUnavailable) after retries unless config.fail_closed is set.
OutcomeJudgment judge_outcome(const std::string& question, const std::string& gold,
                              const std::string& prediction, const JudgeConfig& config);
int judge_step(const std::string& evidence_text, const std::string& segment_text,
               const JudgeConfig& config);

// Executes all requests with at most max_in_flight outstanding at any instant.
// result[i] always corresponds to requests[i]; failures are reported per slot.
std::vector<JudgeResult> judge_batch(const std::vector<JudgeRequest>& requests,
                                     const JudgeConfig& config);

// The JSON body POSTed for a request (exposed for wire-level tests).
std::string request_body_json(const JudgeRequest& request, const JudgeConfig& config);

}  // namespace faithrl
