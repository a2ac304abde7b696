#include "faithrl/judge.hpp"

#include <atomic>
#include <cctype>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "faithrl/core.hpp"

namespace faithrl {

namespace {

// Verbatim judge templates. {placeholders} are substituted by the render
// functions; everything else is byte-stable and covered by golden-file tests.

constexpr const char* kOutcomeSystem =
    "Assume you are a human expert in grading predictions given by a model. You are given a "
    "question and a model prediction. Judge if the prediction matches the ground truth answer by "
    "following these steps:\n"
    "\n"
    "1: Take it as granted that the Ground Truth is always correct.\n"
    "2: If the Prediction exactly matches the Ground Truth, \"score\" is 1.\n"
    "3: If the Prediction does not exactly match the Ground Truth, go through the following steps "
    "and likely give a score as -1.\n"
    "4: If the Ground Truth is a number, \"score\" is 1 if and only if the Prediction gives a "
    "number that almost exactly matches the ground truth.\n"
    "5: If the Prediction is self-contradictory, \"score\" must be -1.\n"
    "6: If the prediction is not answering the question, \"score\" must be -1.\n"
    "7: If the prediction is a concise and correct summary of the ground truth, \"score\" is 1.\n"
    "8: If ground truth contains a set of items, prediction must contain exactly same items for "
    "the score to be 1.\n"
    "9: Otherwise, \"score\" is -1.\n"
    "\n"
    "Output ONLY one digit: -1 or 1. No text, no explanation.\n"
    "You should make the judgment based on provided examples.\n"
    "\n"
    "Examples:\n"
    "Question: When did the director of film Lord Richard In The Pantry die?\n"
    "Ground Truth: 7 January 1984\n"
    "Prediction: January 7, 1984\n"
    "Output: 1\n"
    "\n"
    "Question: Who is older, Charles Badham or Médéric De Vasselot De Régné?\n"
    "Ground Truth: Charles Badham\n"
    "Prediction: Médéric De Vasselot De Régné\n"
    "Output: -1";

constexpr const char* kOutcomeUserPrefix = "Question: ";
constexpr const char* kOutcomeUserGold = "\nGround Truth: ";
constexpr const char* kOutcomeUserPrediction = "\nPrediction: ";
constexpr const char* kOutcomeUserSuffix = "\nOutput:";

constexpr const char* kStepSystem =
    "You are a strict reasoning consistency judge. Decide if the reasoning segment is FULLY "
    "SUPPORTED by the provided evidences.\n"
    "\n"
    "Rules:\n"
    "1) Output only one digit: 1 if the segment contains meaningful reasoning AND is strictly "
    "supported by the evidences; 0 otherwise.\n"
    "2) Give 0 if the segment adds NO new information, is just a plan/re-statement, or lacks "
    "specific details (e.g., 'We should review the list...').\n"
    "3) Give 1 ONLY if the segment's key assertion semantically matches or is directly inferred "
    "from an evidence.\n"
    "4) Base the decision strictly on the evidences; ignore world knowledge.\n"
    "5) Do not provide explanations.";

constexpr const char* kStepUserPrefix = "Evidences:\n";
constexpr const char* kStepUserSegment = "\n\nReasoning Segment:\n";
constexpr const char* kStepUserSuffix = "\n\nOutput (only 0 or 1):";

std::string first_token(const std::string& text) {
  std::size_t begin = 0;
  while (begin < text.size() && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  std::size_t end = begin;
  while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
  return text.substr(begin, end - begin);
}

struct Endpoint {
  std::string base;  // scheme://host:port
  std::string path;  // leading slash, "/" when absent
};

Endpoint parse_endpoint(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "endpoint must be an http(s) URL: " + url);
  }
  const std::size_t slash = url.find('/', scheme + 3);
  Endpoint ep;
  if (slash == std::string::npos) {
    ep.base = url;
    ep.path = "/";
  } else {
    ep.base = url.substr(0, slash);
    ep.path = url.substr(slash);
  }
  return ep;
}

JudgeResult failure(ErrorCode code, std::string message) {
  JudgeResult result;
  result.ok = false;
  result.value = 0;
  result.error = std::move(message);
  result.error_code = code;
  return result;
}

// One request, including retries. A transport failure or non-200 status maps
// to JudgeUnavailable; a 200 with an undecodable body or an unexpected token
// maps to JudgeProtocolError. fail_closed converts the final failure into the
// conservative verdict while keeping the diagnostic text.
JudgeResult execute_request(httplib::Client& client, const Endpoint& endpoint,
                            const JudgeRequest& request, const JudgeConfig& config) {
  const std::string body = request_body_json(request, config);
  JudgeResult last = failure(ErrorCode::JudgeUnavailable, "no attempt made");
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    httplib::Result res = client.Post(endpoint.path, body, "application/json");
    if (!res) {
      last = failure(ErrorCode::JudgeUnavailable,
                     "transport error: " + httplib::to_string(res.error()));
      continue;
    }
    if (res->status != 200) {
      last = failure(ErrorCode::JudgeUnavailable,
                     "http status " + std::to_string(res->status));
      continue;
    }
    std::string text;
    try {
      const nlohmann::json parsed = nlohmann::json::parse(res->body);
      if (!parsed.is_object() || !parsed.contains("text") || !parsed["text"].is_string()) {
        last = failure(ErrorCode::JudgeProtocolError, "response lacks a string \"text\" field");
        continue;
      }
      text = parsed["text"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      last = failure(ErrorCode::JudgeProtocolError,
                     std::string("response is not JSON: ") + e.what());
      continue;
    }
    const std::string token = first_token(text);
    if (request.kind == JudgeKind::Outcome) {
      if (token == "1") return {true, 1, "", ErrorCode::JudgeProtocolError};
      if (token == "-1") return {true, -1, "", ErrorCode::JudgeProtocolError};
    } else {
      if (token == "1") return {true, 1, "", ErrorCode::JudgeProtocolError};
      if (token == "0") return {true, 0, "", ErrorCode::JudgeProtocolError};
    }
    last = failure(ErrorCode::JudgeProtocolError, "unexpected verdict token \"" + token + "\"");
  }
  if (config.fail_closed) {
    JudgeResult closed;
    closed.ok = true;
    closed.value = request.kind == JudgeKind::Outcome ? -1 : 0;
    closed.error = "fail_closed after: " + last.error;
    closed.error_code = last.error_code;
    return closed;
  }
  return last;
}

httplib::Client make_client(const Endpoint& endpoint, const JudgeConfig& config) {
  httplib::Client client(endpoint.base);
  const time_t sec = config.timeout_ms / 1000;
  const time_t usec = (config.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  client.set_keep_alive(true);
  return client;
}

int env_int(const char* name, int fallback) {
  const char* raw = std::getenv(name);
  if (raw == nullptr || *raw == '\0') return fallback;
  try {
    return std::stoi(raw);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " is not an integer: " + raw);
  }
}

}  // namespace

void JudgeConfig::validate() const {
  if (endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "judge endpoint is empty");
  if (model.empty()) throw Error(ErrorCode::InvalidArgument, "judge model name is empty");
  if (max_in_flight < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_in_flight must be at least 1");
  }
  if (timeout_ms < 1) throw Error(ErrorCode::InvalidArgument, "timeout_ms must be positive");
  if (retries < 0) throw Error(ErrorCode::InvalidArgument, "retries must be non-negative");
  if (max_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
  parse_endpoint(endpoint);
}

JudgeConfig judge_config_from_env() {
  JudgeConfig config;
  const char* endpoint = std::getenv("JUDGE_ENDPOINT");
  const char* model = std::getenv("JUDGE_MODEL");
  if (endpoint == nullptr || *endpoint == '\0') {
    throw Error(ErrorCode::InvalidArgument, "JUDGE_ENDPOINT is not set");
  }
  if (model == nullptr || *model == '\0') {
    throw Error(ErrorCode::InvalidArgument, "JUDGE_MODEL is not set");
  }
  config.endpoint = endpoint;
  config.model = model;
  config.max_in_flight = env_int("JUDGE_MAX_IN_FLIGHT", config.max_in_flight);
  config.timeout_ms = env_int("JUDGE_TIMEOUT_MS", config.timeout_ms);
  config.validate();
  return config;
}

JudgePrompt render_outcome_prompt(const std::string& question, const std::string& gold,
                                  const std::string& prediction) {
  JudgePrompt prompt;
  prompt.system_text = kOutcomeSystem;
  prompt.user_text = std::string(kOutcomeUserPrefix) + question + kOutcomeUserGold + gold +
                     kOutcomeUserPrediction + prediction + kOutcomeUserSuffix;
  return prompt;
}

JudgePrompt render_step_prompt(const std::string& evidence_text,
                               const std::string& segment_text) {
  JudgePrompt prompt;
  prompt.system_text = kStepSystem;
  prompt.user_text = std::string(kStepUserPrefix) + evidence_text + kStepUserSegment +
                     segment_text + kStepUserSuffix;
  return prompt;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out += '\n';
    out += lines[i];
  }
  return out;
}

void JudgeRequest::validate() const {
  if (prompt.system_text.empty() || prompt.user_text.empty()) {
    throw Error(ErrorCode::InvalidArgument, "judge request prompt is empty");
  }
}

JudgeRequest make_outcome_request(const std::string& instance_id, int trajectory_index,
                                  const std::string& question, const std::string& gold,
                                  const std::string& prediction) {
  if (is_refusal(prediction)) {
    throw Error(ErrorCode::InvalidArgument,
                "refusals are classified locally and never sent to the judge");
  }
  JudgeRequest request;
  request.kind = JudgeKind::Outcome;
  request.prompt = render_outcome_prompt(question, gold, prediction);
  request.instance_id = instance_id;
  request.trajectory_index = trajectory_index;
  request.step_index = -1;
  return request;
}

JudgeRequest make_step_request(const std::string& instance_id, int trajectory_index,
                               int step_index, const std::string& evidence_text,
                               const std::string& segment_text) {
  if (evidence_text.empty() || segment_text.empty()) {
    throw Error(ErrorCode::InvalidArgument, "step judging needs evidence and segment text");
  }
  JudgeRequest request;
  request.kind = JudgeKind::StepFaithfulness;
  request.prompt = render_step_prompt(evidence_text, segment_text);
  request.instance_id = instance_id;
  request.trajectory_index = trajectory_index;
  request.step_index = step_index;
  return request;
}

std::string request_body_json(const JudgeRequest& request, const JudgeConfig& config) {
  nlohmann::ordered_json body;
  body["model"] = config.model;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", request.prompt.system_text}},
       {{"role", "user"}, {"content", request.prompt.user_text}}});
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_tokens;
  return body.dump();
}

std::vector<JudgeResult> judge_batch(const std::vector<JudgeRequest>& requests,
                                     const JudgeConfig& config) {
  config.validate();
  for (const JudgeRequest& request : requests) request.validate();
  std::vector<JudgeResult> results(requests.size());
  if (requests.empty()) return results;
  const Endpoint endpoint = parse_endpoint(config.endpoint);
  const std::size_t workers =
      std::min(static_cast<std::size_t>(config.max_in_flight), requests.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      httplib::Client client = make_client(endpoint, config);
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= requests.size()) break;
        results[i] = execute_request(client, endpoint, requests[i], config);
      }
    });
  }
  for (std::thread& t : pool) t.join();
  return results;
}

OutcomeJudgment judge_outcome(const std::string& question, const std::string& gold,
                              const std::string& prediction, const JudgeConfig& config) {
  config.validate();
  const JudgeRequest request = make_outcome_request("", 0, question, gold, prediction);
  const Endpoint endpoint = parse_endpoint(config.endpoint);
  httplib::Client client = make_client(endpoint, config);
  const JudgeResult result = execute_request(client, endpoint, request, config);
  if (!result.ok) throw Error(result.error_code, result.error);
  return result.value == 1 ? OutcomeJudgment::Correct : OutcomeJudgment::Incorrect;
}

int judge_step(const std::string& evidence_text, const std::string& segment_text,
               const JudgeConfig& config) {
  config.validate();
  const JudgeRequest request = make_step_request("", 0, 0, evidence_text, segment_text);
  const Endpoint endpoint = parse_endpoint(config.endpoint);
  httplib::Client client = make_client(endpoint, config);
  const JudgeResult result = execute_request(client, endpoint, request, config);
  if (!result.ok) throw Error(result.error_code, result.error);
  return result.value;
}

}  // namespace faithrl
