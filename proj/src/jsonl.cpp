#include "faithrl/jsonl.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "faithrl/error.hpp"

namespace faithrl::jsonl {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::Schema, path + ":" + std::to_string(line) + ": " + what);
}

void require_keys(const json& j, std::initializer_list<const char*> keys,
                  const std::string& path, std::size_t line) {
  if (!j.is_object()) fail(path, line, "expected a JSON object");
  for (const char* key : keys) {
    if (!j.contains(key)) fail(path, line, std::string("missing field: ") + key);
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : keys) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail(path, line, "unknown field: " + item.key());
  }
}

std::string get_string(const json& j, const char* key, const std::string& path,
                       std::size_t line) {
  if (!j.at(key).is_string()) fail(path, line, std::string(key) + " must be a string");
  return j.at(key).get<std::string>();
}

bool get_bool(const json& j, const char* key, const std::string& path, std::size_t line) {
  if (!j.at(key).is_boolean()) fail(path, line, std::string(key) + " must be a boolean");
  return j.at(key).get<bool>();
}

std::vector<double> get_doubles(const json& j, const char* key, const std::string& path,
                                std::size_t line) {
  if (!j.at(key).is_array()) fail(path, line, std::string(key) + " must be an array");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) fail(path, line, std::string(key) + " must contain numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

// Drives line-by-line parsing with uniform error decoration.
template <typename Record>
std::vector<Record> read_lines(const std::string& path,
                               const std::function<Record(const json&, std::size_t)>& parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open for reading: " + path);
  std::vector<Record> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(path, line_no, e.what());
    }
    try {
      out.push_back(parse(j, line_no));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Schema &&
          std::string(e.what()).rfind(path + ":", 0) == 0) {
        throw;  // already decorated
      }
      fail(path, line_no, e.what());
    }
  }
  if (in.bad()) throw Error(ErrorCode::Io, "read failure on " + path);
  return out;
}

void write_lines(const std::string& path, const std::vector<ordered_json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path);
  for (const ordered_json& row : rows) {
    out << row.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failure on " + path);
}

}  // namespace

std::vector<Instance> read_instances(const std::string& path) {
  return read_lines<Instance>(path, [&](const json& j, std::size_t line) {
    require_keys(j, {"id", "question", "documents", "evidence", "gold_answer", "answerable"},
                 path, line);
    Instance instance;
    instance.id = get_string(j, "id", path, line);
    instance.question = get_string(j, "question", path, line);
    if (!j.at("documents").is_array()) fail(path, line, "documents must be an array");
    for (const auto& d : j.at("documents")) {
      require_keys(d, {"doc_id", "text"}, path, line);
      instance.documents.push_back(
          {get_string(d, "doc_id", path, line), get_string(d, "text", path, line)});
    }
    if (!j.at("evidence").is_array()) fail(path, line, "evidence must be an array");
    for (const auto& e : j.at("evidence")) {
      if (!e.is_string()) fail(path, line, "evidence must contain strings only");
      instance.evidence.push_back(e.get<std::string>());
    }
    instance.gold_answer = get_string(j, "gold_answer", path, line);
    instance.answerable = get_bool(j, "answerable", path, line);
    instance.validate();
    return instance;
  });
}

void write_instances(const std::string& path, const std::vector<Instance>& instances) {
  std::vector<ordered_json> rows;
  rows.reserve(instances.size());
  for (const Instance& instance : instances) {
    ordered_json docs = ordered_json::array();
    for (const Document& d : instance.documents) {
      docs.push_back(ordered_json{{"doc_id", d.doc_id}, {"text", d.text}});
    }
    rows.push_back(ordered_json{{"id", instance.id},
                                {"question", instance.question},
                                {"documents", docs},
                                {"evidence", instance.evidence},
                                {"gold_answer", instance.gold_answer},
                                {"answerable", instance.answerable}});
  }
  write_lines(path, rows);
}

std::vector<TrajectoryRecord> read_trajectories(const std::string& path) {
  return read_lines<TrajectoryRecord>(path, [&](const json& j, std::size_t line) {
    require_keys(j, {"instance_id", "steps", "answer", "logprobs_old", "logprobs_new",
                     "step_spans"},
                 path, line);
    TrajectoryRecord record;
    record.instance_id = get_string(j, "instance_id", path, line);
    if (!j.at("steps").is_array()) fail(path, line, "steps must be an array");
    for (const auto& s : j.at("steps")) {
      require_keys(s, {"text", "cited_items"}, path, line);
      Step step;
      step.text = get_string(s, "text", path, line);
      if (!s.at("cited_items").is_array()) fail(path, line, "cited_items must be an array");
      for (const auto& c : s.at("cited_items")) {
        if (!c.is_string()) fail(path, line, "cited_items must contain strings only");
        step.cited_items.push_back(c.get<std::string>());
      }
      record.trajectory.steps.push_back(std::move(step));
    }
    record.trajectory.answer = get_string(j, "answer", path, line);
    if (is_refusal(record.trajectory.answer)) record.trajectory.answer = kIdk;
    record.trajectory.logprobs_old = get_doubles(j, "logprobs_old", path, line);
    record.trajectory.logprobs_new = get_doubles(j, "logprobs_new", path, line);
    if (!j.at("step_spans").is_array()) fail(path, line, "step_spans must be an array");
    for (const auto& span : j.at("step_spans")) {
      if (!span.is_array() || span.size() != 2 || !span[0].is_number_unsigned() ||
          !span[1].is_number_unsigned()) {
        fail(path, line, "step_spans must contain [start, end] index pairs");
      }
      record.trajectory.step_spans.push_back(
          {span[0].get<std::size_t>(), span[1].get<std::size_t>()});
    }
    record.trajectory.validate();
    return record;
  });
}

void write_trajectories(const std::string& path,
                        const std::vector<TrajectoryRecord>& records) {
  std::vector<ordered_json> rows;
  rows.reserve(records.size());
  for (const TrajectoryRecord& record : records) {
    ordered_json steps = ordered_json::array();
    for (const Step& step : record.trajectory.steps) {
      steps.push_back(ordered_json{
          {"text", step.text},
          {"cited_items",
           std::vector<std::string>(step.cited_items.begin(), step.cited_items.end())}});
    }
    ordered_json spans = ordered_json::array();
    for (const Span& span : record.trajectory.step_spans) {
      spans.push_back(ordered_json::array({span.begin, span.end}));
    }
    rows.push_back(ordered_json{{"instance_id", record.instance_id},
                                {"steps", steps},
                                {"answer", record.trajectory.answer},
                                {"logprobs_old", record.trajectory.logprobs_old},
                                {"logprobs_new", record.trajectory.logprobs_new},
                                {"step_spans", spans}});
  }
  write_lines(path, rows);
}

std::vector<VerdictRecord> read_verdicts(const std::string& path) {
  return read_lines<VerdictRecord>(path, [&](const json& j, std::size_t line) {
    require_keys(j, {"instance_id", "trajectory_index", "step_verdicts"}, path, line);
    VerdictRecord record;
    record.instance_id = get_string(j, "instance_id", path, line);
    if (!j.at("trajectory_index").is_number_unsigned()) {
      fail(path, line, "trajectory_index must be a non-negative integer");
    }
    record.trajectory_index = j.at("trajectory_index").get<std::size_t>();
    if (!j.at("step_verdicts").is_array()) fail(path, line, "step_verdicts must be an array");
    for (const auto& v : j.at("step_verdicts")) {
      if (!v.is_number_integer()) fail(path, line, "step_verdicts must contain integers");
      const int verdict = v.get<int>();
      if (verdict != 0 && verdict != 1) fail(path, line, "step verdicts must be 0 or 1");
      record.step_verdicts.push_back(verdict);
    }
    return record;
  });
}

void write_verdicts(const std::string& path, const std::vector<VerdictRecord>& records) {
  std::vector<ordered_json> rows;
  rows.reserve(records.size());
  for (const VerdictRecord& record : records) {
    rows.push_back(ordered_json{{"instance_id", record.instance_id},
                                {"trajectory_index", record.trajectory_index},
                                {"step_verdicts", record.step_verdicts}});
  }
  write_lines(path, rows);
}

std::vector<ScoreRecord> read_scores(const std::string& path) {
  return read_lines<ScoreRecord>(path, [&](const json& j, std::size_t line) {
    require_keys(j, {"instance_id", "trajectory_index", "advantage", "modulation",
                     "modulated_advantage"},
                 path, line);
    ScoreRecord record;
    record.instance_id = get_string(j, "instance_id", path, line);
    if (!j.at("trajectory_index").is_number_unsigned()) {
      fail(path, line, "trajectory_index must be a non-negative integer");
    }
    record.trajectory_index = j.at("trajectory_index").get<std::size_t>();
    if (!j.at("advantage").is_number()) fail(path, line, "advantage must be a number");
    record.advantage = j.at("advantage").get<double>();
    record.modulation = get_doubles(j, "modulation", path, line);
    record.modulated_advantage = get_doubles(j, "modulated_advantage", path, line);
    return record;
  });
}

void write_scores(const std::string& path, const std::vector<ScoreRecord>& records) {
  std::vector<ordered_json> rows;
  rows.reserve(records.size());
  for (const ScoreRecord& record : records) {
    rows.push_back(ordered_json{{"instance_id", record.instance_id},
                                {"trajectory_index", record.trajectory_index},
                                {"advantage", record.advantage},
                                {"modulation", record.modulation},
                                {"modulated_advantage", record.modulated_advantage}});
  }
  write_lines(path, rows);
}

void write_prune_reports(const std::string& path, const std::vector<PruneReport>& reports) {
  std::vector<ordered_json> rows;
  rows.reserve(reports.size());
  for (const PruneReport& report : reports) {
    rows.push_back(ordered_json{
        {"instance_id", report.instance_id},
        {"status", report.status},
        {"removed_doc_ids", report.removed_doc_ids},
        {"removed_hop_index", report.removed_hop_index},
        {"density_prunes_applied", report.density_prunes_applied},
        {"solvability", ordered_json{{"attempts", report.solvability.attempts},
                                     {"successes", report.solvability.successes},
                                     {"kept", report.solvability.kept},
                                     {"ran", report.solvability.ran}}}});
  }
  write_lines(path, rows);
}

std::vector<PruneReport> read_prune_reports(const std::string& path) {
  return read_lines<PruneReport>(path, [&](const json& j, std::size_t line) {
    require_keys(j, {"instance_id", "status", "removed_doc_ids", "removed_hop_index",
                     "density_prunes_applied", "solvability"},
                 path, line);
    PruneReport report;
    report.instance_id = get_string(j, "instance_id", path, line);
    report.status = get_string(j, "status", path, line);
    if (!j.at("removed_doc_ids").is_array()) fail(path, line, "removed_doc_ids must be an array");
    for (const auto& d : j.at("removed_doc_ids")) {
      if (!d.is_string()) fail(path, line, "removed_doc_ids must contain strings");
      report.removed_doc_ids.push_back(d.get<std::string>());
    }
    if (!j.at("removed_hop_index").is_number_integer()) {
      fail(path, line, "removed_hop_index must be an integer");
    }
    report.removed_hop_index = j.at("removed_hop_index").get<int>();
    if (!j.at("density_prunes_applied").is_number_integer()) {
      fail(path, line, "density_prunes_applied must be an integer");
    }
    report.density_prunes_applied = j.at("density_prunes_applied").get<int>();
    const json& s = j.at("solvability");
    require_keys(s, {"attempts", "successes", "kept", "ran"}, path, line);
    if (!s.at("attempts").is_number_unsigned() || !s.at("successes").is_number_unsigned()) {
      fail(path, line, "solvability counts must be non-negative integers");
    }
    report.solvability.attempts = s.at("attempts").get<uint32_t>();
    report.solvability.successes = s.at("successes").get<uint32_t>();
    report.solvability.kept = get_bool(s, "kept", path, line);
    report.solvability.ran = get_bool(s, "ran", path, line);
    return report;
  });
}

}  // namespace faithrl::jsonl
