// faithrl command-line interface. All real work happens behind the C API in
// the shared library (faithrl.h); this translation unit only parses arguments,
// forwards paths, prints summaries, and maps status codes to exit codes:
//   0 success | 1 runtime failure / failed verification | 2 usage | 3 numeric.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faithrl.h"

namespace {

struct SessionDeleter {
  void operator()(faithrl_session* session) const { faithrl_session_destroy(session); }
};
using SessionPtr = std::unique_ptr<faithrl_session, SessionDeleter>;

int fail(int status) {
  std::fprintf(stderr, "error: %s\n", faithrl_last_error());
  return status;
}

// Builds the session from --config and --set overrides (overrides win).
// Returns nullptr after printing the error (usage failure).
SessionPtr make_session(const std::string& config_path,
                        const std::vector<std::string>& overrides) {
  SessionPtr session(config_path.empty()
                         ? faithrl_session_create()
                         : faithrl_session_create_from_file(config_path.c_str()));
  if (!session) {
    std::fprintf(stderr, "error: %s\n", faithrl_last_error());
    return nullptr;
  }
  for (const std::string& pair : overrides) {
    const std::size_t eq = pair.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", pair.c_str());
      return nullptr;
    }
    const std::string key = pair.substr(0, eq);
    const std::string value = pair.substr(eq + 1);
    if (faithrl_session_set(session.get(), key.c_str(), value.c_str()) != FAITHRL_OK) {
      std::fprintf(stderr, "error: %s\n", faithrl_last_error());
      return nullptr;
    }
  }
  return session;
}

const char* opt(const std::string& path) { return path.empty() ? nullptr : path.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"faithfulness-first group-RL toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(faithrl_version()));

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (dotted key = value lines)");
    cmd->add_option("--set", overrides, "override one config key (key=value); wins over --config")
        ->take_all();
  };

  // train
  std::string train_metrics = "metrics.csv";
  std::string train_manifest;
  CLI::App* train = app.add_subcommand("train", "train the toy policy, emit metrics CSV");
  add_config_options(train);
  train->add_option("--out", train_metrics, "metrics CSV path (default metrics.csv)");
  train->add_option("--manifest", train_manifest, "run manifest JSON path");

  // score
  std::string score_instances, score_trajectories, score_verdicts;
  std::string score_out = "scores.jsonl";
  std::string score_manifest;
  CLI::App* score = app.add_subcommand("score", "trajectories -> modulated advantages");
  add_config_options(score);
  score->add_option("--instances", score_instances, "instances JSONL")->required();
  score->add_option("--trajectories", score_trajectories, "trajectories JSONL")->required();
  score->add_option("--verdicts", score_verdicts,
                    "step-verdict JSONL; omit to use the configured judge");
  score->add_option("--out", score_out, "score output JSONL (default scores.jsonl)");
  score->add_option("--manifest", score_manifest, "run manifest JSON path");

  // prune
  std::string prune_instances;
  std::string prune_out = "pruned.jsonl";
  std::string prune_report, prune_manifest;
  CLI::App* prune = app.add_subcommand("prune", "build unanswerable instances");
  add_config_options(prune);
  prune->add_option("--instances", prune_instances, "instances JSONL")->required();
  prune->add_option("--out", prune_out, "pruned instances JSONL (default pruned.jsonl)");
  prune->add_option("--report", prune_report, "per-instance prune report JSONL");
  prune->add_option("--manifest", prune_manifest, "run manifest JSON path");

  // verify
  int theorem = 0;
  std::string verify_report, verify_manifest;
  CLI::App* verify = app.add_subcommand("verify", "run a theorem verification");
  add_config_options(verify);
  verify->add_option("theorem", theorem, "theorem id: 1, 2 or 3")->required();
  verify->add_option("--report", verify_report, "measured-quantities report JSON path");
  verify->add_option("--manifest", verify_manifest, "run manifest JSON path");

  // report
  std::vector<std::string> report_csvs;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "summarize metrics CSVs");
  report->add_option("csv", report_csvs, "metrics CSV files")->required();
  report->add_option("--out", report_out, "summary table output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : FAITHRL_USAGE;
  }

  if (train->parsed()) {
    SessionPtr session = make_session(config_path, overrides);
    if (!session) return FAITHRL_USAGE;
    const int rc = faithrl_train(session.get(), train_metrics.c_str(), opt(train_manifest));
    if (rc != FAITHRL_OK) return fail(rc);
    std::fputs(faithrl_last_summary(), stdout);
    return 0;
  }

  if (score->parsed()) {
    SessionPtr session = make_session(config_path, overrides);
    if (!session) return FAITHRL_USAGE;
    const int rc = faithrl_score(session.get(), score_instances.c_str(),
                                 score_trajectories.c_str(), opt(score_verdicts),
                                 score_out.c_str(), opt(score_manifest));
    if (rc != FAITHRL_OK) return fail(rc);
    std::fputs(faithrl_last_summary(), stdout);
    return 0;
  }

  if (prune->parsed()) {
    SessionPtr session = make_session(config_path, overrides);
    if (!session) return FAITHRL_USAGE;
    const int rc = faithrl_prune(session.get(), prune_instances.c_str(),
                                 prune_out.c_str(), opt(prune_report),
                                 opt(prune_manifest));
    if (rc != FAITHRL_OK) return fail(rc);
    std::fputs(faithrl_last_summary(), stdout);
    return 0;
  }

  if (verify->parsed()) {
    SessionPtr session = make_session(config_path, overrides);
    if (!session) return FAITHRL_USAGE;
    int holds = 0;
    const int rc = faithrl_verify(session.get(), theorem, opt(verify_report),
                                  opt(verify_manifest), &holds);
    if (rc != FAITHRL_OK) return fail(rc);
    std::fputs(faithrl_last_summary(), stdout);
    return holds == 1 ? 0 : 1;
  }

  if (report->parsed()) {
    std::vector<const char*> paths;
    paths.reserve(report_csvs.size());
    for (const std::string& path : report_csvs) paths.push_back(path.c_str());
    const int rc = faithrl_report(paths.data(), paths.size(), opt(report_out));
    if (rc != FAITHRL_OK) return fail(rc);
    std::fputs(faithrl_last_summary(), stdout);
    return 0;
  }

  return FAITHRL_USAGE;
}
