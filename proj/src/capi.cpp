#include "faithrl.h"

#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "faithrl/config.hpp"
#include "faithrl/driver.hpp"
#include "faithrl/error.hpp"
#include "faithrl/faam.hpp"
#include "faithrl/grpo.hpp"
#include "faithrl/metrics.hpp"
#include "faithrl/reward.hpp"
#include "faithrl/version.hpp"

struct faithrl_session {
  faithrl::Config config;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_summary;

int status_of(faithrl::ErrorCode code) {
  switch (code) {
    case faithrl::ErrorCode::InvalidArgument:
    case faithrl::ErrorCode::Schema:
    case faithrl::ErrorCode::EmptyBatch:
    case faithrl::ErrorCode::GroupTooSmall:
    case faithrl::ErrorCode::CannotPrune:
      return FAITHRL_USAGE;
    case faithrl::ErrorCode::NumericalFailure:
    case faithrl::ErrorCode::THSUndefined:
    case faithrl::ErrorCode::EnumerationOverflow:
      return FAITHRL_NUMERIC;
    case faithrl::ErrorCode::FilterAborted:
    case faithrl::ErrorCode::JudgeProtocolError:
    case faithrl::ErrorCode::JudgeUnavailable:
    case faithrl::ErrorCode::Io:
      return FAITHRL_FAILURE;
  }
  return FAITHRL_FAILURE;
}

// Runs `body`, translating exceptions into status codes + g_last_error.
template <typename Fn>
int guarded(Fn&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const faithrl::Error& error) {
    g_last_error = error.what();
    return status_of(error.code());
  } catch (const std::exception& error) {
    g_last_error = error.what();
    return FAITHRL_FAILURE;
  } catch (...) {
    g_last_error = "unknown failure";
    return FAITHRL_FAILURE;
  }
}

std::string path_or_empty(const char* path) {
  return path != nullptr ? std::string(path) : std::string();
}

int require(bool ok, const char* message) {
  if (ok) return FAITHRL_OK;
  g_last_error = message;
  return FAITHRL_USAGE;
}

std::string format_stats_line(const char* label, const faithrl::ExactStats& stats) {
  std::ostringstream line;
  line << label << ": P(C) = " << stats.rates.p_correct
       << ", P(M) = " << stats.rates.p_miss
       << ", P(H) = " << stats.rates.p_hallucination
       << ", THS = " << stats.ths_value
       << ", faithful ratio = " << stats.faithful_ratio;
  return line.str();
}

}  // namespace

extern "C" {

const char* faithrl_version(void) { return faithrl::kVersion; }

const char* faithrl_last_error(void) { return g_last_error.c_str(); }

const char* faithrl_last_summary(void) { return g_last_summary.c_str(); }

int faithrl_ths(double baseline_x, double baseline_y, double current_x,
                double current_y, double* out) {
  if (int rc = require(out != nullptr, "out must not be NULL")) return rc;
  return guarded([&] {
    const faithrl::CapabilityPoint baseline{baseline_x, baseline_y};
    const faithrl::CapabilityPoint current{current_x, current_y};
    baseline.validate();
    current.validate();
    *out = faithrl::ths(baseline, current);
    return FAITHRL_OK;
  });
}

int faithrl_geometric_reward(int outcome, double baseline_x, double baseline_y,
                             double* out) {
  if (int rc = require(out != nullptr, "out must not be NULL")) return rc;
  if (int rc = require(outcome >= 0 && outcome <= 2,
                       "outcome must be 0 (correct), 1 (miss) or 2 (hallucination)")) {
    return rc;
  }
  return guarded([&] {
    const faithrl::CapabilityPoint baseline{baseline_x, baseline_y};
    const faithrl::RewardScheme scheme = faithrl::RewardScheme::geometric(baseline);
    const auto outcome_class = static_cast<faithrl::OutcomeClass>(outcome);
    *out = faithrl::geometric_reward(outcome_class, scheme.baseline);
    return FAITHRL_OK;
  });
}

int faithrl_group_advantages(const double* rewards, size_t n, double std_floor,
                             double* out) {
  if (int rc = require(rewards != nullptr && out != nullptr,
                       "rewards and out must not be NULL")) {
    return rc;
  }
  return guarded([&] {
    faithrl::OptimizerConfig config;
    config.std_floor = std_floor;
    const std::vector<double> input(rewards, rewards + n);
    const std::vector<double> advantages = faithrl::group_advantages(input, config);
    std::memcpy(out, advantages.data(), n * sizeof(double));
    return FAITHRL_OK;
  });
}

int faithrl_modulation(double advantage, int verdict, double alpha, double* out) {
  if (int rc = require(out != nullptr, "out must not be NULL")) return rc;
  return guarded([&] {
    *out = faithrl::modulation_factor(advantage, verdict, alpha);
    return FAITHRL_OK;
  });
}

int faithrl_clipped_surrogate(double ratio, double advantage, double clip_epsilon,
                              double* out) {
  if (int rc = require(out != nullptr, "out must not be NULL")) return rc;
  return guarded([&] {
    *out = faithrl::clipped_surrogate(ratio, advantage, clip_epsilon);
    return FAITHRL_OK;
  });
}

faithrl_session* faithrl_session_create(void) {
  return new (std::nothrow) faithrl_session();
}

faithrl_session* faithrl_session_create_from_file(const char* path) {
  if (path == nullptr) {
    g_last_error = "path must not be NULL";
    return nullptr;
  }
  faithrl_session* session = new (std::nothrow) faithrl_session();
  if (session == nullptr) {
    g_last_error = "allocation failure";
    return nullptr;
  }
  const int rc = guarded([&] {
    session->config = faithrl::Config::parse_file(path);
    return FAITHRL_OK;
  });
  if (rc != FAITHRL_OK) {
    delete session;
    return nullptr;
  }
  return session;
}

int faithrl_session_set(faithrl_session* session, const char* key, const char* value) {
  if (int rc = require(session != nullptr && key != nullptr && value != nullptr,
                       "session, key and value must not be NULL")) {
    return rc;
  }
  return guarded([&] {
    session->config.set(key, value);
    return FAITHRL_OK;
  });
}

void faithrl_session_destroy(faithrl_session* session) { delete session; }

int faithrl_train(faithrl_session* session, const char* metrics_csv_path,
                  const char* manifest_path) {
  if (int rc = require(session != nullptr, "session must not be NULL")) return rc;
  if (int rc = require(metrics_csv_path != nullptr && metrics_csv_path[0] != '\0',
                       "metrics_csv_path must not be empty")) {
    return rc;
  }
  return guarded([&] {
    const faithrl::TrainOutcome outcome = faithrl::run_train(
        session->config, metrics_csv_path, path_or_empty(manifest_path));
    std::ostringstream summary;
    summary << "wrote " << outcome.rows_written << " metric rows to "
            << outcome.metrics_path << '\n'
            << format_stats_line("initial", outcome.initial_stats) << '\n'
            << format_stats_line("final", outcome.final_stats) << '\n';
    if (outcome.baseline_available) {
      summary << "baseline: x = " << outcome.baseline_used.x
              << ", y = " << outcome.baseline_used.y << '\n';
    }
    g_last_summary = summary.str();
    return FAITHRL_OK;
  });
}

int faithrl_score(faithrl_session* session, const char* instances_path,
                  const char* trajectories_path, const char* verdicts_path,
                  const char* scores_path, const char* manifest_path) {
  if (int rc = require(session != nullptr, "session must not be NULL")) return rc;
  if (int rc = require(instances_path != nullptr && instances_path[0] != '\0' &&
                           trajectories_path != nullptr && trajectories_path[0] != '\0' &&
                           scores_path != nullptr && scores_path[0] != '\0',
                       "instances, trajectories and scores paths must not be empty")) {
    return rc;
  }
  return guarded([&] {
    const faithrl::ScoreOutcome outcome = faithrl::run_score(
        session->config, instances_path, trajectories_path,
        path_or_empty(verdicts_path), scores_path, path_or_empty(manifest_path));
    std::ostringstream summary;
    summary << "scored " << outcome.trajectories << " trajectories over "
            << outcome.instances << " instances ("
            << (outcome.judge_used ? "judge verdicts" : "file verdicts")
            << "); wrote " << outcome.records_written << " records to "
            << outcome.scores_path << '\n';
    g_last_summary = summary.str();
    return FAITHRL_OK;
  });
}

int faithrl_prune(faithrl_session* session, const char* instances_path,
                  const char* output_path, const char* report_path,
                  const char* manifest_path) {
  if (int rc = require(session != nullptr, "session must not be NULL")) return rc;
  if (int rc = require(instances_path != nullptr && instances_path[0] != '\0' &&
                           output_path != nullptr && output_path[0] != '\0',
                       "instances and output paths must not be empty")) {
    return rc;
  }
  return guarded([&] {
    const faithrl::PruneOutcome outcome = faithrl::run_prune(
        session->config, instances_path, output_path, path_or_empty(report_path),
        path_or_empty(manifest_path));
    std::ostringstream summary;
    summary << "pruned " << outcome.input_instances << " instances: kept "
            << outcome.kept << ", filtered out " << outcome.filtered_out
            << ", cannot_prune " << outcome.cannot_prune << ", filter_aborted "
            << outcome.filter_aborted << '\n';
    g_last_summary = summary.str();
    return FAITHRL_OK;
  });
}

int faithrl_verify(faithrl_session* session, int theorem, const char* report_path,
                   const char* manifest_path, int* out_holds) {
  if (int rc = require(session != nullptr && out_holds != nullptr,
                       "session and out_holds must not be NULL")) {
    return rc;
  }
  return guarded([&] {
    const faithrl::VerifyOutcome outcome = faithrl::run_verify(
        session->config, theorem, path_or_empty(report_path),
        path_or_empty(manifest_path));
    *out_holds = outcome.holds ? 1 : 0;
    std::ostringstream summary;
    summary << "theorem " << outcome.theorem << ' '
            << (outcome.holds ? "HOLDS" : "FAILS") << ": " << outcome.summary << '\n';
    g_last_summary = summary.str();
    return FAITHRL_OK;
  });
}

int faithrl_report(const char* const* csv_paths, size_t n_paths,
                   const char* summary_path) {
  if (int rc = require(n_paths > 0, "at least one csv path is required")) {
    return rc;
  }
  if (int rc = require(csv_paths != nullptr, "csv_paths must not be NULL")) {
    return rc;
  }
  return guarded([&] {
    std::vector<std::string> paths;
    paths.reserve(n_paths);
    for (size_t i = 0; i < n_paths; ++i) {
      if (csv_paths[i] == nullptr) {
        throw faithrl::Error(faithrl::ErrorCode::InvalidArgument,
                             "csv path must not be NULL");
      }
      paths.emplace_back(csv_paths[i]);
    }
    const faithrl::ReportOutcome outcome =
        faithrl::run_report(paths, path_or_empty(summary_path));
    g_last_summary = outcome.table;
    return FAITHRL_OK;
  });
}

}  // extern "C"
