#pragma once

// Command drivers shared by the C API and the CLI: each run_* function is one
// subcommand's whole pipeline (read inputs, run the module, write outputs and
// a run manifest) minus argument parsing and exit-code mapping.

#include <string>
#include <vector>

#include "faithrl/config.hpp"
#include "faithrl/grpo.hpp"
#include "faithrl/metrics.hpp"

namespace faithrl {

// --- train --------------------------------------------------------------------

struct TrainOutcome {
  ExactStats initial_stats;
  ExactStats final_stats;
  CapabilityPoint baseline_used;
  bool baseline_available = false;
  std::string metrics_path;
  std::string manifest_path;
  int64_t rows_written = 0;
};

// Builds an ExperimentConfig from `config` (rejecting unconsumed keys), runs
// the training experiment, writes the per-step metrics CSV and a manifest.
TrainOutcome run_train(const Config& config, const std::string& metrics_path,
                       const std::string& manifest_path);

// --- score --------------------------------------------------------------------

struct ScoreOutcome {
  std::size_t instances = 0;
  std::size_t trajectories = 0;
  std::size_t records_written = 0;
  bool judge_used = false;
  std::string scores_path;
  std::string manifest_path;
};

// Score-only pipeline. `verdicts_path` empty → step verdicts come from the
// configured judge endpoint (one bounded batch over every step); outcome
// classification always stays local (gold answers are in the instance file).
// Steps with empty text are scored 0 without a judge call.
ScoreOutcome run_score(const Config& config, const std::string& instances_path,
                       const std::string& trajectories_path,
                       const std::string& verdicts_path,
                       const std::string& scores_path,
                       const std::string& manifest_path);

// --- prune --------------------------------------------------------------------

struct PruneOutcome {
  std::size_t input_instances = 0;
  std::size_t kept = 0;
  std::size_t cannot_prune = 0;
  std::size_t filter_aborted = 0;
  std::size_t filtered_out = 0;  // pruned fine but recovered by the solver
  std::string output_path;
  std::string report_path;
  std::string manifest_path;
};

// Whole-dataset pruning pipeline with the toy-policy solver.
PruneOutcome run_prune(const Config& config, const std::string& instances_path,
                       const std::string& output_path,
                       const std::string& report_path,
                       const std::string& manifest_path);

// --- verify -------------------------------------------------------------------

struct VerifyOutcome {
  int theorem = 0;
  bool holds = false;
  std::string summary;  // one human-readable line with measured quantities
  std::string report_path;
  std::string manifest_path;
};

// Runs the theorem-1/2/3 verification named by `theorem` and writes a JSON
// report with the measured quantities. Throws Error(InvalidArgument) for
// theorem ∉ {1,2,3}; a false result is reported, not thrown.
VerifyOutcome run_verify(const Config& config, int theorem,
                         const std::string& report_path,
                         const std::string& manifest_path);

// The Theorem-3 mismatch-case suite used by `verify 3` and the acceptance
// gate: every (match class, advantage sign, step count, ratio regime)
// combination as hand-built groups — Spurious entries carry all-zero verdict
// vectors, Faltered all-ones, plus zero-spread boundary groups.
std::vector<TrajectoryGroup> build_mismatch_suite();

// --- report -------------------------------------------------------------------

struct ReportRow {
  std::string path;
  int64_t steps = 0;
  double final_p_correct = 0.0;
  double final_p_miss = 0.0;
  double final_p_hallucination = 0.0;
  double final_ths = 0.0;
  double final_faithful_ratio = 0.0;
  double delta_faithful_ratio = 0.0;  // last row − first row
};

struct ReportOutcome {
  std::vector<ReportRow> rows;
  std::string table;  // the rendered summary (also written to summary_path)
  std::string summary_path;
};

// Aggregates metrics CSVs (as written by run_train) into one summary table.
// `summary_path` empty → table is only returned, not written.
ReportOutcome run_report(const std::vector<std::string>& csv_paths,
                         const std::string& summary_path);

}  // namespace faithrl
