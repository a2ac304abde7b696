#pragma once

// Truthful-helpfulness score (THS), outcome-rate summaries, and the
// faithful-step ratio with its advantage-sign breakdown.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "faithrl/core.hpp"

namespace faithrl {

struct CapabilityPoint {
  double x = 0.0;  // correctness rate
  double y = 0.0;  // hallucination rate

  // Throws Error(InvalidArgument) unless 0 ≤ x, 0 ≤ y, x + y ≤ 1 (+1e-12 slack).
  void validate() const;
};

struct RateSummary {
  double p_correct = 0.0;
  double p_miss = 0.0;
  double p_hallucination = 0.0;
  // Optional faithful-trajectory probability; NaN when not tracked.
  double p_faithful = std::numeric_limits<double>::quiet_NaN();
};

// Signed normalized area relative to the baseline capability point:
//   THS = (current.x * baseline.y − baseline.x * current.y) / baseline.y
// 1 at the ideal point (1,0), 0 at the baseline, unbounded below (no clamping).
// Throws Error(THSUndefined) when baseline.y == 0; callers that want an
// epsilon floor must apply it themselves, explicitly.
double ths(const CapabilityPoint& baseline, const CapabilityPoint& current);

// Empirical class frequencies. Exact rational counting internally (integer
// tallies divided once at the end). Throws Error(EmptyBatch) on empty input.
RateSummary summarize_rates(const std::vector<OutcomeClass>& outcomes);

// Faithful-step ratio over a batch of trajectories, partitioned by the sign of
// each trajectory's advantage. Counts are exact integers; ratios divide at the
// boundary. A bucket with no steps reports NaN for its ratios.
struct FaithfulRatio {
  double overall = 0.0;
  double faithful_pos = 0.0;    // faithful steps / steps within A>0 trajectories
  double unfaithful_pos = 0.0;
  double faithful_neg = 0.0;    // same within A≤0 trajectories
  double unfaithful_neg = 0.0;
  uint64_t total_steps = 0;
  uint64_t faithful_steps = 0;
};

// verdicts[i] aligns with advantages[i]; each verdicts[i][j] is the 0/1 verdict
// of trajectory i's step j. Throws Error(EmptyBatch) when no steps exist at
// all, Error(InvalidArgument) on length mismatch.
FaithfulRatio faithful_step_ratio(const std::vector<std::vector<int>>& verdicts,
                                  const std::vector<double>& advantages);

// One metrics CSV row per training step; see write_metrics_csv for the fixed
// column order and formatting (reproducibility contract: byte-identical for
// identical runs).
struct MetricsRow {
  int64_t step = 0;
  RateSummary rates;
  double ths_value = 0.0;  // NaN when the baseline leaves THS undefined
  FaithfulRatio faithful;
};

std::string format_metrics_header();
std::string format_metrics_row(const MetricsRow& row);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

}  // namespace faithrl
