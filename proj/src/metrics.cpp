#include "faithrl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace faithrl {

void CapabilityPoint::validate() const {
  constexpr double kSlack = 1e-12;
  if (x < -kSlack || y < -kSlack || x + y > 1.0 + kSlack)
    throw Error(ErrorCode::InvalidArgument,
                "capability point must satisfy 0 <= x, 0 <= y, x + y <= 1");
}

double ths(const CapabilityPoint& baseline, const CapabilityPoint& current) {
  baseline.validate();
  current.validate();
  if (baseline.y == 0.0)
    throw Error(ErrorCode::THSUndefined,
                "THS undefined for a hallucination-free baseline (baseline.y == 0)");
  return (current.x * baseline.y - baseline.x * current.y) / baseline.y;
}

RateSummary summarize_rates(const std::vector<OutcomeClass>& outcomes) {
  if (outcomes.empty())
    throw Error(ErrorCode::EmptyBatch, "summarize_rates: empty outcome list");
  uint64_t correct = 0, miss = 0, halluc = 0;
  for (OutcomeClass c : outcomes) {
    switch (c) {
      case OutcomeClass::Correct: ++correct; break;
      case OutcomeClass::Miss: ++miss; break;
      case OutcomeClass::Hallucination: ++halluc; break;
    }
  }
  const double n = static_cast<double>(outcomes.size());
  return RateSummary{correct / n, miss / n, halluc / n};
}

FaithfulRatio faithful_step_ratio(const std::vector<std::vector<int>>& verdicts,
                                  const std::vector<double>& advantages) {
  if (verdicts.size() != advantages.size())
    throw Error(ErrorCode::InvalidArgument,
                "faithful_step_ratio: verdicts/advantages length mismatch");
  uint64_t total = 0, faithful = 0;
  uint64_t pos_total = 0, pos_faithful = 0;
  uint64_t neg_total = 0, neg_faithful = 0;
  for (size_t i = 0; i < verdicts.size(); ++i) {
    const bool positive = advantages[i] > 0.0;
    for (int v : verdicts[i]) {
      const uint64_t f = v != 0 ? 1 : 0;
      ++total;
      faithful += f;
      if (positive) {
        ++pos_total;
        pos_faithful += f;
      } else {
        ++neg_total;
        neg_faithful += f;
      }
    }
  }
  if (total == 0)
    throw Error(ErrorCode::EmptyBatch, "faithful_step_ratio: no steps in batch");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  FaithfulRatio r;
  r.total_steps = total;
  r.faithful_steps = faithful;
  r.overall = static_cast<double>(faithful) / static_cast<double>(total);
  r.faithful_pos = pos_total ? static_cast<double>(pos_faithful) / pos_total : nan;
  r.unfaithful_pos = pos_total ? static_cast<double>(pos_total - pos_faithful) / pos_total : nan;
  r.faithful_neg = neg_total ? static_cast<double>(neg_faithful) / neg_total : nan;
  r.unfaithful_neg = neg_total ? static_cast<double>(neg_total - neg_faithful) / neg_total : nan;
  return r;
}

namespace {

// Fixed-width decimal keeps CSVs byte-reproducible across platforms; NaN is
// spelled "nan" explicitly (printf may vary its sign bit rendering).
std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

}  // namespace

std::string format_metrics_header() {
  return "step,p_correct,p_miss,p_hallucination,ths,faithful_ratio,"
         "faithful_pos,unfaithful_pos,faithful_neg,unfaithful_neg";
}

std::string format_metrics_row(const MetricsRow& row) {
  std::string out = std::to_string(row.step);
  for (double v : {row.rates.p_correct, row.rates.p_miss, row.rates.p_hallucination,
                   row.ths_value, row.faithful.overall, row.faithful.faithful_pos,
                   row.faithful.unfaithful_pos, row.faithful.faithful_neg,
                   row.faithful.unfaithful_neg}) {
    out.push_back(',');
    out += format_value(v);
  }
  return out;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open metrics CSV for writing: " + path);
  out << format_metrics_header() << '\n';
  for (const auto& row : rows) out << format_metrics_row(row) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing metrics CSV: " + path);
}

}  // namespace faithrl
