#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdflow/sampler.hpp"

namespace crowdflow {

/// Inclusive frame range of one ground-truth event.
struct EventWindow {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const EventWindow&, const EventWindow&) = default;
};

struct EventLabels {
  std::vector<EventWindow> windows;

  /// Sorted, non-overlapping, start <= end.
  void validate() const;
  friend bool operator==(const EventLabels&, const EventLabels&) = default;
};

/// "start,end" per line.
EventLabels parse_labels(std::string_view text);
std::string format_labels(const EventLabels& labels);

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  /// Saved frames lying inside any slack-expanded window (TPs plus the
  /// neutral duplicates). Numerator of the correct frame rate.
  std::size_t correct = 0;
};

/// Saved frames are walked in order. A frame inside an unmatched window
/// (expanded by +-slack) matches the lowest such window: TP. A frame only
/// inside already-matched windows is a neutral duplicate. Any other saved
/// frame is an FP. Windows left unmatched are FNs.
MatchCounts match_events(const SamplingRun& run, const EventLabels& labels, std::size_t slack);

/// A ratio whose denominator may be zero; undefined ratios read 0.
struct GuardedRatio {
  double value = 0.0;
  bool defined = false;
};

struct PrfScores {
  GuardedRatio precision;
  GuardedRatio recall;
  GuardedRatio f1;
};

PrfScores precision_recall_f1(std::size_t tp, std::size_t fp, std::size_t fn);

/// Fixed-precision table convention: precision and recall are rounded to
/// `decimals` first and F1 is the harmonic mean of the rounded pair, then
/// rounded itself.
PrfScores tabulated_prf(std::size_t tp, std::size_t fp, std::size_t fn, int decimals = 3);

double round_to(double value, int decimals);

/// 1 - saved / total.
double reduction_ratio(std::size_t saved, std::size_t total);
GuardedRatio correct_frame_rate(std::size_t correct, std::size_t saved);

double mae(std::span<const double> predicted, std::span<const double> actual);

struct MagnitudeSplit {
  GuardedRatio sampled;  // mean over saved frames that carry a magnitude
  GuardedRatio skipped;  // mean over unsaved frames that carry a magnitude
  double sampled_sum = 0.0;
  double skipped_sum = 0.0;
  std::size_t sampled_count = 0;
  std::size_t skipped_count = 0;
};

MagnitudeSplit magnitude_split(const SamplingRun& run);

struct MetricsReport {
  std::string name;
  std::size_t total_frames = 0;
  std::size_t saved_frames = 0;
  MatchCounts counts;
  PrfScores scores;
  double reduction = 0.0;
  GuardedRatio correct_rate;
  std::optional<MagnitudeSplit> magnitudes;
  std::optional<double> threshold;
};

MetricsReport evaluate(std::string name, const SamplingRun& run, const EventLabels& labels, std::size_t slack);

/// Pools counts and magnitude sums across videos.
MetricsReport aggregate(const std::vector<MetricsReport>& reports, std::string name = "all");

/// One row per report: name,total,saved,tp,fp,fn,precision,recall,f1,
/// reduction_ratio,correct_frame_rate,mean_magnitude_sampled,
/// mean_magnitude_skipped,undefined (';'-joined list of undefined fields).
std::string reports_to_csv(const std::vector<MetricsReport>& reports);

/// Aligned text: TP/FP/FN with tabulated precision/recall/F1, reduction
/// ratio and magnitude means.
std::string metrics_table(const std::vector<MetricsReport>& reports);

/// Aligned text comparing strategies: saved, total, correct, rate (%).
std::string strategy_table(const std::vector<MetricsReport>& reports);

}  // namespace crowdflow
