#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdflow/frameio.hpp"
#include "crowdflow/optflow.hpp"

namespace crowdflow {

enum class Strategy { event, uniform, random, stratified, keyframe, adaptive };

/// anchored: the comparison reference moves only when a frame is saved.
/// frame_to_frame: the reference is always the immediately preceding frame.
enum class ReferencePolicy { anchored, frame_to_frame };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);
std::string_view to_string(ReferencePolicy p);
ReferencePolicy parse_reference_policy(std::string_view text);

struct StrategyParams {
  std::size_t stride = 30;      // uniform
  std::size_t count = 10;       // random, keyframe
  std::size_t segments = 15;    // stratified
  std::size_t per_segment = 1;  // stratified
  std::uint64_t seed = 0;       // random
  std::size_t window = 25;      // adaptive
  double sensitivity = 2.0;     // adaptive
  friend bool operator==(const StrategyParams&, const StrategyParams&) = default;
};

struct SamplerConfig {
  Strategy strategy = Strategy::event;
  double motion_threshold = 1.0;
  std::size_t min_gap = 0;
  ReferencePolicy reference = ReferencePolicy::anchored;
  /// When set, event sampling replaces motion_threshold with this
  /// nearest-rank percentile of the frame-to-frame magnitudes.
  std::optional<double> calibration_percentile;
  StrategyParams params;

  void validate() const;
  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

struct SamplingRun {
  std::size_t total_frames = 0;
  std::vector<std::size_t> saved_indices;
  /// One entry per frame when the strategy measured motion; frames that were
  /// never compared (frame 0) hold nullopt. Empty for offline strategies.
  std::vector<std::optional<double>> per_frame_magnitude;
  /// Gate threshold actually applied (event sampling only).
  std::optional<double> threshold;

  bool has_magnitudes() const { return !per_frame_magnitude.empty(); }
  /// Throws ArgumentError if indices are unsorted, duplicated or out of range.
  void validate() const;
  friend bool operator==(const SamplingRun&, const SamplingRun&) = default;
};

/// Save decision of the event sampler given a motion measurement against the
/// current reference. Frame 0 is always saved.
class EventGate {
 public:
  EventGate(double threshold, std::size_t min_gap);

  /// Frames must be offered in increasing order starting at 0; frame 0
  /// carries no magnitude.
  bool offer(std::size_t index, std::optional<double> magnitude);

 private:
  double threshold_;
  std::size_t min_gap_;
  std::optional<std::size_t> last_saved_;
};

/// Runs the event sampler against a caller-supplied motion probe. Frame 0
/// must exist. The probe receives (reference_index, current_index) with
/// current_index increasing by one per call, and returns the mean motion
/// magnitude between those frames or nullopt once the stream is exhausted.
/// `reference` decides how the reference moves. Used by event_sample and by
/// tests with precomputed magnitudes.
template <typename Probe>
SamplingRun event_select(double threshold, std::size_t min_gap, ReferencePolicy reference, Probe&& probe) {
  SamplingRun run;
  run.threshold = threshold;
  run.per_frame_magnitude.push_back(std::nullopt);
  EventGate gate(threshold, min_gap);
  gate.offer(0, std::nullopt);
  run.saved_indices.push_back(0);
  std::size_t ref = 0;
  std::size_t i = 1;
  for (;; ++i) {
    const std::optional<double> m = probe(ref, i);
    if (!m) break;
    run.per_frame_magnitude.push_back(m);
    const bool saved = gate.offer(i, m);
    if (saved) run.saved_indices.push_back(i);
    if (saved || reference == ReferencePolicy::frame_to_frame) ref = i;
  }
  run.total_frames = i;
  return run;
}

/// Event-driven sampling over a frame stream: Farneback flow from the
/// reference frame to the current one, gated on mean motion magnitude.
SamplingRun event_sample(FrameSource& source, const SamplerConfig& config, const FlowParams& flow_params);

SamplingRun uniform_sample(std::size_t total, std::size_t stride);
SamplingRun random_sample(std::size_t total, std::size_t k, std::uint64_t seed);
SamplingRun stratified_sample(std::size_t total, std::size_t segments, std::size_t per_segment);

/// Mean absolute pixel difference of every frame from its predecessor;
/// frame 0 scores 0.
std::vector<double> frame_difference_scores(FrameSource& source);
/// Picks the k best local maxima of the scores (ties by lower index), then
/// tops up from the remaining frames in the same order if fewer exist.
SamplingRun keyframe_select(std::span<const double> scores, std::size_t k);
SamplingRun keyframe_sample(FrameSource& source, std::size_t k);

/// Adaptive gate over frame-to-frame magnitudes (index 0 unused). A frame is
/// saved when its magnitude exceeds mean + sensitivity * (stddev + 1e-6) of
/// the previous `window` magnitudes; nothing is saved until the window fills.
SamplingRun adaptive_select(std::span<const std::optional<double>> magnitudes, std::size_t window,
                            double sensitivity);
SamplingRun adaptive_sample(FrameSource& source, std::size_t window, double sensitivity,
                            const FlowParams& flow_params);

/// Frame-to-frame mean magnitudes: entry i is the motion from frame i-1 to i,
/// entry 0 is nullopt.
std::vector<std::optional<double>> frame_to_frame_magnitudes(FrameSource& source, const FlowParams& flow_params);

/// Nearest-rank percentile, percentile in (0, 100].
double nearest_rank_percentile(std::span<const double> values, double percentile);
double calibrate_threshold(FrameSource& source, const FlowParams& flow_params, double percentile);
/// Same, over already-measured frame-to-frame magnitudes.
double calibrate_threshold(std::span<const std::optional<double>> magnitudes, double percentile);

/// Dispatches on config.strategy. Rewinds the source first.
SamplingRun run_sampler(FrameSource& source, const SamplerConfig& config, const FlowParams& flow_params);

// CSV columns frame_index,mean_magnitude,saved. Magnitudes are written with
// round-trip precision; frames without one leave the field empty.
std::string run_to_csv(const SamplingRun& run);
SamplingRun run_from_csv(std::string_view text);

}  // namespace crowdflow
