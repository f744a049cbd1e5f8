#include "crowdflow/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

namespace crowdflow {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::event: return "event";
    case Strategy::uniform: return "uniform";
    case Strategy::random: return "random";
    case Strategy::stratified: return "stratified";
    case Strategy::keyframe: return "keyframe";
    case Strategy::adaptive: return "adaptive";
  }
  return "event";
}

Strategy parse_strategy(std::string_view text) {
  for (Strategy s : {Strategy::event, Strategy::uniform, Strategy::random, Strategy::stratified,
                     Strategy::keyframe, Strategy::adaptive}) {
    if (to_string(s) == text) return s;
  }
  throw ArgumentError("unknown sampling strategy '" + std::string(text) + "'");
}

std::string_view to_string(ReferencePolicy p) {
  return p == ReferencePolicy::anchored ? "anchored" : "frame_to_frame";
}

ReferencePolicy parse_reference_policy(std::string_view text) {
  if (text == "anchored") return ReferencePolicy::anchored;
  if (text == "frame_to_frame") return ReferencePolicy::frame_to_frame;
  throw ArgumentError("unknown reference policy '" + std::string(text) + "'");
}

void SamplerConfig::validate() const {
  if (!(motion_threshold >= 0.0)) throw ArgumentError("sampler.motion_threshold must be >= 0");
  if (calibration_percentile && !(*calibration_percentile > 0.0 && *calibration_percentile <= 100.0)) {
    throw ArgumentError("sampler.calibration_percentile must be in (0,100]");
  }
  if (params.stride == 0) throw ArgumentError("sampler.stride must be >= 1");
  if (params.segments == 0) throw ArgumentError("sampler.segments must be >= 1");
  if (params.window == 0) throw ArgumentError("sampler.window must be >= 1");
  if (!(params.sensitivity > 0.0)) throw ArgumentError("sampler.sensitivity must be > 0");
}

void SamplingRun::validate() const {
  for (std::size_t i = 0; i < saved_indices.size(); ++i) {
    if (saved_indices[i] >= total_frames) throw ArgumentError("saved index out of range");
    if (i > 0 && saved_indices[i] <= saved_indices[i - 1]) {
      throw ArgumentError("saved indices must be strictly increasing");
    }
  }
  if (!per_frame_magnitude.empty() && per_frame_magnitude.size() != total_frames) {
    throw ArgumentError("per-frame magnitudes must cover every frame");
  }
}

EventGate::EventGate(double threshold, std::size_t min_gap) : threshold_(threshold), min_gap_(min_gap) {
  if (!(threshold >= 0.0)) throw ArgumentError("motion threshold must be >= 0");
}

bool EventGate::offer(std::size_t index, std::optional<double> magnitude) {
  if (!last_saved_) {
    last_saved_ = index;
    return true;
  }
  if (!magnitude || !(*magnitude >= threshold_)) return false;
  if (index - *last_saved_ < min_gap_) return false;
  last_saved_ = index;
  return true;
}

namespace {

std::size_t count_frames(FrameSource& source) {
  if (auto n = source.info().frame_count) return *n;
  source.rewind();
  std::size_t n = 0;
  while (source.next()) ++n;
  source.rewind();
  return n;
}

}  // namespace

SamplingRun event_sample(FrameSource& source, const SamplerConfig& config, const FlowParams& flow_params) {
  config.validate();
  flow_params.validate();
  double threshold = config.motion_threshold;
  if (config.calibration_percentile) {
    threshold = calibrate_threshold(source, flow_params, *config.calibration_percentile);
  }
  source.rewind();
  auto first = source.next();
  if (!first) throw ArgumentError("event sampling needs at least one frame");

  // One cached pyramid for the reference, one for the last probed frame.
  auto reference = std::make_unique<FlowPyramid>(*first, flow_params);
  std::unique_ptr<FlowPyramid> last;
  std::size_t reference_index = 0;
  std::size_t last_index = 0;

  return event_select(threshold, config.min_gap, config.reference,
                      [&](std::size_t ref, std::size_t i) -> std::optional<double> {
                        if (ref != reference_index) {
                          reference = std::move(last);
                          reference_index = last_index;
                        }
                        auto frame = source.next();
                        if (!frame) return std::nullopt;
                        last = std::make_unique<FlowPyramid>(*frame, flow_params);
                        last_index = i;
                        return mean_motion(farneback_flow(*reference, *last, flow_params)).mean_magnitude;
                      });
}

SamplingRun uniform_sample(std::size_t total, std::size_t stride) {
  if (stride == 0) throw ArgumentError("uniform sampling stride must be >= 1");
  SamplingRun run;
  run.total_frames = total;
  for (std::size_t i = 0; i < total; i += stride) run.saved_indices.push_back(i);
  return run;
}

SamplingRun random_sample(std::size_t total, std::size_t k, std::uint64_t seed) {
  if (k > total) throw ArgumentError("random sampling: k exceeds the number of frames");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pool(total);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates; bounded draws by rejection.
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint64_t range = total - i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t r = 0;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(pool[i], pool[i + r % range]);
  }
  SamplingRun run;
  run.total_frames = total;
  run.saved_indices.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(run.saved_indices.begin(), run.saved_indices.end());
  return run;
}

SamplingRun stratified_sample(std::size_t total, std::size_t segments, std::size_t per_segment) {
  if (segments == 0) throw ArgumentError("stratified sampling needs at least one segment");
  if (segments > total) throw ArgumentError("stratified sampling: more segments than frames");
  SamplingRun run;
  run.total_frames = total;
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t begin = s * total / segments;
    const std::size_t end = (s + 1) * total / segments;
    const std::size_t len = end - begin;
    const std::size_t take = std::min(per_segment, len);
    for (std::size_t j = 0; j < take; ++j) run.saved_indices.push_back(begin + j * len / take);
  }
  return run;
}

std::vector<double> frame_difference_scores(FrameSource& source) {
  source.rewind();
  std::vector<double> scores;
  std::optional<GrayFrame> prev;
  while (auto frame = source.next()) {
    if (!prev) {
      scores.push_back(0.0);
    } else {
      if (!prev->same_shape(*frame)) throw ArgumentError("frame dimensions change mid-stream");
      double sum = 0.0;
      auto a = prev->pixels();
      auto b = frame->pixels();
      for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(static_cast<double>(a[i]) - b[i]);
      scores.push_back(a.empty() ? 0.0 : sum / static_cast<double>(a.size()));
    }
    prev = std::move(frame);
  }
  return scores;
}

SamplingRun keyframe_select(std::span<const double> scores, std::size_t k) {
  if (k == 0) throw ArgumentError("keyframe sampling: k must be >= 1");
  if (scores.empty()) throw ArgumentError("keyframe sampling needs at least one frame");
  const std::size_t n = scores.size();
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || scores[i] >= scores[i - 1];
    const bool right_ok = i + 1 == n || scores[i] >= scores[i + 1];
    (left_ok && right_ok ? maxima : rest).push_back(i);
  }
  auto by_score = [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  std::stable_sort(maxima.begin(), maxima.end(), by_score);
  std::stable_sort(rest.begin(), rest.end(), by_score);
  maxima.insert(maxima.end(), rest.begin(), rest.end());
  maxima.resize(std::min(k, n));
  std::sort(maxima.begin(), maxima.end());
  SamplingRun run;
  run.total_frames = n;
  run.saved_indices = std::move(maxima);
  return run;
}

SamplingRun keyframe_sample(FrameSource& source, std::size_t k) {
  const auto scores = frame_difference_scores(source);
  return keyframe_select(scores, k);
}

SamplingRun adaptive_select(std::span<const std::optional<double>> magnitudes, std::size_t window,
                            double sensitivity) {
  if (window == 0) throw ArgumentError("adaptive sampling: window must be >= 1");
  if (!(sensitivity > 0.0)) throw ArgumentError("adaptive sampling: sensitivity must be > 0");
  if (magnitudes.empty()) throw ArgumentError("adaptive sampling needs at least one frame");
  constexpr double kSigmaFloor = 1e-6;
  SamplingRun run;
  run.total_frames = magnitudes.size();
  run.per_frame_magnitude.assign(magnitudes.begin(), magnitudes.end());
  run.saved_indices.push_back(0);
  std::vector<double> history;
  for (std::size_t i = 1; i < magnitudes.size(); ++i) {
    if (!magnitudes[i]) throw ArgumentError("adaptive sampling: missing magnitude");
    const double m = *magnitudes[i];
    if (history.size() >= window) {
      const auto recent = std::span<const double>(history).last(window);
      double mean = 0.0;
      for (double v : recent) mean += v;
      mean /= static_cast<double>(window);
      double var = 0.0;
      for (double v : recent) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(window));
      if (m > mean + sensitivity * (sd + kSigmaFloor)) run.saved_indices.push_back(i);
    }
    history.push_back(m);
  }
  return run;
}

std::vector<std::optional<double>> frame_to_frame_magnitudes(FrameSource& source, const FlowParams& flow_params) {
  flow_params.validate();
  source.rewind();
  std::vector<std::optional<double>> out;
  std::unique_ptr<FlowPyramid> prev;
  while (auto frame = source.next()) {
    auto cur = std::make_unique<FlowPyramid>(*frame, flow_params);
    if (!prev) {
      out.push_back(std::nullopt);
    } else {
      out.push_back(mean_motion(farneback_flow(*prev, *cur, flow_params)).mean_magnitude);
    }
    prev = std::move(cur);
  }
  return out;
}

SamplingRun adaptive_sample(FrameSource& source, std::size_t window, double sensitivity,
                            const FlowParams& flow_params) {
  const auto mags = frame_to_frame_magnitudes(source, flow_params);
  return adaptive_select(mags, window, sensitivity);
}

double nearest_rank_percentile(std::span<const double> values, double percentile) {
  if (values.empty()) throw ArgumentError("percentile of an empty set");
  if (!(percentile > 0.0 && percentile <= 100.0)) throw ArgumentError("percentile must be in (0,100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(sorted.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double calibrate_threshold(std::span<const std::optional<double>> magnitudes, double percentile) {
  std::vector<double> values;
  for (const auto& m : magnitudes) {
    if (m) values.push_back(*m);
  }
  if (values.empty()) throw ArgumentError("threshold calibration needs at least two frames");
  return nearest_rank_percentile(values, percentile);
}

double calibrate_threshold(FrameSource& source, const FlowParams& flow_params, double percentile) {
  if (!(percentile > 0.0 && percentile <= 100.0)) throw ArgumentError("percentile must be in (0,100]");
  const auto mags = frame_to_frame_magnitudes(source, flow_params);
  if (mags.size() < 2) throw ArgumentError("threshold calibration needs at least two frames");
  return calibrate_threshold(mags, percentile);
}

SamplingRun run_sampler(FrameSource& source, const SamplerConfig& config, const FlowParams& flow_params) {
  config.validate();
  source.rewind();
  const auto& p = config.params;
  switch (config.strategy) {
    case Strategy::event:
      return event_sample(source, config, flow_params);
    case Strategy::uniform:
      return uniform_sample(count_frames(source), p.stride);
    case Strategy::random:
      return random_sample(count_frames(source), p.count, p.seed);
    case Strategy::stratified:
      return stratified_sample(count_frames(source), p.segments, p.per_segment);
    case Strategy::keyframe:
      return keyframe_sample(source, p.count);
    case Strategy::adaptive:
      return adaptive_sample(source, p.window, p.sensitivity, flow_params);
  }
  throw ArgumentError("unhandled strategy");
}

// ---------------------------------------------------------------------------
// CSV

std::string run_to_csv(const SamplingRun& run) {
  std::string out = "frame_index,mean_magnitude,saved\n";
  std::size_t next_saved = 0;
  char buf[64];
  for (std::size_t i = 0; i < run.total_frames; ++i) {
    const bool saved = next_saved < run.saved_indices.size() && run.saved_indices[next_saved] == i;
    if (saved) ++next_saved;
    out += std::to_string(i);
    out += ',';
    if (run.has_magnitudes() && run.per_frame_magnitude[i]) {
      auto res = std::to_chars(buf, buf + sizeof buf, *run.per_frame_magnitude[i]);
      out.append(buf, res.ptr);
    }
    out += saved ? ",1\n" : ",0\n";
  }
  return out;
}

SamplingRun run_from_csv(std::string_view text) {
  SamplingRun run;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "frame_index,mean_magnitude,saved") {
    throw DecodeError("run csv: missing header", 0);
  }
  bool any_magnitude = false;
  std::vector<std::optional<double>> mags;
  std::size_t offset = line.size() + 1;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw DecodeError("run csv: expected three fields", offset);
    std::size_t index = 0;
    auto r = std::from_chars(line.data(), line.data() + c1, index);
    if (r.ec != std::errc{} || r.ptr != line.data() + c1 || index != expected) {
      throw DecodeError("run csv: frame indices must be 0,1,2,...", offset);
    }
    std::optional<double> mag;
    if (c2 > c1 + 1) {
      double v = 0.0;
      auto rv = std::from_chars(line.data() + c1 + 1, line.data() + c2, v);
      if (rv.ec != std::errc{} || rv.ptr != line.data() + c2) throw DecodeError("run csv: bad magnitude", offset);
      mag = v;
      any_magnitude = true;
    }
    const std::string_view flag(line.data() + c2 + 1, line.size() - c2 - 1);
    if (flag == "1") {
      run.saved_indices.push_back(index);
    } else if (flag != "0") {
      throw DecodeError("run csv: saved must be 0 or 1", offset);
    }
    mags.push_back(mag);
    ++expected;
    offset += line.size() + 1;
  }
  run.total_frames = expected;
  if (any_magnitude) run.per_frame_magnitude = std::move(mags);
  return run;
}

}  // namespace crowdflow
