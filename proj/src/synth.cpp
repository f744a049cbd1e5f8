#include "crowdflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace crowdflow {

namespace {

constexpr double kBackgroundLevel = 0.3;
constexpr double kTextureAmplitude = 0.1;
constexpr double kDotAmplitude = 0.5;
constexpr double kMinTurn = 0.4;  // rad/frame
constexpr double kMaxTurn = 0.8;

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Value noise: random lattice values, smoothstep-interpolated, two octaves.
GrayFrame value_noise_background(int width, int height, std::mt19937_64& rng) {
  GrayFrame out(width, height, static_cast<float>(kBackgroundLevel));
  std::vector<double> acc(out.size(), 0.0);
  const int cells[] = {16, 5};
  const double weights[] = {0.6, 0.4};
  for (int octave = 0; octave < 2; ++octave) {
    const int cell = cells[octave];
    const int gw = width / cell + 2;
    const int gh = height / cell + 2;
    std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
    for (double& v : lattice) v = unit_uniform(rng());
    for (int y = 0; y < height; ++y) {
      const int gy = y / cell;
      const double ty = smoothstep(static_cast<double>(y % cell) / cell);
      for (int x = 0; x < width; ++x) {
        const int gx = x / cell;
        const double tx = smoothstep(static_cast<double>(x % cell) / cell);
        auto at = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * gw + i]; };
        const double top = at(gx, gy) * (1 - tx) + at(gx + 1, gy) * tx;
        const double bottom = at(gx, gy + 1) * (1 - tx) + at(gx + 1, gy + 1) * tx;
        acc[static_cast<std::size_t>(y) * width + x] += weights[octave] * (top * (1 - ty) + bottom * ty);
      }
    }
  }
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<float>(kBackgroundLevel + kTextureAmplitude * acc[i]);
  }
  return out;
}

double reflect(double v, double hi, double& direction_sign) {
  // Elastic reflection into [0, hi].
  direction_sign = 1.0;
  while (v < 0.0 || v > hi) {
    if (v < 0.0) v = -v;
    if (v > hi) v = 2.0 * hi - v;
    direction_sign = -direction_sign;
  }
  return v;
}

}  // namespace

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

void SynthSpec::validate() const {
  if (width < 16) throw ValidationError("synth.width", "must be >= 16");
  if (height < 16) throw ValidationError("synth.height", "must be >= 16");
  if (frames == 0) throw ValidationError("synth.frames", "must be >= 1");
  if (fps.num <= 0 || fps.den <= 0) throw ValidationError("synth.fps", "must be positive");
  if (n_people < 0) throw ValidationError("synth.n_people", "must be >= 0");
  if (!(base_speed >= 0.0)) throw ValidationError("synth.base_speed", "must be >= 0");
  if (!(dot_sigma > 0.0)) throw ValidationError("synth.dot_sigma", "must be > 0");
  for (std::size_t i = 0; i < bursts.size(); ++i) {
    const Burst& b = bursts[i];
    if (b.start > b.end || b.end >= frames) throw ValidationError("synth.bursts", "burst outside [0, frames)");
    if (i > 0 && b.start <= bursts[i - 1].end) throw ValidationError("synth.bursts", "bursts must be sorted and disjoint");
    if (!(b.multiplier > 1.0)) throw ValidationError("synth.bursts", "speed multiplier must be > 1");
  }
}

EventLabels SynthSpec::labels() const {
  EventLabels labels;
  for (const Burst& b : bursts) labels.windows.push_back({b.start, b.end});
  return labels;
}

SynthVideo::SynthVideo(SynthSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::mt19937_64 rng(spec_.seed);
  background_ = value_noise_background(spec_.width, spec_.height, rng);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < spec_.n_people; ++i) {
    Person p{};
    p.x = unit_uniform(rng()) * (spec_.width - 1);
    p.y = unit_uniform(rng()) * (spec_.height - 1);
    p.heading = unit_uniform(rng()) * two_pi;
    p.turn = kMinTurn + unit_uniform(rng()) * (kMaxTurn - kMinTurn);
    if (rng() & 1) p.turn = -p.turn;
    initial_.push_back(p);
  }
  rewind();
}

SourceInfo SynthVideo::info() const { return {SourceKind::synthetic, spec_.fps, spec_.frames}; }

void SynthVideo::rewind() {
  people_ = initial_;
  cursor_ = 0;
  shown_.clear();
}

void SynthVideo::step(std::size_t frame) {
  double multiplier = 1.0;
  for (const Burst& b : spec_.bursts) {
    if (frame >= b.start && frame <= b.end) multiplier = b.multiplier;
  }
  const double speed = spec_.base_speed * multiplier;
  for (Person& p : people_) {
    p.heading += p.turn / multiplier;
    double sx = 1.0;
    double sy = 1.0;
    p.x = reflect(p.x + speed * std::cos(p.heading), spec_.width - 1, sx);
    p.y = reflect(p.y + speed * std::sin(p.heading), spec_.height - 1, sy);
    if (sx < 0.0) p.heading = std::numbers::pi - p.heading;
    if (sy < 0.0) p.heading = -p.heading;
  }
}

GrayFrame SynthVideo::render() const {
  GrayFrame frame = background_;
  const double s = spec_.dot_sigma;
  const int r = static_cast<int>(std::ceil(4.0 * s));
  const double inv2s2 = 1.0 / (2.0 * s * s);
  for (const Person& p : people_) {
    const int cx = static_cast<int>(std::lround(p.x));
    const int cy = static_cast<int>(std::lround(p.y));
    for (int y = std::max(cy - r, 0); y <= std::min(cy + r, spec_.height - 1); ++y) {
      for (int x = std::max(cx - r, 0); x <= std::min(cx + r, spec_.width - 1); ++x) {
        const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
        frame(x, y) += static_cast<float>(kDotAmplitude * std::exp(-d2 * inv2s2));
      }
    }
  }
  for (float& v : frame.pixels()) v = std::clamp(v, 0.f, 1.f);
  return frame;
}

std::optional<GrayFrame> SynthVideo::next() {
  if (cursor_ >= spec_.frames) return std::nullopt;
  if (cursor_ > 0) step(cursor_);
  ++cursor_;
  shown_.clear();
  for (const Person& p : people_) shown_.push_back({p.x, p.y});
  return render();
}

SynthOutput generate(const SynthSpec& spec) {
  SynthVideo video(spec);
  SynthOutput out;
  out.labels = spec.labels();
  while (auto frame = video.next()) {
    out.frames.push_back(std::move(*frame));
    out.annotations.push_back(video.annotations());
  }
  return out;
}

void CorpusSpec::validate() const {
  base.validate();
  if (videos == 0) throw ValidationError("synth.videos", "must be >= 1");
  if (min_bursts > max_bursts) throw ValidationError("synth.min_bursts", "must not exceed synth.max_bursts");
  if (!(burst_fraction >= 0.0 && burst_fraction < 0.5)) throw ValidationError("synth.burst_fraction", "must be in [0, 0.5)");
  if (!(min_multiplier > 1.0)) throw ValidationError("synth.min_multiplier", "must be > 1");
  if (!(max_multiplier >= min_multiplier)) throw ValidationError("synth.max_multiplier", "must be >= synth.min_multiplier");
  constexpr std::size_t kMinBurst = 4;
  constexpr std::size_t kMinQuiet = 12;
  if (max_bursts * kMinBurst + (max_bursts + 1) * kMinQuiet > base.frames && max_bursts > 0) {
    throw ValidationError("synth.frames", "too few frames for the requested burst count");
  }
}

std::vector<SynthSpec> corpus_specs(const CorpusSpec& corpus) {
  corpus.validate();
  constexpr std::size_t kMinBurst = 4;
  constexpr std::size_t kMinQuiet = 12;
  std::vector<SynthSpec> specs;
  std::mt19937_64 rng(corpus.seed);
  const std::size_t frames = corpus.base.frames;
  for (std::size_t v = 0; v < corpus.videos; ++v) {
    SynthSpec spec = corpus.base;
    spec.seed = rng();
    spec.bursts.clear();
    const std::size_t span = corpus.max_bursts - corpus.min_bursts + 1;
    const std::size_t n = corpus.min_bursts + static_cast<std::size_t>(unit_uniform(rng()) * span);
    if (n > 0) {
      // Burst lengths share burst_fraction of the video; quiet gaps share the rest.
      const auto burst_total = std::max<std::size_t>(
          n * kMinBurst, static_cast<std::size_t>(std::lround(corpus.burst_fraction * frames)));
      std::vector<double> bw(n);
      for (double& w : bw) w = 0.5 + unit_uniform(rng());
      std::vector<double> gw(n + 1);
      for (double& w : gw) w = 0.5 + unit_uniform(rng());
      std::vector<double> mult(n);
      for (double& m : mult) m = corpus.min_multiplier + unit_uniform(rng()) * (corpus.max_multiplier - corpus.min_multiplier);

      auto split = [](std::size_t total, std::size_t floor_each, const std::vector<double>& weights) {
        const std::size_t spare = total - floor_each * weights.size();
        double sum = 0.0;
        for (double w : weights) sum += w;
        std::vector<std::size_t> parts;
        std::size_t used = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
          std::size_t extra = static_cast<std::size_t>(std::floor(spare * weights[i] / sum));
          if (i + 1 == weights.size()) extra = spare - used;
          used += extra;
          parts.push_back(floor_each + extra);
        }
        return parts;
      };
      const auto lengths = split(burst_total, kMinBurst, bw);
      const auto gaps = split(frames - burst_total, kMinQuiet, gw);
      std::size_t at = gaps[0];
      for (std::size_t i = 0; i < n; ++i) {
        spec.bursts.push_back({at, at + lengths[i] - 1, mult[i]});
        at += lengths[i] + gaps[i + 1];
      }
    }
    spec.validate();
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace crowdflow
