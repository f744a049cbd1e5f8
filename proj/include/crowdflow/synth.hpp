#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "crowdflow/density.hpp"
#include "crowdflow/eval.hpp"
#include "crowdflow/frameio.hpp"

namespace crowdflow {

/// Frames [start, end] move at base_speed * multiplier.
struct Burst {
  std::size_t start = 0;
  std::size_t end = 0;
  double multiplier = 8.0;
  friend bool operator==(const Burst&, const Burst&) = default;
};

struct SynthSpec {
  int width = 256;
  int height = 256;
  std::size_t frames = 1177;
  FrameRate fps{24, 1};
  int n_people = 60;
  /// Quiescent speed in pixels/frame. Outside bursts people mill about on
  /// small loops (heading turns every frame) so they never drift far.
  double base_speed = 0.2;
  std::vector<Burst> bursts;
  double dot_sigma = 2.0;
  std::uint64_t seed = 1;

  /// Throws ValidationError naming the first offending field.
  void validate() const;
  EventLabels labels() const;
  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

/// Deterministic moving-crowd video. Frames are produced on demand, so a
/// 1,177-frame video never needs to be resident in memory.
class SynthVideo : public FrameSource {
 public:
  explicit SynthVideo(SynthSpec spec);

  SourceInfo info() const override;
  std::optional<GrayFrame> next() override;
  void rewind() override;

  const SynthSpec& spec() const { return spec_; }
  /// Head positions of the frame most recently returned by next().
  const HeadAnnotations& annotations() const { return shown_; }
  const GrayFrame& background() const { return background_; }

 private:
  struct Person {
    double x, y, heading, turn;
  };

  void step(std::size_t frame);
  GrayFrame render() const;

  SynthSpec spec_;
  GrayFrame background_;
  std::vector<Person> initial_;
  std::vector<Person> people_;
  HeadAnnotations shown_;
  std::size_t cursor_ = 0;
};

struct SynthOutput {
  std::vector<GrayFrame> frames;
  std::vector<HeadAnnotations> annotations;
  EventLabels labels;
};

/// Materialises every frame; convenient for short videos and tests.
SynthOutput generate(const SynthSpec& spec);

/// Recipe for a corpus of videos whose burst schedules are drawn from a seed.
struct CorpusSpec {
  std::size_t videos = 6;
  SynthSpec base;  // bursts and seed are filled in per video
  std::size_t min_bursts = 3;
  std::size_t max_bursts = 8;
  /// Share of all frames that fall inside bursts.
  double burst_fraction = 0.16;
  double min_multiplier = 8.0;
  double max_multiplier = 10.0;
  std::uint64_t seed = 2024;

  void validate() const;
  friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

std::vector<SynthSpec> corpus_specs(const CorpusSpec& corpus);

/// Uniform double in [0,1) from 64 random bits.
double unit_uniform(std::uint64_t bits);

}  // namespace crowdflow
