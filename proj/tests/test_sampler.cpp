#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "crowdflow/errors.hpp"
#include "crowdflow/sampler.hpp"
#include "crowdflow/synth.hpp"
#include "support.hpp"

using namespace crowdflow;

namespace {

// Probe over precomputed magnitudes that ignores the reference.
auto table_probe(std::vector<double> mags) {
  return [mags = std::move(mags)](std::size_t, std::size_t i) -> std::optional<double> {
    if (i >= mags.size()) return std::nullopt;
    return mags[i];
  };
}

// 1-D positions: the magnitude between two frames is their distance, which
// makes the anchored reference observable.
auto position_probe(std::vector<double> pos) {
  return [pos = std::move(pos)](std::size_t ref, std::size_t i) -> std::optional<double> {
    if (i >= pos.size()) return std::nullopt;
    return std::abs(pos[i] - pos[ref]);
  };
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

void check_well_formed(const SamplingRun& run) {
  for (std::size_t i = 0; i < run.saved_indices.size(); ++i) {
    CHECK(run.saved_indices[i] < run.total_frames);
    if (i > 0) CHECK(run.saved_indices[i] > run.saved_indices[i - 1]);
  }
  CHECK_NOTHROW(run.validate());
}

SynthSpec three_burst_video() {
  SynthSpec s;
  s.width = 128;
  s.height = 128;
  s.n_people = 16;
  s.seed = 77;
  s.bursts = {{200, 259, 8.0}, {600, 659, 9.0}, {950, 1009, 10.0}};
  return s;
}

}  // namespace

TEST_CASE("event gate on precomputed magnitudes") {
  const auto run = event_select(1.0, 0, ReferencePolicy::anchored, table_probe({0, 0.1, 2.0, 0.2}));
  CHECK(run.total_frames == 4);
  CHECK(run.saved_indices == std::vector<std::size_t>{0, 2});
  CHECK_FALSE(run.per_frame_magnitude[0].has_value());
  CHECK(*run.per_frame_magnitude[2] == 2.0);
}

TEST_CASE("event gate extremes") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> mags(1 + rng() % 50);
    for (double& m : mags) m = u(rng);
    for (auto policy : {ReferencePolicy::anchored, ReferencePolicy::frame_to_frame}) {
      CHECK(event_select(0.0, 0, policy, table_probe(mags)).saved_indices == all_indices(mags.size()));
      const auto none = event_select(std::numeric_limits<double>::infinity(), 0, policy, table_probe(mags));
      CHECK(none.saved_indices == std::vector<std::size_t>{0});
    }
  }
}

TEST_CASE("anchored reference moves only on save") {
  // Slow drift of 0.4 per frame: anchored saves every third frame once the
  // accumulated displacement reaches 1; frame-to-frame never saves.
  std::vector<double> pos;
  for (int i = 0; i < 10; ++i) pos.push_back(0.4 * i);
  const auto anchored = event_select(1.0, 0, ReferencePolicy::anchored, position_probe(pos));
  CHECK(anchored.saved_indices == std::vector<std::size_t>{0, 3, 6, 9});
  const auto f2f = event_select(1.0, 0, ReferencePolicy::frame_to_frame, position_probe(pos));
  CHECK(f2f.saved_indices == std::vector<std::size_t>{0});
}

TEST_CASE("anchored reference replays by hand on random walks") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> step(0.0, 0.7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pos{0.0};
    for (int i = 1; i < 80; ++i) pos.push_back(pos.back() + step(rng));
    const std::size_t gap = rng() % 4;
    std::vector<std::size_t> expect{0};
    std::size_t ref = 0;
    for (std::size_t i = 1; i < pos.size(); ++i) {
      if (std::abs(pos[i] - pos[ref]) >= 1.5 && i - expect.back() >= gap) {
        expect.push_back(i);
        ref = i;
      }
    }
    CHECK(event_select(1.5, gap, ReferencePolicy::anchored, position_probe(pos)).saved_indices == expect);
  }
}

TEST_CASE("min_gap spaces saved frames") {
  std::vector<double> mags(40, 5.0);
  for (std::size_t gap : {1u, 2u, 7u}) {
    const auto run = event_select(1.0, gap, ReferencePolicy::frame_to_frame, table_probe(mags));
    for (std::size_t i = 1; i < run.saved_indices.size(); ++i) {
      CHECK(run.saved_indices[i] - run.saved_indices[i - 1] == gap);
    }
  }
}

TEST_CASE("raising the threshold never adds saves in frame-to-frame mode") {
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> e(1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pos{0.0};
    for (int i = 1; i < 100; ++i) pos.push_back(pos.back() + e(rng) * (rng() % 2 ? 1 : -1));
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (double t = 0.0; t <= 4.0; t += 0.25) {
      const auto n =
          event_select(t, 0, ReferencePolicy::frame_to_frame, position_probe(pos)).saved_indices.size();
      CHECK(n <= previous);
      previous = n;
    }
  }
}

TEST_CASE("event_sample on a motionless video keeps only frame 0") {
  SynthSpec s;
  s.width = 48;
  s.height = 48;
  s.frames = 12;
  s.base_speed = 0.0;
  s.n_people = 5;
  SynthVideo video(s);
  SamplerConfig cfg;
  cfg.motion_threshold = 0.01;
  const auto run = event_sample(video, cfg, FlowParams{});
  CHECK(run.total_frames == 12);
  CHECK(run.saved_indices == std::vector<std::size_t>{0});
  CHECK(run.has_magnitudes());
}

TEST_CASE("event_sample rejects an empty source") {
  MemorySource empty({});
  CHECK_THROWS_AS(event_sample(empty, SamplerConfig{}, FlowParams{}), ArgumentError);
}

TEST_CASE("calibrated event sampling on a three-burst video") {
  const SynthSpec spec = three_burst_video();
  SynthVideo video(spec);
  SamplerConfig cfg;
  cfg.calibration_percentile = 85.0;
  const auto run = event_sample(video, cfg, FlowParams{});
  CHECK(run.total_frames == 1177);
  CHECK(run.saved_indices.size() <= static_cast<std::size_t>(0.2 * 1177));
  for (const Burst& b : spec.bursts) {
    const bool hit = std::any_of(run.saved_indices.begin(), run.saved_indices.end(),
                                 [&](std::size_t i) { return i >= b.start && i <= b.end; });
    CHECK(hit);
  }
  check_well_formed(run);
}

TEST_CASE("calibrated threshold separates the motion regimes") {
  const SynthSpec spec = three_burst_video();
  SynthVideo video(spec);
  const auto mags = frame_to_frame_magnitudes(video, FlowParams{});
  double quiet = 0.0;
  double busy = 0.0;
  int nq = 0;
  int nb = 0;
  for (std::size_t i = 1; i < mags.size(); ++i) {
    const bool in_burst = std::any_of(spec.bursts.begin(), spec.bursts.end(),
                                      [&](const Burst& b) { return i >= b.start && i <= b.end; });
    (in_burst ? busy : quiet) += *mags[i];
    ++(in_burst ? nb : nq);
  }
  quiet /= nq;
  busy /= nb;
  const double t = calibrate_threshold(mags, 85.0);
  CHECK(t > quiet);
  CHECK(t < busy);
}

TEST_CASE("nearest-rank percentile") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(nearest_rank_percentile(v, 50) == 2);
  CHECK(nearest_rank_percentile(v, 100) == 4);
  CHECK(nearest_rank_percentile(v, 1) == 1);
  CHECK(nearest_rank_percentile(v, 75) == 3);
  CHECK(nearest_rank_percentile(v, 76) == 4);
  CHECK_THROWS_AS(nearest_rank_percentile(v, 0), ArgumentError);
  CHECK_THROWS_AS(nearest_rank_percentile({}, 50), ArgumentError);

  MemorySource one({GrayFrame(16, 16, 0.5f)});
  CHECK_THROWS_AS(calibrate_threshold(one, FlowParams{}, 85), ArgumentError);
}

TEST_CASE("uniform sampling") {
  CHECK(uniform_sample(10, 5).saved_indices == std::vector<std::size_t>{0, 5});
  CHECK(uniform_sample(7, 1).saved_indices == all_indices(7));
  CHECK(uniform_sample(1177, 30).saved_indices.size() == 40);
  CHECK_THROWS_AS(uniform_sample(10, 0), ArgumentError);
  for (std::size_t total = 0; total <= 200; ++total) {
    for (std::size_t stride = 1; stride <= 12; ++stride) {
      const auto run = uniform_sample(total, stride);
      CHECK(run.saved_indices.size() == (total + stride - 1) / stride);
      for (std::size_t j = 0; j < run.saved_indices.size(); ++j) CHECK(run.saved_indices[j] == j * stride);
    }
  }
}

TEST_CASE("random sampling") {
  CHECK(random_sample(9, 9, 3).saved_indices == all_indices(9));
  CHECK(random_sample(9, 0, 3).saved_indices.empty());
  CHECK_THROWS_AS(random_sample(3, 4, 0), ArgumentError);
  CHECK(random_sample(1177, 40, 11) == random_sample(1177, 40, 11));
  CHECK(random_sample(1177, 40, 11).saved_indices != random_sample(1177, 40, 12).saved_indices);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t total = 1 + rng() % 300;
    const std::size_t k = rng() % (total + 1);
    const auto run = random_sample(total, k, rng());
    CHECK(run.saved_indices.size() == k);
    check_well_formed(run);
  }
}

TEST_CASE("stratified sampling") {
  CHECK(stratified_sample(10, 2, 1).saved_indices == std::vector<std::size_t>{0, 5});
  CHECK(stratified_sample(1177, 15, 1).saved_indices.size() == 15);
  CHECK(stratified_sample(12, 1, 4).saved_indices == uniform_sample(12, 3).saved_indices);
  CHECK_THROWS_AS(stratified_sample(3, 4, 1), ArgumentError);
  CHECK_THROWS_AS(stratified_sample(3, 0, 1), ArgumentError);
  for (std::size_t total = 1; total <= 200; ++total) {
    for (std::size_t segments = 1; segments <= std::min<std::size_t>(total, 9); ++segments) {
      for (std::size_t per = 1; per <= 3; ++per) {
        std::vector<std::size_t> expect;
        for (std::size_t s = 0; s < segments; ++s) {
          const std::size_t lo = s * total / segments;
          const std::size_t len = (s + 1) * total / segments - lo;
          const std::size_t take = std::min(per, len);
          for (std::size_t j = 0; j < take; ++j) expect.push_back(lo + j * len / take);
        }
        CHECK(stratified_sample(total, segments, per).saved_indices == expect);
      }
    }
  }
}

TEST_CASE("keyframe selection") {
  SUBCASE("static video falls back to the lowest indices") {
    std::vector<GrayFrame> frames(8, GrayFrame(8, 8, 0.3f));
    MemorySource src(frames);
    CHECK(keyframe_sample(src, 3).saved_indices == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("one abrupt cut") {
    std::vector<GrayFrame> frames(10, GrayFrame(8, 8, 0.2f));
    for (std::size_t i = 6; i < 10; ++i) frames[i] = GrayFrame(8, 8, 0.9f);
    MemorySource src(frames);
    CHECK(keyframe_sample(src, 1).saved_indices == std::vector<std::size_t>{6});
  }
  SUBCASE("maxima first, ties to the lower index") {
    const std::vector<double> s{0, 3, 1, 3, 2, 5, 4};
    CHECK(keyframe_select(s, 2).saved_indices == std::vector<std::size_t>{1, 5});
    CHECK(keyframe_select(s, 3).saved_indices == std::vector<std::size_t>{1, 3, 5});
    CHECK(keyframe_select(s, 4).saved_indices == std::vector<std::size_t>{1, 3, 5, 6});
  }
  SUBCASE("a burst contains a selection") {
    SynthSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.frames = 300;
    spec.n_people = 12;
    spec.bursts = {{40, 60, 5.0}, {120, 150, 9.0}, {220, 240, 6.0}};
    SynthVideo video(spec);
    const auto scores = frame_difference_scores(video);
    // Brute-force: the global top score must lie inside the strongest burst.
    const auto top = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    CHECK(top >= 120);
    CHECK(top <= 150);
    const auto run = keyframe_sample(video, 10);
    CHECK(std::any_of(run.saved_indices.begin(), run.saved_indices.end(),
                      [](std::size_t i) { return i >= 120 && i <= 150; }));
  }
  CHECK_THROWS_AS(keyframe_select(std::vector<double>{1.0}, 0), ArgumentError);
}

TEST_CASE("adaptive selection") {
  auto with_gap = [](std::vector<double> v) {
    std::vector<std::optional<double>> out{std::nullopt};
    for (double x : v) out.push_back(x);
    return out;
  };
  SUBCASE("constant motion saves nothing after warm-up") {
    const auto mags = with_gap(std::vector<double>(60, 0.8));
    CHECK(adaptive_select(mags, 10, 2.0).saved_indices == std::vector<std::size_t>{0});
  }
  SUBCASE("a single spike is saved") {
    std::vector<double> v{0.50, 0.52, 0.48, 0.51, 0.49, 0.50, 0.53, 0.47, 0.50, 0.51,
                          0.49, 0.50, 2.50, 0.50, 0.48, 0.52, 0.50, 0.49, 0.51, 0.50};
    const auto mags = with_gap(v);
    // Replay: window 5, sensitivity 3, population stddev.
    std::vector<std::size_t> expect{0};
    for (std::size_t i = 6; i < mags.size(); ++i) {
      double mean = 0.0;
      for (std::size_t j = i - 5; j < i; ++j) mean += *mags[j];
      mean /= 5;
      double var = 0.0;
      for (std::size_t j = i - 5; j < i; ++j) var += (*mags[j] - mean) * (*mags[j] - mean);
      if (*mags[i] > mean + 3.0 * (std::sqrt(var / 5) + 1e-6)) expect.push_back(i);
    }
    CHECK(expect == std::vector<std::size_t>{0, 13});
    CHECK(adaptive_select(mags, 5, 3.0).saved_indices == expect);
  }
  SUBCASE("small sensitivity saves whatever beats the running mean") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> v(100);
    for (double& x : v) x = u(rng);
    const auto mags = with_gap(v);
    const auto run = adaptive_select(mags, 4, 1e-9);
    for (std::size_t i = 5; i < mags.size(); ++i) {
      double mean = 0.0;
      for (std::size_t j = i - 4; j < i; ++j) mean += *mags[j];
      mean /= 4;
      const bool saved = std::binary_search(run.saved_indices.begin(), run.saved_indices.end(), i);
      if (*mags[i] > mean + 1e-6) CHECK(saved);
      if (*mags[i] < mean) CHECK_FALSE(saved);
    }
  }
  CHECK_THROWS_AS(adaptive_select(with_gap({1, 2}), 0, 1.0), ArgumentError);
  CHECK_THROWS_AS(adaptive_select(with_gap({1, 2}), 1, 0.0), ArgumentError);
}

TEST_CASE("every strategy is deterministic and well formed") {
  SynthSpec spec;
  spec.width = 48;
  spec.height = 48;
  spec.frames = 90;
  spec.n_people = 8;
  spec.bursts = {{30, 40, 6.0}};
  SynthVideo video(spec);
  for (Strategy s : {Strategy::event, Strategy::uniform, Strategy::random, Strategy::stratified, Strategy::keyframe,
                     Strategy::adaptive}) {
    CAPTURE(to_string(s));
    SamplerConfig cfg;
    cfg.strategy = s;
    cfg.motion_threshold = 0.5;
    cfg.params.stride = 7;
    cfg.params.segments = 9;
    cfg.params.window = 10;
    const auto a = run_sampler(video, cfg, FlowParams{});
    const auto b = run_sampler(video, cfg, FlowParams{});
    CHECK(a == b);
    CHECK(a.total_frames == 90);
    check_well_formed(a);
    CHECK(parse_strategy(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_strategy("fancy"), ArgumentError);
  CHECK(parse_reference_policy("frame_to_frame") == ReferencePolicy::frame_to_frame);
}

TEST_CASE("run csv round trip") {
  SamplingRun run;
  run.total_frames = 5;
  run.saved_indices = {0, 3};
  run.per_frame_magnitude = {std::nullopt, 0.1, 1.0 / 3.0, 2.5e-7, 12.0};
  const std::string csv = run_to_csv(run);
  CHECK(csv.rfind("frame_index,mean_magnitude,saved\n0,,1\n1,0.1,0\n", 0) == 0);
  SamplingRun back = run_from_csv(csv);
  CHECK(back.saved_indices == run.saved_indices);
  CHECK(back.per_frame_magnitude == run.per_frame_magnitude);
  CHECK(back.total_frames == 5);

  const SamplingRun plain = uniform_sample(6, 2);
  const SamplingRun plain_back = run_from_csv(run_to_csv(plain));
  CHECK(plain_back.saved_indices == plain.saved_indices);
  CHECK_FALSE(plain_back.has_magnitudes());

  CHECK_THROWS_AS(run_from_csv("index,saved\n"), DecodeError);
  CHECK_THROWS_AS(run_from_csv("frame_index,mean_magnitude,saved\n1,,1\n"), DecodeError);
  CHECK_THROWS_AS(run_from_csv("frame_index,mean_magnitude,saved\n0,x,1\n"), DecodeError);
  CHECK_THROWS_AS(run_from_csv("frame_index,mean_magnitude,saved\n0,,2\n"), DecodeError);
}

TEST_CASE("sampler config validation") {
  SamplerConfig c;
  CHECK_NOTHROW(c.validate());
  c.motion_threshold = -1;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c = {};
  c.calibration_percentile = 0.0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c = {};
  c.params.stride = 0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);

  SamplingRun bad;
  bad.total_frames = 3;
  bad.saved_indices = {0, 0};
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad.saved_indices = {3};
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}
