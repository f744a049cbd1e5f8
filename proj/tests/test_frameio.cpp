#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "crowdflow/errors.hpp"
#include "crowdflow/frameio.hpp"
#include "support.hpp"

using namespace crowdflow;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

Bytes pgm(const std::string& header, const Bytes& raster) {
  Bytes out = bytes_of(header);
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

// Reference bilinear sample with half-pixel centres, evaluated directly.
double bilinear_at(const GrayFrame& f, double fx, double fy) {
  fx = std::clamp(fx, 0.0, f.width() - 1.0);
  fy = std::clamp(fy, 0.0, f.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x1 = std::min(x0 + 1, f.width() - 1);
  const int y1 = std::min(y0 + 1, f.height() - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  return (1 - ay) * ((1 - ax) * f(x0, y0) + ax * f(x1, y0)) + ay * ((1 - ax) * f(x0, y1) + ax * f(x1, y1));
}

GrayFrame random_frame(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  GrayFrame f(w, h);
  for (float& v : f.pixels()) v = u(rng);
  return f;
}

}  // namespace

TEST_CASE("pgm decodes 8-bit rasters normalised by maxval") {
  const GrayFrame white = decode_pgm(pgm("P5\n4 2\n255\n", Bytes(8, 0xFF)));
  CHECK(white.width() == 4);
  CHECK(white.height() == 2);
  for (float v : white.pixels()) CHECK(v == 1.0f);

  const GrayFrame black = decode_pgm(pgm("P5 1 1 255\n", Bytes{0x00}));
  CHECK(black(0, 0) == 0.0f);
}

TEST_CASE("pgm header tolerates comments and arbitrary whitespace") {
  const GrayFrame f = decode_pgm(pgm("P5\n# made by hand\n2\t1\n  100\n", Bytes{50, 100}));
  CHECK(f(0, 0) == doctest::Approx(0.5));
  CHECK(f(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("pgm 16-bit samples are big-endian") {
  const GrayFrame f = decode_pgm(pgm("P5\n2 1\n65535\n", Bytes{0x01, 0x00, 0xFF, 0xFF}));
  CHECK(f(0, 0) == doctest::Approx(256.0 / 65535.0));
  CHECK(f(1, 0) == 1.0f);
}

TEST_CASE("pgm rejects malformed input with an offset") {
  SUBCASE("truncated raster") {
    const Bytes b = pgm("P5\n4 2\n255\n", Bytes(7, 0));
    CHECK_THROWS_AS(decode_pgm(b), DecodeError);
    try {
      decode_pgm(b);
    } catch (const DecodeError& e) {
      CHECK(e.offset() == b.size());
    }
  }
  SUBCASE("wrong magic") { CHECK_THROWS_AS(decode_pgm(pgm("P2\n1 1\n255\n", Bytes{0})), DecodeError); }
  SUBCASE("maxval zero") { CHECK_THROWS_AS(decode_pgm(pgm("P5\n1 1\n0\n", Bytes{0})), DecodeError); }
  SUBCASE("sample above maxval") {
    const Bytes b = pgm("P5\n2 1\n10\n", Bytes{3, 11});
    try {
      decode_pgm(b);
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(e.offset() == b.size() - 1);
    }
  }
  SUBCASE("missing maxval") { CHECK_THROWS_AS(decode_pgm(bytes_of("P5\n1 1\n")), DecodeError); }
}

TEST_CASE("pgm encode writes the canonical header") {
  GrayFrame f(3, 2, 0.0f);
  f(2, 1) = 1.0f;
  const Bytes b = encode_pgm(f);
  const std::string head(b.begin(), b.begin() + 11);
  CHECK(head == "P5\n3 2\n255\n");
  CHECK(b.size() == 11 + 6);
  CHECK(b.back() == 255);
}

TEST_CASE("pgm decode then encode reproduces the raster bytes") {
  std::mt19937 rng(7);
  for (int maxval : {1, 7, 255, 1000, 65535}) {
    for (int trial = 0; trial < 10; ++trial) {
      const int w = 1 + static_cast<int>(rng() % 9);
      const int h = 1 + static_cast<int>(rng() % 9);
      const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
                                 std::to_string(maxval) + "\n";
      Bytes raster;
      for (int i = 0; i < w * h; ++i) {
        const unsigned v = rng() % (maxval + 1);
        if (maxval > 255) raster.push_back(static_cast<std::uint8_t>(v >> 8));
        raster.push_back(static_cast<std::uint8_t>(v & 0xff));
      }
      const Bytes original = pgm(header, raster);
      CHECK(encode_pgm(decode_pgm(original), maxval) == original);
    }
  }
}

TEST_CASE("y4m header fields") {
  Bytes s = bytes_of("YUV4MPEG2 W4 H4 F24:1 Ip A1:1 C420\n");
  Y4mReader r(s);
  CHECK(r.header().width == 4);
  CHECK(r.header().height == 4);
  CHECK(r.header().rate.fps() == 24.0);
  CHECK(r.header().layout == ChromaLayout::yuv420);
  CHECK(r.header().frame_payload() == 16 + 2 * 4);
  CHECK_FALSE(r.next_rgb().has_value());
}

TEST_CASE("y4m mono frame passes luma through") {
  Bytes s = bytes_of("YUV4MPEG2 W4 H4 F25:1 Cmono\nFRAME\n");
  s.insert(s.end(), 16, 51);
  Y4mSource src(s);
  auto f = src.next();
  REQUIRE(f.has_value());
  for (float v : f->pixels()) CHECK(v == doctest::Approx(0.2));
  CHECK_FALSE(src.next().has_value());
  CHECK(src.info().rate.num == 25);
}

TEST_CASE("y4m 4:2:0 conversion matches full-range BT.601") {
  // 2x2 luma with one chroma sample.
  const std::uint8_t Y[4] = {16, 90, 180, 235};
  const std::uint8_t U = 100;
  const std::uint8_t V = 200;
  Bytes s = bytes_of("YUV4MPEG2 W2 H2 F30000:1001 C420jpeg\nFRAME\n");
  s.insert(s.end(), Y, Y + 4);
  s.push_back(U);
  s.push_back(V);
  Y4mReader r(s);
  auto rgb = r.next_rgb();
  REQUIRE(rgb.has_value());
  for (int i = 0; i < 4; ++i) {
    const double y = Y[i];
    const double cb = U - 128.0;
    const double cr = V - 128.0;
    auto c = [](double v) { return std::clamp(v, 0.0, 255.0) / 255.0; };
    const Rgb p = (*rgb)(i % 2, i / 2);
    CHECK(p.r == doctest::Approx(c(y + 1.402 * cr)).epsilon(1e-6));
    CHECK(p.g == doctest::Approx(c(y - 0.344136 * cb - 0.714136 * cr)).epsilon(1e-6));
    CHECK(p.b == doctest::Approx(c(y + 1.772 * cb)).epsilon(1e-6));
  }
}

TEST_CASE("y4m odd dimensions round chroma planes up") {
  Bytes s = bytes_of("YUV4MPEG2 W3 H3 C420\nFRAME\n");
  s.insert(s.end(), 9, 128);
  s.insert(s.end(), 8, 128);
  Y4mReader r(s);
  CHECK(r.header().chroma_size() == 4);
  auto g = r.next_gray();
  REQUIRE(g.has_value());
  for (float v : g->pixels()) CHECK(v == doctest::Approx(128.0 / 255.0).epsilon(1e-6));
}

TEST_CASE("y4m yields one frame per FRAME marker and rewinds") {
  for (int frames = 0; frames < 5; ++frames) {
    Bytes s = bytes_of("YUV4MPEG2 W2 H2 Cmono\n");
    for (int i = 0; i < frames; ++i) {
      const std::string marker = i % 2 ? "FRAME Ixyz\n" : "FRAME\n";
      s.insert(s.end(), marker.begin(), marker.end());
      s.insert(s.end(), 4, static_cast<std::uint8_t>(i));
    }
    Y4mSource src(s);
    int seen = 0;
    while (src.next()) ++seen;
    CHECK(seen == frames);
    src.rewind();
    int again = 0;
    while (src.next()) ++again;
    CHECK(again == frames);
  }
}

TEST_CASE("y4m errors report offsets") {
  SUBCASE("payload cut short") {
    Bytes s = bytes_of("YUV4MPEG2 W4 H4 Cmono\nFRAME\n");
    s.insert(s.end(), 10, 0);
    Y4mReader r(s);
    try {
      r.next_gray();
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(e.offset() == s.size());
    }
  }
  SUBCASE("missing signature") { CHECK_THROWS_AS(Y4mReader(bytes_of("YUV4MPEG W4 H4\n")), DecodeError); }
  SUBCASE("unsupported colorspace") {
    try {
      Y4mReader(bytes_of("YUV4MPEG2 W4 H4 C444\n"));
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(e.offset() == 16);  // the C tag
    }
  }
  SUBCASE("garbage where FRAME belongs") {
    Bytes s = bytes_of("YUV4MPEG2 W1 H1 Cmono\nFRAMX\n");
    s.push_back(0);
    Y4mReader r(s);
    CHECK_THROWS_AS(r.next_gray(), DecodeError);
  }
  SUBCASE("missing width") { CHECK_THROWS_AS(Y4mReader(bytes_of("YUV4MPEG2 H4\n")), DecodeError); }
}

TEST_CASE("to_grayscale uses BT.601 weights") {
  RgbFrame f(3, 1);
  f(0, 0) = {1, 1, 1};
  f(1, 0) = {1, 0, 0};
  f(2, 0) = {0, 0, 1};
  const GrayFrame g = to_grayscale(f);
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(1, 0) == doctest::Approx(0.299));
  CHECK(g(2, 0) == doctest::Approx(0.114));
}

TEST_CASE("to_grayscale of a grey pixel is that grey") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  RgbFrame f(16, 16);
  for (Rgb& p : f.pixels()) {
    const float v = u(rng);
    p = {v, v, v};
  }
  const GrayFrame g = to_grayscale(f);
  for (int i = 0; i < 256; ++i) CHECK(g.pixels()[i] == doctest::Approx(f.pixels()[i].r).epsilon(1e-6));
}

TEST_CASE("resize_bilinear basics") {
  const GrayFrame flat(13, 7, 0.5f);
  const GrayFrame big = resize_bilinear(flat, 256, 256);
  for (float v : big.pixels()) CHECK(v == doctest::Approx(0.5));

  const GrayFrame r = random_frame(9, 5, 11);
  CHECK(resize_bilinear(r, 9, 5) == r);

  GrayFrame step(2, 1);
  step(0, 0) = 0.f;
  step(1, 0) = 1.f;
  const GrayFrame up = resize_bilinear(step, 4, 1);
  for (int x = 0; x < 4; ++x) CHECK(up(x, 0) == doctest::Approx(bilinear_at(step, (x + 0.5) * 0.5 - 0.5, 0.0)));
  for (int x = 1; x < 4; ++x) CHECK(up(x, 0) >= up(x - 1, 0));
}

TEST_CASE("resize_bilinear agrees with direct evaluation and stays in range") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 20);
    const int h = 1 + static_cast<int>(rng() % 20);
    const int ow = 1 + static_cast<int>(rng() % 40);
    const int oh = 1 + static_cast<int>(rng() % 40);
    const GrayFrame f = random_frame(w, h, rng());
    const GrayFrame out = resize_bilinear(f, ow, oh);
    const auto [lo, hi] = std::minmax_element(f.pixels().begin(), f.pixels().end());
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const double expect =
            (ow == w && oh == h) ? f(x, y)
                                 : bilinear_at(f, (x + 0.5) * w / ow - 0.5, (y + 0.5) * h / oh - 0.5);
        CHECK(out(x, y) == doctest::Approx(expect).epsilon(1e-5));
        CHECK(out(x, y) >= *lo);
        CHECK(out(x, y) <= *hi);
      }
    }
  }
}

TEST_CASE("sobel magnitude on a vertical step") {
  GrayFrame f(6, 4, 0.f);
  for (int y = 0; y < 4; ++y) {
    for (int x = 3; x < 6; ++x) f(x, y) = 1.f;
  }
  const Raster<float> s = sobel_magnitude(f);
  // Columns 2 and 3 straddle the step: gx = 1 + 2 + 1 = 4, gy = 0.
  const double expect = 4.0 / (4.0 * std::sqrt(2.0));
  for (int y = 0; y < 4; ++y) {
    CHECK(s(2, y) == doctest::Approx(expect));
    CHECK(s(3, y) == doctest::Approx(expect));
    CHECK(s(0, y) == 0.f);
    CHECK(s(5, y) == 0.f);
  }
}

TEST_CASE("edge_overlay") {
  const GrayFrame flat(8, 8, 0.4f);
  CHECK(edge_overlay(flat, 0.7) == flat);

  const GrayFrame r = random_frame(10, 10, 9);
  CHECK(edge_overlay(r, 0.0) == r);

  const GrayFrame o = edge_overlay(r, 0.6);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(o.pixels()[i] >= r.pixels()[i]);

  GrayFrame step(6, 4, 0.f);
  for (int y = 0; y < 4; ++y) {
    for (int x = 3; x < 6; ++x) step(x, y) = 1.f;
  }
  const GrayFrame e = edge_overlay(step, 0.5);
  for (int y = 0; y < 4; ++y) {
    CHECK(e(2, y) > step(2, y));
    CHECK(e(2, y) == doctest::Approx(0.5 * 4.0 / (4.0 * std::sqrt(2.0))));
    CHECK(e(3, y) == 1.0f);  // clamped
  }
  CHECK_THROWS_AS(edge_overlay(r, 1.5), ArgumentError);
}

TEST_CASE("preprocess honours the configured order") {
  const GrayFrame f = random_frame(20, 16, 4);
  Preprocess p{10, 8, 0.3, EdgeOrder::resize_then_edge};
  CHECK(preprocess(f, p) == edge_overlay(resize_bilinear(f, 10, 8), 0.3));
  p.order = EdgeOrder::edge_then_resize;
  CHECK(preprocess(f, p) == resize_bilinear(edge_overlay(f, 0.3), 10, 8));
}

TEST_CASE("frame directories") {
  testing::TempDir dir("frames");
  CHECK(frame_filename(123) == "frame_000123.pgm");
  for (int i : {2, 0, 1}) write_pgm(dir.path() / frame_filename(i), GrayFrame(3, 3, i / 4.0f));
  PgmDirectorySource src(dir.path());
  REQUIRE(src.files().size() == 3);
  for (int i = 0; i < 3; ++i) {
    auto f = src.next();
    REQUIRE(f.has_value());
    CHECK((*f)(1, 1) == doctest::Approx(i / 4.0).epsilon(1e-2));
  }
  CHECK_FALSE(src.next().has_value());

  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  }

  write_text_atomic(dir.path() / "notes.txt", "stray");
  CHECK_THROWS_AS(list_frame_directory(dir.path()), IoError);
  CHECK_THROWS_AS(list_frame_directory(dir.path() / "missing"), IoError);
}

TEST_CASE("mapped source applies its transform lazily") {
  MemorySource mem({GrayFrame(4, 4, 0.25f), GrayFrame(4, 4, 0.5f)});
  MappedSource doubled(mem, [](const GrayFrame& f) {
    GrayFrame out = f;
    for (float& v : out.pixels()) v *= 2;
    return out;
  });
  CHECK((*doubled.next())(0, 0) == 0.5f);
  CHECK((*doubled.next())(0, 0) == 1.0f);
  CHECK_FALSE(doubled.next().has_value());
  doubled.rewind();
  CHECK((*doubled.next())(0, 0) == 0.5f);
}
