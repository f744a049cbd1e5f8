#include "crowdflow/optflow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace crowdflow {

namespace {

constexpr double kSingularDet = 1e-18;
constexpr int kMinLevelSide = 8;

using Mat6 = std::array<std::array<double, 6>, 6>;

// Gauss-Jordan with partial pivoting.
Mat6 invert6(Mat6 m) {
  Mat6 inv{};
  for (int i = 0; i < 6; ++i) inv[i][i] = 1.0;
  for (int col = 0; col < 6; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 6; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    std::swap(m[col], m[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double p = m[col][col];
    for (int k = 0; k < 6; ++k) {
      m[col][k] /= p;
      inv[col][k] /= p;
    }
    for (int r = 0; r < 6; ++r) {
      if (r == col) continue;
      const double f = m[r][col];
      if (f == 0.0) continue;
      for (int k = 0; k < 6; ++k) {
        m[r][k] -= f * m[col][k];
        inv[r][k] -= f * inv[col][k];
      }
    }
  }
  return inv;
}

// Separable box average with replicate border, applied to N interleaved
// channels in place.
template <std::size_t N>
void box_average(std::vector<std::array<double, N>>& data, int width, int height, int radius) {
  if (radius <= 0) return;
  const int span = 2 * radius + 1;
  const double norm = 1.0 / (static_cast<double>(span) * span);
  std::vector<std::array<double, N>> tmp(data.size());

  // Horizontal running sums.
  for (int y = 0; y < height; ++y) {
    const auto* row = data.data() + static_cast<std::size_t>(y) * width;
    auto* out = tmp.data() + static_cast<std::size_t>(y) * width;
    std::array<double, N> acc{};
    for (int k = -radius; k <= radius; ++k) {
      const auto& v = row[std::clamp(k, 0, width - 1)];
      for (std::size_t c = 0; c < N; ++c) acc[c] += v[c];
    }
    for (int x = 0; x < width; ++x) {
      out[x] = acc;
      const auto& add = row[std::min(x + radius + 1, width - 1)];
      const auto& sub = row[std::max(x - radius, 0)];
      for (std::size_t c = 0; c < N; ++c) acc[c] += add[c] - sub[c];
    }
  }
  // Vertical running sums.
  for (int x = 0; x < width; ++x) {
    std::array<double, N> acc{};
    for (int k = -radius; k <= radius; ++k) {
      const auto& v = tmp[static_cast<std::size_t>(std::clamp(k, 0, height - 1)) * width + x];
      for (std::size_t c = 0; c < N; ++c) acc[c] += v[c];
    }
    for (int y = 0; y < height; ++y) {
      auto& out = data[static_cast<std::size_t>(y) * width + x];
      for (std::size_t c = 0; c < N; ++c) out[c] = acc[c] * norm;
      const auto& add = tmp[static_cast<std::size_t>(std::min(y + radius + 1, height - 1)) * width + x];
      const auto& sub = tmp[static_cast<std::size_t>(std::max(y - radius, 0)) * width + x];
      for (std::size_t c = 0; c < N; ++c) acc[c] += add[c] - sub[c];
    }
  }
}

PolyCoeffs sample_bilinear(const PolyExpansion& e, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(e.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(e.height() - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, e.width() - 1);
  const int y1 = std::min(y0 + 1, e.height() - 1);
  const double wx = x - x0;
  const double wy = y - y0;
  const double w00 = (1 - wx) * (1 - wy), w10 = wx * (1 - wy), w01 = (1 - wx) * wy, w11 = wx * wy;
  const PolyCoeffs& a = e(x0, y0);
  const PolyCoeffs& b = e(x1, y0);
  const PolyCoeffs& c = e(x0, y1);
  const PolyCoeffs& d = e(x1, y1);
  PolyCoeffs r;
  r.bx = w00 * a.bx + w10 * b.bx + w01 * c.bx + w11 * d.bx;
  r.by = w00 * a.by + w10 * b.by + w01 * c.by + w11 * d.by;
  r.a11 = w00 * a.a11 + w10 * b.a11 + w01 * c.a11 + w11 * d.a11;
  r.a22 = w00 * a.a22 + w10 * b.a22 + w01 * c.a22 + w11 * d.a22;
  r.a12 = w00 * a.a12 + w10 * b.a12 + w01 * c.a12 + w11 * d.a12;
  return r;
}

Raster<float> resize_field(const Raster<float>& src, int w, int h, float gain) {
  // Same half-pixel mapping as resize_bilinear.
  Raster<float> out(w, h);
  const double sx = static_cast<double>(src.width()) / w;
  const double sy = static_cast<double>(src.height()) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      const double v = (src(x0, y0) * (1 - wx) + src(x1, y0) * wx) * (1 - wy) +
                       (src(x0, y1) * (1 - wx) + src(x1, y1) * wx) * wy;
      out(x, y) = static_cast<float>(v * gain);
    }
  }
  return out;
}

// Runs the displacement updates of one pyramid level in place.
void refine_level(const PolyExpansion& r0, const PolyExpansion& r1, FlowField& flow, const FlowParams& params) {
  const int w = r0.width();
  const int h = r0.height();
  // g11, g12, g22, h1, h2 of the normal equations (sum A^T A) d = sum A^T db.
  std::vector<std::array<double, 5>> m(static_cast<std::size_t>(w) * h);

  for (int iter = 0; iter < params.iterations_per_level; ++iter) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dx = flow.dx(x, y);
        const double dy = flow.dy(x, y);
        const PolyCoeffs& p0 = r0(x, y);
        const PolyCoeffs p1 = sample_bilinear(r1, x + dx, y + dy);
        const double a11 = 0.5 * (p0.a11 + p1.a11);
        const double a22 = 0.5 * (p0.a22 + p1.a22);
        const double a12 = 0.5 * (p0.a12 + p1.a12);
        const double db1 = -0.5 * (p1.bx - p0.bx) + a11 * dx + a12 * dy;
        const double db2 = -0.5 * (p1.by - p0.by) + a12 * dx + a22 * dy;
        auto& cell = m[static_cast<std::size_t>(y) * w + x];
        cell[0] = a11 * a11 + a12 * a12;
        cell[1] = a12 * (a11 + a22);
        cell[2] = a12 * a12 + a22 * a22;
        cell[3] = a11 * db1 + a12 * db2;
        cell[4] = a12 * db1 + a22 * db2;
      }
    }
    box_average(m, w, h, params.window_radius);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto& c = m[static_cast<std::size_t>(y) * w + x];
        const double det = c[0] * c[2] - c[1] * c[1];
        if (!(det >= kSingularDet)) continue;  // damped: keep the previous estimate
        flow.dx(x, y) = static_cast<float>((c[2] * c[3] - c[1] * c[4]) / det);
        flow.dy(x, y) = static_cast<float>((c[0] * c[4] - c[1] * c[3]) / det);
      }
    }
  }
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(ByteView b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

}  // namespace

void FlowParams::validate() const {
  if (pyramid_levels < 1) throw ArgumentError("flow.pyramid_levels must be >= 1");
  if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0)) throw ArgumentError("flow.pyramid_scale must be in (0,1)");
  if (window_radius < 0) throw ArgumentError("flow.window_radius must be >= 0");
  if (iterations_per_level < 1) throw ArgumentError("flow.iterations_per_level must be >= 1");
  if (poly_radius < 1) throw ArgumentError("flow.poly_radius must be >= 1");
  if (!(poly_sigma > 0.0)) throw ArgumentError("flow.poly_sigma must be > 0");
}

PolyExpansion poly_expand(const GrayFrame& frame, int poly_radius, double poly_sigma) {
  const int n = poly_radius;
  if (n < 1 || !(poly_sigma > 0.0)) throw ArgumentError("poly_expand: radius must be >= 1 and sigma > 0");
  if (frame.width() <= 2 * n + 1 || frame.height() <= 2 * n + 1) {
    throw ArgumentError("poly_expand: frame must exceed the (2r+1)^2 neighbourhood");
  }
  const int w = frame.width();
  const int h = frame.height();

  std::vector<double> g(2 * n + 1), xg(2 * n + 1), xxg(2 * n + 1);
  double total = 0.0;
  for (int k = -n; k <= n; ++k) {
    g[k + n] = std::exp(-(k * k) / (2.0 * poly_sigma * poly_sigma));
    total += g[k + n];
  }
  for (int k = -n; k <= n; ++k) {
    g[k + n] /= total;
    xg[k + n] = k * g[k + n];
    xxg[k + n] = k * k * g[k + n];
  }

  // Gram matrix of the basis {1, x, y, x^2, y^2, xy} under the applicability.
  Mat6 gram{};
  for (int v = -n; v <= n; ++v) {
    for (int u = -n; u <= n; ++u) {
      const double wgt = g[u + n] * g[v + n];
      const std::array<double, 6> basis{1.0, double(u), double(v), double(u * u), double(v * v), double(u * v)};
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) gram[i][j] += wgt * basis[i] * basis[j];
    }
  }
  const Mat6 inv = invert6(gram);

  // Vertical pass: per pixel, sums of g, v*g, v^2*g against the column.
  std::vector<std::array<double, 3>> vert(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::array<double, 3> acc{};
      for (int k = -n; k <= n; ++k) {
        const double f = frame.clamped(x, y + k);
        acc[0] += g[k + n] * f;
        acc[1] += xg[k + n] * f;
        acc[2] += xxg[k + n] * f;
      }
      vert[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }

  PolyExpansion out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto* row = vert.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      // Projections onto 1, x, y, x^2, y^2, xy.
      std::array<double, 6> p{};
      for (int k = -n; k <= n; ++k) {
        const auto& v = row[std::clamp(x + k, 0, w - 1)];
        p[0] += g[k + n] * v[0];
        p[1] += xg[k + n] * v[0];
        p[2] += g[k + n] * v[1];
        p[3] += xxg[k + n] * v[0];
        p[4] += g[k + n] * v[2];
        p[5] += xg[k + n] * v[1];
      }
      std::array<double, 6> r{};
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) r[i] += inv[i][j] * p[j];
      out(x, y) = PolyCoeffs{r[0], r[1], r[2], r[3], r[4], 0.5 * r[5]};
    }
  }
  return out;
}

namespace detail {

GrayFrame pyramid_down(const GrayFrame& frame, int out_width, int out_height) {
  static constexpr std::array<double, 5> k{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const int w = frame.width();
  const int h = frame.height();
  GrayFrame tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * frame.clamped(x + i, y);
      tmp(x, y) = static_cast<float>(acc);
    }
  }
  GrayFrame blurred(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.clamped(x, y + i);
      blurred(x, y) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
    }
  }
  return resize_bilinear(blurred, out_width, out_height);
}

}  // namespace detail

int effective_levels(int width, int height, const FlowParams& params) {
  const int min_side = std::max(kMinLevelSide, 2 * params.poly_radius + 2);
  int levels = 1;
  double scale = 1.0;
  while (levels < params.pyramid_levels) {
    scale *= params.pyramid_scale;
    const int w = static_cast<int>(std::lround(width * scale));
    const int h = static_cast<int>(std::lround(height * scale));
    if (w < min_side || h < min_side) break;
    ++levels;
  }
  return levels;
}

FlowPyramid::FlowPyramid(const GrayFrame& frame, const FlowParams& params) {
  params.validate();
  const int levels = effective_levels(frame.width(), frame.height(), params);
  expansions_.reserve(static_cast<std::size_t>(levels));
  GrayFrame current = frame;
  double scale = 1.0;
  for (int i = 0; i < levels; ++i) {
    if (i > 0) {
      scale *= params.pyramid_scale;
      current = detail::pyramid_down(current, static_cast<int>(std::lround(frame.width() * scale)),
                                     static_cast<int>(std::lround(frame.height() * scale)));
    }
    expansions_.push_back(poly_expand(current, params.poly_radius, params.poly_sigma));
  }
}

FlowField farneback_flow(const FlowPyramid& prev, const FlowPyramid& next, const FlowParams& params) {
  if (prev.width() != next.width() || prev.height() != next.height() || prev.levels() != next.levels()) {
    throw ArgumentError("farneback_flow: frame dimensions differ");
  }
  params.validate();
  FlowField flow;
  for (int level = prev.levels() - 1; level >= 0; --level) {
    const PolyExpansion& r0 = prev.level(level);
    const PolyExpansion& r1 = next.level(level);
    if (flow.width() == 0) {
      flow = FlowField(r0.width(), r0.height());
    } else {
      const auto gain = static_cast<float>(1.0 / params.pyramid_scale);
      FlowField up;
      up.dx = resize_field(flow.dx, r0.width(), r0.height(), gain);
      up.dy = resize_field(flow.dy, r0.width(), r0.height(), gain);
      flow = std::move(up);
    }
    refine_level(r0, r1, flow, params);
  }
  return flow;
}

FlowField farneback_flow(const GrayFrame& prev, const GrayFrame& next, const FlowParams& params) {
  if (!prev.same_shape(next)) throw ArgumentError("farneback_flow: frame dimensions differ");
  return farneback_flow(FlowPyramid(prev, params), FlowPyramid(next, params), params);
}

Raster<float> motion_magnitude(const FlowField& flow) {
  Raster<float> out(flow.width(), flow.height());
  auto dx = flow.dx.pixels();
  auto dy = flow.dy.pixels();
  auto m = out.pixels();
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = static_cast<float>(std::hypot(static_cast<double>(dx[i]), static_cast<double>(dy[i])));
  }
  return out;
}

MotionStats mean_motion(const FlowField& flow) {
  MotionStats s;
  const auto dx = flow.dx.pixels();
  const auto dy = flow.dy.pixels();
  if (dx.empty()) return s;
  double sum = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double m = std::hypot(static_cast<double>(dx[i]), static_cast<double>(dy[i]));
    sum += m;
    s.max_magnitude = std::max(s.max_magnitude, m);
  }
  s.mean_magnitude = std::min(sum / static_cast<double>(dx.size()), s.max_magnitude);
  return s;
}

Bytes encode_flo1(const FlowField& flow) {
  Bytes out{'F', 'L', 'O', '1'};
  put_u32(out, static_cast<std::uint32_t>(flow.width()));
  put_u32(out, static_cast<std::uint32_t>(flow.height()));
  put_u32(out, 0);
  const auto dx = flow.dx.pixels();
  const auto dy = flow.dy.pixels();
  out.reserve(out.size() + dx.size() * 8);
  for (std::size_t i = 0; i < dx.size(); ++i) {
    put_u32(out, std::bit_cast<std::uint32_t>(dx[i]));
    put_u32(out, std::bit_cast<std::uint32_t>(dy[i]));
  }
  return out;
}

FlowField decode_flo1(ByteView bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "FLO1", 4) != 0) {
    throw DecodeError("flo1: bad magic", 0);
  }
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if ((bytes.size() - 16) / 8 < count || bytes.size() - 16 != count * 8) {
    throw DecodeError("flo1: payload size does not match header", bytes.size());
  }
  FlowField flow(static_cast<int>(w), static_cast<int>(h));
  auto dx = flow.dx.pixels();
  auto dy = flow.dy.pixels();
  for (std::size_t i = 0; i < count; ++i) {
    dx[i] = std::bit_cast<float>(get_u32(bytes, 16 + 8 * i));
    dy[i] = std::bit_cast<float>(get_u32(bytes, 20 + 8 * i));
    if (!std::isfinite(dx[i]) || !std::isfinite(dy[i])) throw DecodeError("flo1: non-finite value", 16 + 8 * i);
  }
  return flow;
}

}  // namespace crowdflow
