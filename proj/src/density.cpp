#include "crowdflow/density.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace crowdflow {

double DensityMap::integral() const {
  double sum = 0.0;
  for (double v : pixels()) sum += v;
  return sum;
}

double DensityMap::max_value() const {
  double m = 0.0;
  for (double v : pixels()) m = std::max(m, v);
  return m;
}

void DensityMap::validate() const {
  for (double v : pixels()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("density map values must be finite and >= 0");
  }
}

void KernelSpec::validate() const {
  if (!(sigma > 0.0)) throw ArgumentError("kernel sigma must be > 0");
  if (!(truncation_radius >= 3.0 * sigma)) throw ArgumentError("kernel truncation radius must be >= 3 sigma");
}

void FusionConfig::validate() const {
  if (!(accept_gamma >= -1.0 && accept_gamma <= 1.0)) throw ArgumentError("fusion accept_gamma must be in [-1,1]");
}

DensityMap render_density(const HeadAnnotations& points, int width, int height, const KernelSpec& kernel) {
  kernel.validate();
  DensityMap map(width, height);
  const double inv2s2 = 1.0 / (2.0 * kernel.sigma * kernel.sigma);
  const double r = kernel.truncation_radius;
  std::vector<double> weights;
  for (const HeadPoint& p : points) {
    if (!(p.x >= 0.0 && p.x < width && p.y >= 0.0 && p.y < height)) {
      std::ostringstream msg;
      msg << "head point (" << p.x << "," << p.y << ") outside " << width << "x" << height << " raster";
      throw ArgumentError(msg.str());
    }
    const int x0 = static_cast<int>(std::ceil(p.x - r));
    const int x1 = static_cast<int>(std::floor(p.x + r));
    const int y0 = static_cast<int>(std::ceil(p.y - r));
    const int y1 = static_cast<int>(std::floor(p.y + r));
    const int kw = x1 - x0 + 1;
    weights.assign(static_cast<std::size_t>(kw) * (y1 - y0 + 1), 0.0);
    double total = 0.0;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
        const double w = std::exp(-d2 * inv2s2);
        weights[static_cast<std::size_t>(y - y0) * kw + (x - x0)] = w;
        total += w;
      }
    }
    for (int y = std::max(y0, 0); y <= std::min(y1, height - 1); ++y) {
      for (int x = std::max(x0, 0); x <= std::min(x1, width - 1); ++x) {
        map(x, y) += weights[static_cast<std::size_t>(y - y0) * kw + (x - x0)] / total;
      }
    }
  }
  return map;
}

double kernel_peak(const KernelSpec& kernel) {
  kernel.validate();
  const int r = static_cast<int>(std::floor(kernel.truncation_radius));
  const double inv2s2 = 1.0 / (2.0 * kernel.sigma * kernel.sigma);
  double total = 0.0;
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x) total += std::exp(-(x * x + y * y) * inv2s2);
  return 1.0 / total;
}

Mask threshold_map(const DensityMap& map, double tau) {
  if (!(tau >= 0.0)) throw ArgumentError("blob threshold must be >= 0");
  Mask mask(map.width(), map.height());
  auto src = map.pixels();
  auto dst = mask.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > tau ? 1 : 0;
  return mask;
}

namespace {

struct DisjointSet {
  std::vector<int> parent;

  int make() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

int count_blobs(const Mask& mask) {
  // Two-pass labelling: provisional labels from the already-visited
  // neighbours (W, NW, N, NE), equivalences merged in a disjoint set.
  const int w = mask.width();
  const int h = mask.height();
  Raster<int> labels(w, h, -1);
  DisjointSet sets;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      int label = -1;
      const int nbr[4][2] = {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
      for (const auto& d : nbr) {
        const int nx = x + d[0];
        const int ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w) continue;
        const int l = labels(nx, ny);
        if (l < 0) continue;
        if (label < 0) {
          label = l;
        } else {
          sets.unite(label, l);
        }
      }
      labels(x, y) = label < 0 ? sets.make() : label;
    }
  }
  int roots = 0;
  for (int i = 0; i < static_cast<int>(sets.parent.size()); ++i) {
    if (sets.find(i) == i) ++roots;
  }
  return roots;
}

int estimate_count(const DensityMap& map, double tau) { return count_blobs(threshold_map(map, tau)); }

double similarity(const DensityMap& a, const DensityMap& b) {
  if (!a.same_shape(b)) throw ArgumentError("similarity: map dimensions differ");
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  const double n = static_cast<double>(pa.size());
  if (pa.empty()) return 1.0;
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ma += pa[i];
    mb += pb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double da = pa[i] - ma;
    const double db = pb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  const bool const_a = saa == 0.0;
  const bool const_b = sbb == 0.0;
  if (const_a && const_b) return a == b ? 1.0 : 0.0;
  if (const_a || const_b) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

FusionResult fuse_maps_detailed(const std::vector<DensityMap>& maps, const FusionConfig& config) {
  config.validate();
  if (maps.empty()) throw ArgumentError("fuse_maps needs at least one map");
  for (const auto& m : maps) {
    if (!m.same_shape(maps.front())) throw ArgumentError("fuse_maps: map dimensions differ");
  }
  const std::size_t k = maps.size();
  std::vector<double> sim(k * k, 1.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      sim[i * k + j] = sim[j * k + i] = similarity(maps[i], maps[j]);
    }
  }
  std::size_t anchor = 0;
  double best = -2.0;
  for (std::size_t i = 0; i < k; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) mean += sim[i * k + j];
    }
    mean = k > 1 ? mean / static_cast<double>(k - 1) : 1.0;
    if (mean > best) {
      best = mean;
      anchor = i;
    }
  }
  FusionResult result;
  result.anchor = anchor;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == anchor || sim[anchor * k + j] >= config.accept_gamma) result.accepted.push_back(j);
  }
  if (result.accepted.size() == 1) {
    result.map = maps[anchor];
    return result;
  }
  const auto& first = maps.front();
  std::vector<double> acc(first.size(), 0.0);
  for (std::size_t j : result.accepted) {
    auto px = maps[j].pixels();
    for (std::size_t i = 0; i < px.size(); ++i) acc[i] += px[i];
  }
  DensityMap out(first.width(), first.height());
  auto dst = out.pixels();
  const double inv = 1.0 / static_cast<double>(result.accepted.size());
  for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = acc[i] * inv;
  // Pixels on which every accepted map agrees keep that exact value.
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double v = maps[result.accepted.front()].pixels()[i];
    bool same = true;
    for (std::size_t j : result.accepted) same = same && maps[j].pixels()[i] == v;
    if (same) dst[i] = v;
  }
  result.map = std::move(out);
  return result;
}

DensityMap fuse_maps(const std::vector<DensityMap>& maps, const FusionConfig& config) {
  return fuse_maps_detailed(maps, config).map;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(ByteView b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

}  // namespace

Bytes encode_dmp1(const DensityMap& map) {
  Bytes out{'D', 'M', 'P', '1'};
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, 0);
  out.reserve(out.size() + map.size() * 4);
  for (double v : map.pixels()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

DensityMap decode_dmp1(ByteView bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "DMP1", 4) != 0) throw DecodeError("dmp1: bad magic", 0);
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if ((bytes.size() - 16) / 4 < count || bytes.size() - 16 != count * 4) {
    throw DecodeError("dmp1: payload size does not match header", bytes.size());
  }
  DensityMap map(static_cast<int>(w), static_cast<int>(h));
  auto px = map.pixels();
  for (std::size_t i = 0; i < count; ++i) {
    const float v = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
    if (!(v >= 0.f) || !std::isfinite(v)) throw DecodeError("dmp1: negative or non-finite value", 16 + 4 * i);
    px[i] = v;
  }
  return map;
}

DensityMap read_dmp1(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_dmp1(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.message(), e.offset());
  }
}

void write_dmp1(const std::filesystem::path& path, const DensityMap& map) {
  write_file_atomic(path, encode_dmp1(map));
}

GrayFrame visualize(const DensityMap& map) {
  GrayFrame out(map.width(), map.height());
  const double peak = map.max_value();
  if (peak <= 0.0) return out;
  auto src = map.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(std::clamp(src[i] / peak, 0.0, 1.0));
  return out;
}

GrayFrame overlay(const GrayFrame& frame, const DensityMap& map, double opacity) {
  if (frame.width() != map.width() || frame.height() != map.height()) {
    throw ArgumentError("overlay: frame and map dimensions differ");
  }
  const GrayFrame norm = visualize(map);
  GrayFrame out = frame;
  auto dst = out.pixels();
  auto d = norm.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (d[i] <= 0.f) continue;
    const double a = opacity * d[i];
    dst[i] = static_cast<float>(std::clamp(dst[i] * (1.0 - a) + a, 0.0, 1.0));
  }
  return out;
}

HeadAnnotations parse_annotations(std::string_view text) {
  HeadAnnotations points;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (!line.empty()) {
      const auto comma = line.find(',');
      HeadPoint p;
      const char* mid = line.data() + (comma == std::string_view::npos ? line.size() : comma);
      auto rx = std::from_chars(line.data(), mid, p.x);
      bool ok = comma != std::string_view::npos && rx.ec == std::errc{} && rx.ptr == mid;
      if (ok) {
        std::string_view rest = line.substr(comma + 1);
        while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
        auto ry = std::from_chars(rest.data(), rest.data() + rest.size(), p.y);
        ok = ry.ec == std::errc{} && ry.ptr == rest.data() + rest.size();
      }
      if (!ok) throw DecodeError("annotations: line " + std::to_string(line_no) + " is not \"x,y\"", pos);
      points.push_back(p);
    }
    pos = end + 1;
  }
  return points;
}

std::string format_annotations(const HeadAnnotations& points) {
  std::string out;
  char buf[64];
  for (const HeadPoint& p : points) {
    auto r = std::to_chars(buf, buf + sizeof buf, p.x);
    out.append(buf, r.ptr);
    out += ',';
    r = std::to_chars(buf, buf + sizeof buf, p.y);
    out.append(buf, r.ptr);
    out += '\n';
  }
  return out;
}

}  // namespace crowdflow
