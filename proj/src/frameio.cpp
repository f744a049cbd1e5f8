#include "crowdflow/frameio.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>
#include <system_error>
#include <thread>

#include <unistd.h>

namespace crowdflow {

namespace fs = std::filesystem;

void GrayFrame::validate() const {
  for (float v : pixels()) {
    if (!(v >= 0.f && v <= 1.f)) {
      throw ArgumentError("gray frame value outside [0,1]");
    }
  }
}

void RgbFrame::validate() const {
  for (const Rgb& p : pixels()) {
    for (float v : {p.r, p.g, p.b}) {
      if (!(v >= 0.f && v <= 1.f)) {
        throw ArgumentError("rgb frame channel outside [0,1]");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// PGM

namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Skips whitespace and '#' comments, then reads one decimal integer.
int read_header_int(ByteView bytes, std::size_t& pos, const char* what) {
  while (pos < bytes.size()) {
    if (is_space(bytes[pos])) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  long long value = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > (1LL << 30)) throw DecodeError(std::string("pgm ") + what + " too large", start);
    ++pos;
  }
  if (pos == start) throw DecodeError(std::string("pgm header: expected ") + what, start);
  return static_cast<int>(value);
}

}  // namespace

PgmHeader parse_pgm_header(ByteView bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw DecodeError("pgm: missing P5 magic", 0);
  }
  std::size_t pos = 2;
  PgmHeader h;
  h.width = read_header_int(bytes, pos, "width");
  h.height = read_header_int(bytes, pos, "height");
  std::size_t maxval_at = pos;
  h.maxval = read_header_int(bytes, pos, "maxval");
  if (h.width == 0 || h.height == 0) throw DecodeError("pgm: zero dimension", maxval_at);
  if (h.maxval == 0 || h.maxval > 65535) throw DecodeError("pgm: maxval must be in [1, 65535]", maxval_at);
  if (pos >= bytes.size() || !is_space(bytes[pos])) {
    throw DecodeError("pgm header: expected whitespace after maxval", pos);
  }
  h.raster_offset = pos + 1;
  return h;
}

GrayFrame decode_pgm(ByteView bytes) {
  const PgmHeader h = parse_pgm_header(bytes);
  const std::size_t bps = h.maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  if (bytes.size() - h.raster_offset < count * bps) {
    throw DecodeError("pgm: truncated raster, expected " + std::to_string(count * bps) + " bytes", bytes.size());
  }
  GrayFrame frame(h.width, h.height);
  auto out = frame.pixels();
  const auto* p = bytes.data() + h.raster_offset;
  const float scale = 1.0f / static_cast<float>(h.maxval);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned raw = bps == 1 ? p[i] : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
    if (raw > static_cast<unsigned>(h.maxval)) {
      throw DecodeError("pgm: sample exceeds maxval", h.raster_offset + i * bps);
    }
    out[i] = static_cast<float>(raw) * scale;
  }
  return frame;
}

Bytes encode_pgm(const GrayFrame& frame, int maxval) {
  if (maxval < 1 || maxval > 65535) throw ArgumentError("pgm maxval must be in [1, 65535]");
  std::string header = "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n" +
                       std::to_string(maxval) + "\n";
  const std::size_t bps = maxval > 255 ? 2 : 1;
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + frame.size() * bps);
  for (float v : frame.pixels()) {
    const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
    const auto raw = static_cast<unsigned>(std::lround(clamped * maxval));
    if (bps == 2) out.push_back(static_cast<std::uint8_t>(raw >> 8));
    out.push_back(static_cast<std::uint8_t>(raw & 0xff));
  }
  return out;
}

GrayFrame read_pgm(const fs::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_pgm(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.message(), e.offset());
  }
}

void write_pgm(const fs::path& path, const GrayFrame& frame) { write_file_atomic(path, encode_pgm(frame)); }

// ---------------------------------------------------------------------------
// Y4M

std::size_t Y4mHeader::luma_size() const {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

std::size_t Y4mHeader::chroma_size() const {
  if (layout == ChromaLayout::mono) return 0;
  return static_cast<std::size_t>((width + 1) / 2) * static_cast<std::size_t>((height + 1) / 2);
}

std::size_t Y4mHeader::frame_payload() const { return luma_size() + 2 * chroma_size(); }

namespace {

std::pair<int, int> parse_ratio(const std::string& text, std::size_t offset) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw DecodeError("y4m: malformed ratio '" + text + "'", offset);
  int a = 0;
  int b = 0;
  auto r1 = std::from_chars(text.data(), text.data() + colon, a);
  auto r2 = std::from_chars(text.data() + colon + 1, text.data() + text.size(), b);
  if (r1.ec != std::errc{} || r1.ptr != text.data() + colon || r2.ec != std::errc{} ||
      r2.ptr != text.data() + text.size()) {
    throw DecodeError("y4m: malformed ratio '" + text + "'", offset);
  }
  return {a, b};
}

int parse_positive(const std::string& text, std::size_t offset, const char* what) {
  int v = 0;
  auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size() || v <= 0) {
    throw DecodeError(std::string("y4m: bad ") + what + " '" + text + "'", offset);
  }
  return v;
}

}  // namespace

Y4mReader::Y4mReader(Bytes bytes) : bytes_(std::move(bytes)) {
  static constexpr std::string_view kSignature = "YUV4MPEG2";
  if (bytes_.size() < kSignature.size() ||
      !std::equal(kSignature.begin(), kSignature.end(), bytes_.begin())) {
    throw DecodeError("y4m: missing YUV4MPEG2 signature", 0);
  }
  std::size_t pos = kSignature.size();
  bool have_w = false;
  bool have_h = false;
  while (true) {
    if (pos >= bytes_.size()) throw DecodeError("y4m: unterminated header line", pos);
    if (bytes_[pos] == '\n') {
      ++pos;
      break;
    }
    if (bytes_[pos] != ' ') throw DecodeError("y4m: expected space between header parameters", pos);
    ++pos;
    const std::size_t start = pos;
    while (pos < bytes_.size() && bytes_[pos] != ' ' && bytes_[pos] != '\n') ++pos;
    if (pos == start) continue;
    const char tag = static_cast<char>(bytes_[start]);
    const std::string value(bytes_.begin() + static_cast<std::ptrdiff_t>(start) + 1,
                            bytes_.begin() + static_cast<std::ptrdiff_t>(pos));
    switch (tag) {
      case 'W':
        header_.width = parse_positive(value, start, "width");
        have_w = true;
        break;
      case 'H':
        header_.height = parse_positive(value, start, "height");
        have_h = true;
        break;
      case 'F': {
        auto [n, d] = parse_ratio(value, start);
        if (n <= 0 || d <= 0) throw DecodeError("y4m: frame rate must be positive", start);
        header_.rate = {n, d};
        break;
      }
      case 'I':
        if (value.size() != 1) throw DecodeError("y4m: bad interlace tag", start);
        header_.interlace = value[0];
        break;
      case 'A': {
        auto [n, d] = parse_ratio(value, start);
        header_.aspect_num = n;
        header_.aspect_den = d;
        break;
      }
      case 'C':
        if (value == "420" || value == "420jpeg" || value == "420paldv" || value == "420mpeg2") {
          header_.layout = ChromaLayout::yuv420;
        } else if (value == "mono") {
          header_.layout = ChromaLayout::mono;
        } else {
          throw DecodeError("y4m: unsupported colorspace C" + value, start);
        }
        header_.colorspace = value;
        break;
      default:
        // X (comment/extension) and unknown tags are skipped.
        break;
    }
  }
  if (!have_w || !have_h) throw DecodeError("y4m: header lacks W or H", pos);
  data_start_ = pos;
  pos_ = pos;
}

bool Y4mReader::begin_frame() {
  static constexpr std::string_view kFrame = "FRAME";
  if (pos_ == bytes_.size()) return false;
  if (bytes_.size() - pos_ < kFrame.size() ||
      !std::equal(kFrame.begin(), kFrame.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_))) {
    throw DecodeError("y4m: expected FRAME marker", pos_);
  }
  std::size_t p = pos_ + kFrame.size();
  while (p < bytes_.size() && bytes_[p] != '\n') ++p;
  if (p == bytes_.size()) throw DecodeError("y4m: unterminated FRAME line", p);
  ++p;
  if (bytes_.size() - p < header_.frame_payload()) {
    throw DecodeError("y4m: frame payload truncated, expected " + std::to_string(header_.frame_payload()) +
                          " bytes",
                      bytes_.size());
  }
  pos_ = p;
  return true;
}

std::optional<RgbFrame> Y4mReader::next_rgb() {
  if (!begin_frame()) return std::nullopt;
  const int w = header_.width;
  const int h = header_.height;
  const std::uint8_t* y_plane = bytes_.data() + pos_;
  RgbFrame out(w, h);
  if (header_.layout == ChromaLayout::mono) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float v = static_cast<float>(y_plane[static_cast<std::size_t>(y) * w + x]) / 255.f;
        out(x, y) = {v, v, v};
      }
    }
  } else {
    const int cw = (w + 1) / 2;
    const std::uint8_t* u_plane = y_plane + header_.luma_size();
    const std::uint8_t* v_plane = u_plane + header_.chroma_size();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t ci = static_cast<std::size_t>(y / 2) * cw + static_cast<std::size_t>(x / 2);
        const double luma = y_plane[static_cast<std::size_t>(y) * w + x];
        const double cb = u_plane[ci] - 128.0;
        const double cr = v_plane[ci] - 128.0;
        auto channel = [](double v) { return static_cast<float>(std::clamp(v / 255.0, 0.0, 1.0)); };
        out(x, y) = {channel(luma + 1.402 * cr), channel(luma - 0.344136 * cb - 0.714136 * cr),
                     channel(luma + 1.772 * cb)};
      }
    }
  }
  pos_ += header_.frame_payload();
  return out;
}

std::optional<GrayFrame> Y4mReader::next_gray() {
  if (header_.layout == ChromaLayout::mono) {
    if (!begin_frame()) return std::nullopt;
    GrayFrame out(header_.width, header_.height);
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(bytes_[pos_ + i]) / 255.f;
    pos_ += header_.frame_payload();
    return out;
  }
  auto rgb = next_rgb();
  if (!rgb) return std::nullopt;
  return to_grayscale(*rgb);
}

// ---------------------------------------------------------------------------
// Pixel operations

GrayFrame to_grayscale(const RgbFrame& frame) {
  GrayFrame out(frame.width(), frame.height());
  auto src = frame.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = 0.299 * src[i].r + 0.587 * src[i].g + 0.114 * src[i].b;
    dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

GrayFrame resize_bilinear(const GrayFrame& frame, int out_width, int out_height) {
  if (out_width < 1 || out_height < 1) throw ArgumentError("resize target dimensions must be >= 1");
  if (frame.empty()) throw ArgumentError("cannot resize an empty frame");
  if (out_width == frame.width() && out_height == frame.height()) return frame;

  const double sx = static_cast<double>(frame.width()) / out_width;
  const double sy = static_cast<double>(frame.height()) / out_height;
  GrayFrame out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    const double fy = std::max((y + 0.5) * sy - 0.5, 0.0);
    const int y0 = std::min(static_cast<int>(fy), frame.height() - 1);
    const int y1 = std::min(y0 + 1, frame.height() - 1);
    const double wy = std::min(fy - y0, 1.0);
    for (int x = 0; x < out_width; ++x) {
      const double fx = std::max((x + 0.5) * sx - 0.5, 0.0);
      const int x0 = std::min(static_cast<int>(fx), frame.width() - 1);
      const int x1 = std::min(x0 + 1, frame.width() - 1);
      const double wx = std::min(fx - x0, 1.0);
      const double top = frame(x0, y0) * (1 - wx) + frame(x1, y0) * wx;
      const double bottom = frame(x0, y1) * (1 - wx) + frame(x1, y1) * wx;
      out(x, y) = static_cast<float>(top * (1 - wy) + bottom * wy);
    }
  }
  return out;
}

Raster<float> sobel_magnitude(const GrayFrame& frame) {
  if (frame.width() < 3 || frame.height() < 3) throw ArgumentError("sobel needs a frame of at least 3x3");
  static const double kMax = 4.0 * std::sqrt(2.0);
  Raster<float> out(frame.width(), frame.height());
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      auto p = [&](int dx, int dy) -> double { return frame.clamped(x + dx, y + dy); };
      const double gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      const double gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      out(x, y) = static_cast<float>(std::sqrt(gx * gx + gy * gy) / kMax);
    }
  }
  return out;
}

GrayFrame edge_overlay(const GrayFrame& frame, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("edge overlay alpha must be in [0,1]");
  const Raster<float> edges = sobel_magnitude(frame);
  GrayFrame out(frame.width(), frame.height());
  auto src = frame.pixels();
  auto e = edges.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(std::clamp(src[i] + alpha * e[i], 0.0, 1.0));
  }
  return out;
}

GrayFrame preprocess(const GrayFrame& frame, const Preprocess& options) {
  if (options.order == EdgeOrder::resize_then_edge) {
    return edge_overlay(resize_bilinear(frame, options.width, options.height), options.edge_alpha);
  }
  return resize_bilinear(edge_overlay(frame, options.edge_alpha), options.width, options.height);
}

// ---------------------------------------------------------------------------
// Sources

std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.pgm", index);
  return buf;
}

std::vector<fs::path> list_frame_directory(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + ": not a readable directory");
  static const std::regex kName(R"(frame_\d{6,}\.pgm)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, kName)) {
      throw IoError(entry.path().string() + ": frame directory entry does not match frame_NNNNNN.pgm");
    }
    files.push_back(entry.path());
  }
  if (ec) throw IoError(dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

PgmDirectorySource::PgmDirectorySource(const fs::path& dir, FrameRate rate)
    : files_(list_frame_directory(dir)), rate_(rate) {}

SourceInfo PgmDirectorySource::info() const { return {SourceKind::frame_directory, rate_, files_.size()}; }

std::optional<GrayFrame> PgmDirectorySource::next() {
  if (cursor_ >= files_.size()) return std::nullopt;
  return read_pgm(files_[cursor_++]);
}

std::unique_ptr<Y4mSource> Y4mSource::open(const fs::path& path) {
  Bytes bytes = read_file(path);
  try {
    return std::make_unique<Y4mSource>(std::move(bytes));
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.message(), e.offset());
  }
}

SourceInfo Y4mSource::info() const { return {SourceKind::y4m_stream, reader_.header().rate, std::nullopt}; }

std::optional<GrayFrame> MemorySource::next() {
  if (cursor_ >= frames_.size()) return std::nullopt;
  return frames_[cursor_++];
}

std::optional<GrayFrame> MappedSource::next() {
  auto f = inner_.next();
  if (!f) return std::nullopt;
  return fn_(*f);
}

// ---------------------------------------------------------------------------
// Files

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string() + ": read failed");
  return bytes;
}

void write_file_atomic(const fs::path& path, ByteView bytes) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": rename failed: " + ec.message());
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace crowdflow
