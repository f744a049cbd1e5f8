#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdflow/raster.hpp"

namespace crowdflow {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// ---------------------------------------------------------------------------
// Binary portable graymap (P5)

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t raster_offset = 0;
};

PgmHeader parse_pgm_header(ByteView bytes);

/// Decodes a P5 graymap; pixel values are raw / maxval. 16-bit rasters are
/// big-endian as the format prescribes.
GrayFrame decode_pgm(ByteView bytes);

/// Encodes with a canonical "P5\n<w> <h>\n<maxval>\n" header.
Bytes encode_pgm(const GrayFrame& frame, int maxval = 255);

GrayFrame read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);

// ---------------------------------------------------------------------------
// YUV4MPEG2

struct FrameRate {
  int num = 24;
  int den = 1;

  double fps() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const FrameRate&, const FrameRate&) = default;
};

enum class ChromaLayout { yuv420, mono };

struct Y4mHeader {
  int width = 0;
  int height = 0;
  FrameRate rate;
  char interlace = 'p';
  int aspect_num = 0;
  int aspect_den = 0;
  std::string colorspace = "420jpeg";
  ChromaLayout layout = ChromaLayout::yuv420;

  std::size_t luma_size() const;
  std::size_t chroma_size() const;
  std::size_t frame_payload() const;
};

/// Sequential reader over an in-memory Y4M stream. Every error reports the
/// byte offset at which the stream stopped making sense.
class Y4mReader {
 public:
  explicit Y4mReader(Bytes bytes);

  const Y4mHeader& header() const { return header_; }
  std::size_t position() const { return pos_; }

  /// Chroma is upsampled by sample replication, then converted with the
  /// full-range BT.601 matrix. Mono streams yield R = G = B = Y.
  std::optional<RgbFrame> next_rgb();
  /// Mono streams pass the luma plane through; colour streams go through
  /// next_rgb() and to_grayscale().
  std::optional<GrayFrame> next_gray();

  void rewind() { pos_ = data_start_; }

 private:
  /// Consumes one FRAME marker line; returns false at clean end of stream.
  bool begin_frame();

  Bytes bytes_;
  Y4mHeader header_;
  std::size_t data_start_ = 0;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Pixel operations

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayFrame to_grayscale(const RgbFrame& frame);

/// Bilinear interpolation on half-pixel centres, replicate border.
/// Same-size requests return an exact copy.
GrayFrame resize_bilinear(const GrayFrame& frame, int out_width, int out_height);

/// 3x3 Sobel gradient magnitude divided by its largest attainable value
/// (4 * sqrt(2) for inputs in [0,1]), replicate border.
Raster<float> sobel_magnitude(const GrayFrame& frame);

/// clamp(frame + alpha * sobel_magnitude(frame), 0, 1).
GrayFrame edge_overlay(const GrayFrame& frame, double alpha);

enum class EdgeOrder { resize_then_edge, edge_then_resize };

struct Preprocess {
  int width = 256;
  int height = 256;
  double edge_alpha = 0.3;
  EdgeOrder order = EdgeOrder::resize_then_edge;
  friend bool operator==(const Preprocess&, const Preprocess&) = default;
};

/// Working-resolution resize plus edge overlay in the configured order.
GrayFrame preprocess(const GrayFrame& frame, const Preprocess& options);

// ---------------------------------------------------------------------------
// Frame sources

enum class SourceKind { frame_directory, y4m_stream, memory, synthetic };

struct SourceInfo {
  SourceKind kind = SourceKind::memory;
  FrameRate rate;
  std::optional<std::size_t> frame_count;
};

/// Ordered single-consumer stream of grayscale frames. rewind() restarts
/// from the first frame so multi-pass samplers can replay a source.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual SourceInfo info() const = 0;
  virtual std::optional<GrayFrame> next() = 0;
  virtual void rewind() = 0;
};

/// Lists frame_NNNNNN.pgm files in lexicographic order. Any other regular
/// file in the directory is rejected with IoError.
std::vector<std::filesystem::path> list_frame_directory(const std::filesystem::path& dir);

/// Canonical frame filename: frame_000123.pgm.
std::string frame_filename(std::size_t index);

class PgmDirectorySource : public FrameSource {
 public:
  explicit PgmDirectorySource(const std::filesystem::path& dir, FrameRate rate = {});

  SourceInfo info() const override;
  std::optional<GrayFrame> next() override;
  void rewind() override { cursor_ = 0; }

  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::vector<std::filesystem::path> files_;
  FrameRate rate_;
  std::size_t cursor_ = 0;
};

class Y4mSource : public FrameSource {
 public:
  explicit Y4mSource(Bytes bytes) : reader_(std::move(bytes)) {}
  static std::unique_ptr<Y4mSource> open(const std::filesystem::path& path);

  SourceInfo info() const override;
  std::optional<GrayFrame> next() override { return reader_.next_gray(); }
  void rewind() override { reader_.rewind(); }

 private:
  Y4mReader reader_;
};

class MemorySource : public FrameSource {
 public:
  explicit MemorySource(std::vector<GrayFrame> frames, FrameRate rate = {})
      : frames_(std::move(frames)), rate_(rate) {}

  SourceInfo info() const override { return {SourceKind::memory, rate_, frames_.size()}; }
  std::optional<GrayFrame> next() override;
  void rewind() override { cursor_ = 0; }

 private:
  std::vector<GrayFrame> frames_;
  FrameRate rate_;
  std::size_t cursor_ = 0;
};

/// Applies a per-frame transform to another source (which it borrows).
class MappedSource : public FrameSource {
 public:
  MappedSource(FrameSource& inner, std::function<GrayFrame(const GrayFrame&)> fn)
      : inner_(inner), fn_(std::move(fn)) {}

  SourceInfo info() const override { return inner_.info(); }
  std::optional<GrayFrame> next() override;
  void rewind() override { inner_.rewind(); }

 private:
  FrameSource& inner_;
  std::function<GrayFrame(const GrayFrame&)> fn_;
};

// ---------------------------------------------------------------------------
// File helpers shared by every module that touches disk.

Bytes read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, ByteView bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace crowdflow
