#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "crowdflow/frameio.hpp"
#include "crowdflow/raster.hpp"

namespace crowdflow {

struct HeadPoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const HeadPoint&, const HeadPoint&) = default;
};

using HeadAnnotations = std::vector<HeadPoint>;

/// Non-negative persons-per-pixel raster; its sum is a crowd count. Held in
/// double precision so count conservation survives summation; DMP1 files
/// store float32.
class DensityMap : public Raster<double> {
 public:
  using Raster<double>::Raster;
  explicit DensityMap(Raster<double> r) : Raster<double>(std::move(r)) {}

  double integral() const;
  double max_value() const;
  /// Throws ArgumentError on negative or non-finite values.
  void validate() const;
};

struct KernelSpec {
  double sigma = 2.0;
  double truncation_radius = 8.0;

  void validate() const;
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

struct FusionConfig {
  double accept_gamma = 0.5;

  void validate() const;
  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

/// Sum of truncated isotropic Gaussians, one per head. Pixel (i, j) sits at
/// coordinates (i, j). Each kernel is renormalised over its full square
/// support so it carries unit mass; mass falling outside the raster is lost.
DensityMap render_density(const HeadAnnotations& points, int width, int height, const KernelSpec& kernel);

/// Peak of a single kernel centred exactly on a pixel.
double kernel_peak(const KernelSpec& kernel);

/// True where value > tau.
Mask threshold_map(const DensityMap& map, double tau);

/// Number of 8-connected components of set pixels.
int count_blobs(const Mask& mask);

int estimate_count(const DensityMap& map, double tau);

/// Zero-normalised cross-correlation. Two constant maps score 1 when equal
/// and 0 otherwise; exactly one constant map scores 0.
double similarity(const DensityMap& a, const DensityMap& b);

struct FusionResult {
  DensityMap map;
  std::size_t anchor = 0;
  std::vector<std::size_t> accepted;  // includes the anchor
};

/// Anchor = map with the highest mean similarity to the others (ties to the
/// lowest index); output = pixelwise mean of the anchor and every map whose
/// similarity to it is >= accept_gamma.
FusionResult fuse_maps_detailed(const std::vector<DensityMap>& maps, const FusionConfig& config);
DensityMap fuse_maps(const std::vector<DensityMap>& maps, const FusionConfig& config);

// DMP1 container: "DMP1", u32 width, u32 height, u32 reserved (0), then
// little-endian float32 values in row-major order.
Bytes encode_dmp1(const DensityMap& map);
DensityMap decode_dmp1(ByteView bytes);
DensityMap read_dmp1(const std::filesystem::path& path);
void write_dmp1(const std::filesystem::path& path, const DensityMap& map);

/// Map divided by its maximum, as a graymap (all zero when the map is zero).
GrayFrame visualize(const DensityMap& map);

/// Blends white over the frame with per-pixel alpha = opacity * map / max.
/// An all-zero map leaves the frame untouched.
GrayFrame overlay(const GrayFrame& frame, const DensityMap& map, double opacity = 0.5);

/// One "x,y" pair per line; blank lines ignored.
HeadAnnotations parse_annotations(std::string_view text);
std::string format_annotations(const HeadAnnotations& points);

}  // namespace crowdflow
