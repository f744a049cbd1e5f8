#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "crowdflow/frameio.hpp"
#include "crowdflow/raster.hpp"

namespace crowdflow {

/// Per-pixel displacement field in pixels/frame.
struct FlowField {
  Raster<float> dx;
  Raster<float> dy;

  FlowField() = default;
  FlowField(int width, int height) : dx(width, height), dy(width, height) {}

  int width() const { return dx.width(); }
  int height() const { return dx.height(); }
  friend bool operator==(const FlowField&, const FlowField&) = default;
};

/// Local quadratic model f(p) ~ p^T A p + b^T p + c around every pixel,
/// with p = (x, y) in pixel offsets. A is stored as (a11, a22, a12).
struct PolyCoeffs {
  double c = 0.0;
  double bx = 0.0;
  double by = 0.0;
  double a11 = 0.0;
  double a22 = 0.0;
  double a12 = 0.0;
};

using PolyExpansion = Raster<PolyCoeffs>;

struct FlowParams {
  int pyramid_levels = 3;
  double pyramid_scale = 0.5;
  int window_radius = 7;
  int iterations_per_level = 3;
  int poly_radius = 3;
  double poly_sigma = 1.1;

  /// Throws ArgumentError for out-of-contract values.
  void validate() const;
  friend bool operator==(const FlowParams&, const FlowParams&) = default;
};

struct MotionStats {
  double mean_magnitude = 0.0;
  double max_magnitude = 0.0;
};

/// Weighted least-squares fit of the quadratic model over a (2r+1)^2
/// neighbourhood with Gaussian applicability, via separable correlations.
PolyExpansion poly_expand(const GrayFrame& frame, int poly_radius, double poly_sigma);

/// Gaussian image pyramid and polynomial expansion of every level. Building
/// one per frame lets a frame serve as both "next" and later "reference"
/// without re-expanding it.
class FlowPyramid {
 public:
  FlowPyramid(const GrayFrame& frame, const FlowParams& params);

  int levels() const { return static_cast<int>(expansions_.size()); }
  const PolyExpansion& level(int i) const { return expansions_[static_cast<std::size_t>(i)]; }
  int width() const { return expansions_.front().width(); }
  int height() const { return expansions_.front().height(); }

 private:
  std::vector<PolyExpansion> expansions_;
};

/// Number of pyramid levels actually used for a frame of this size: the
/// requested count, reduced so the coarsest level stays at least 8x8.
int effective_levels(int width, int height, const FlowParams& params);

/// Coarse-to-fine Farneback flow from prev to next.
FlowField farneback_flow(const GrayFrame& prev, const GrayFrame& next, const FlowParams& params);
FlowField farneback_flow(const FlowPyramid& prev, const FlowPyramid& next, const FlowParams& params);

Raster<float> motion_magnitude(const FlowField& flow);
MotionStats mean_motion(const FlowField& flow);

// FLO1 container: "FLO1", u32 width, u32 height, u32 reserved (0), then
// interleaved little-endian float32 dx,dy pairs in row-major order.
Bytes encode_flo1(const FlowField& flow);
FlowField decode_flo1(ByteView bytes);

namespace detail {

/// 5-tap binomial blur then resample by `scale`; one pyramid step.
GrayFrame pyramid_down(const GrayFrame& frame, int out_width, int out_height);

}  // namespace detail

}  // namespace crowdflow
