#pragma once

// Ground-plane projective geometry for a pitched pinhole camera over a flat
// road: per-pixel scale (px per meter), depth, horizon and pitch estimation.
//
// Conventions
//   Pixel (row, col): row 0 at the top, col 0 at the left.
//   Signed image coordinates relative to the principal point:
//     u = col - principal_col          (positive to the right)
//     v = principal_row - row          (positive ABOVE the principal point)
//   Camera frame: z along the optical axis, y up, x to the right.
//   pitch > 0 tilts the optical axis down toward the road.
//
// With h0 = H / cos(pitch) a road point satisfies y = z tan(pitch) - h0, so
//   depth(v) = h0 f / (f tan(pitch) - v)
//   scale(v) = f / depth(v) = cos(pitch) / H * (f tan(pitch) - v)
// and the horizon sits at v = f tan(pitch).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "roadpersp/raster.hpp"

namespace roadpersp {

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct CameraRig {
  double focal_px = 0.0;
  double cam_height_m = 0.0;
  double pitch_rad = 0.0;
  double principal_row = 0.0;
  double principal_col = 0.0;
  int image_rows = 0;
  int image_cols = 0;

  /// Rig with the principal point at the image center.
  static CameraRig centered(double focal_px, double cam_height_m, double pitch_rad, int rows,
                            int cols) {
    return {focal_px, cam_height_m, pitch_rad, rows / 2.0, cols / 2.0, rows, cols};
  }

  void validate() const {
    const auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(focal_px) || !finite(cam_height_m) || !finite(pitch_rad) ||
        !finite(principal_row) || !finite(principal_col)) {
      throw GeometryError("CameraRig: non-finite parameter");
    }
    if (focal_px <= 0.0) throw GeometryError("CameraRig: focal_px must be > 0");
    if (cam_height_m <= 0.0) throw GeometryError("CameraRig: cam_height_m must be > 0");
    if (!(std::abs(pitch_rad) < std::numbers::pi / 2)) {
      throw GeometryError("CameraRig: |pitch_rad| must be < pi/2");
    }
    if (image_rows <= 0 || image_cols <= 0) {
      throw GeometryError("CameraRig: image dimensions must be positive");
    }
    if (principal_row < 0.0 || principal_row > image_rows || principal_col < 0.0 ||
        principal_col > image_cols) {
      throw GeometryError("CameraRig: principal point outside the image");
    }
  }

  /// Perpendicular distance scaled onto the tilted camera axis.
  double h0() const { return cam_height_m / std::cos(pitch_rad); }

  /// Row where the road plane reaches infinity.
  double horizon_row() const { return principal_row - focal_px * std::tan(pitch_rad); }

  friend bool operator==(const CameraRig&, const CameraRig&) = default;
};

struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

/// Signed horizontal offset from the principal point.
inline double image_u(const CameraRig& rig, PixelCoord pix) { return pix.col - rig.principal_col; }
/// Signed vertical offset from the principal point, positive upward.
inline double image_v(const CameraRig& rig, PixelCoord pix) { return rig.principal_row - pix.row; }

struct RoadPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// A road-plane location given by its lateral offset and its camera-frame
/// depth (distance along the optical axis).
struct GroundPoint {
  double lateral_m = 0.0;
  double depth_m = 0.0;
};

namespace detail {

inline void require_in_image(const CameraRig& rig, PixelCoord pix) {
  if (!std::isfinite(pix.row) || !std::isfinite(pix.col) || pix.row < 0.0 ||
      pix.col < 0.0 || pix.row >= rig.image_rows || pix.col >= rig.image_cols) {
    throw std::out_of_range("pixel (" + std::to_string(pix.row) + ", " +
                            std::to_string(pix.col) + ") outside the image");
  }
}

/// f tan(pitch) - v; positive strictly below the horizon.
inline double horizon_gap(const CameraRig& rig, PixelCoord pix) {
  return rig.focal_px * std::tan(rig.pitch_rad) - image_v(rig, pix);
}

}  // namespace detail

/// Apparent width in pixels of a 1 m wide object resting on the road at
/// `pix`. Zero at and above the horizon.
inline double scale_at(const CameraRig& rig, PixelCoord pix) {
  rig.validate();
  detail::require_in_image(rig, pix);
  const double p = std::cos(rig.pitch_rad) / rig.cam_height_m * detail::horizon_gap(rig, pix);
  return p > 0.0 ? p : 0.0;
}

/// Camera-frame depth of the road point seen at `pix`.
inline double depth_at(const CameraRig& rig, PixelCoord pix) {
  rig.validate();
  detail::require_in_image(rig, pix);
  const double gap = detail::horizon_gap(rig, pix);
  if (!(gap > 0.0)) {
    throw GeometryError("depth_at: pixel row " + std::to_string(pix.row) +
                        " is at or above the horizon (no road intersection)");
  }
  return rig.h0() * rig.focal_px / gap;
}

/// Camera-frame coordinates of the road point at (lateral, depth).
inline RoadPoint road_point(const CameraRig& rig, GroundPoint ground) {
  return {ground.lateral_m, ground.depth_m * std::tan(rig.pitch_rad) - rig.h0(), ground.depth_m};
}

/// Image position of a road point. The result may lie outside the image.
inline PixelCoord project_road_point(const CameraRig& rig, GroundPoint ground) {
  rig.validate();
  if (!(ground.depth_m > 0.0) || !std::isfinite(ground.depth_m) ||
      !std::isfinite(ground.lateral_m)) {
    throw GeometryError("project_road_point: depth must be finite and > 0");
  }
  const RoadPoint b = road_point(rig, ground);
  const double u = rig.focal_px * b.x / b.z;
  const double v = rig.focal_px * b.y / b.z;
  return {rig.principal_row - v, rig.principal_col + u};
}

/// Inverse of project_road_point for pixels strictly below the horizon. Does
/// not require the pixel to be inside the image.
inline GroundPoint back_project(const CameraRig& rig, PixelCoord pix) {
  rig.validate();
  const double gap = detail::horizon_gap(rig, pix);
  if (!(gap > 0.0)) throw GeometryError("back_project: pixel at or above the horizon");
  const double z = rig.h0() * rig.focal_px / gap;
  return {image_u(rig, pix) * z / rig.focal_px, z};
}

/// Distance along the road from the point below the camera, for a given
/// camera-frame depth. The road grid is laid out in these units.
inline double road_distance_from_depth(const CameraRig& rig, double depth_m) {
  return (depth_m - rig.cam_height_m * std::sin(rig.pitch_rad)) / std::cos(rig.pitch_rad);
}

inline double depth_from_road_distance(const CameraRig& rig, double distance_m) {
  return distance_m * std::cos(rig.pitch_rad) + rig.cam_height_m * std::sin(rig.pitch_rad);
}

struct PerspectiveMap {
  FloatRaster values;  // px per meter, 0 at and above the horizon
  double horizon_row = 0.0;
  CameraRig rig;
};

/// Scale map over the full image, evaluated at integer pixel positions.
inline PerspectiveMap perspective_map(const CameraRig& rig) {
  rig.validate();
  PerspectiveMap map{FloatRaster(rig.image_rows, rig.image_cols), rig.horizon_row(), rig};
  for (int r = 0; r < rig.image_rows; ++r) {
    const auto value = static_cast<float>(scale_at(rig, {static_cast<double>(r), 0.0}));
    auto row = map.values.row(r);
    std::fill(row.begin(), row.end(), value);
  }
  return map;
}

inline constexpr double kPerspectiveNormalization = 1.0 / 400.0;

/// Map values scaled to roughly [0, 1] for use as a network input channel.
inline FloatRaster normalize(const PerspectiveMap& map) {
  FloatRaster out(map.values.rows(), map.values.cols());
  auto src = map.values.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(static_cast<double>(src[i]) * kPerspectiveNormalization);
  }
  return out;
}

inline constexpr int kDefaultHorizonOffsetPx = 16;

/// Pitch from the top edge of a road segmentation. The horizon is assumed to
/// lie `horizon_offset_px` rows above the uppermost road pixel.
inline double estimate_pitch(const LabelMap& road_mask, double focal_px, double principal_row,
                             int horizon_offset_px = kDefaultHorizonOffsetPx) {
  if (!(focal_px > 0.0) || !std::isfinite(focal_px)) {
    throw GeometryError("estimate_pitch: focal_px must be > 0");
  }
  for (int r = 0; r < road_mask.rows(); ++r) {
    const auto row = road_mask.row(r);
    if (std::any_of(row.begin(), row.end(), [](std::uint32_t x) { return x != 0; })) {
      const double horizon = static_cast<double>(r - horizon_offset_px);
      return std::atan((principal_row - horizon) / focal_px);
    }
  }
  throw GeometryError("estimate_pitch: road mask is empty");
}

}  // namespace roadpersp
