#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "roadpersp/cutout_pool.hpp"
#include "roadpersp/geometry.hpp"
#include "roadpersp/random.hpp"
#include "roadpersp/raster.hpp"

namespace roadpersp {

enum class InjectionMode { perspective, uniform };

inline const char* to_string(InjectionMode m) {
  return m == InjectionMode::perspective ? "perspective" : "uniform";
}

inline InjectionMode parse_injection_mode(const std::string& s) {
  if (s == "perspective") return InjectionMode::perspective;
  if (s == "uniform") return InjectionMode::uniform;
  throw std::invalid_argument("unknown injection mode '" + s + "'");
}

struct InjectionConfig {
  double grid_depth_m = 3.5;    // spacing of grid lines along the road
  double grid_lateral_m = 1.0;  // spacing across the road
  double jitter_sigma_m = 0.5;
  double obj_min_m = 0.25;
  double obj_max_m = 0.55;
  double fill_probability = 0.5;
  InjectionMode mode = InjectionMode::perspective;
  std::uint64_t master_seed = 0;
  int feather_px = 1;
  double noise_magnitude = 0.0;
  /// Grid lines stop where obj_max_m maps to fewer pixels than this.
  double min_object_px = 2.0;

  void validate() const {
    if (!(grid_depth_m > 0.0) || !(grid_lateral_m > 0.0)) {
      throw std::invalid_argument("InjectionConfig: grid spacings must be > 0");
    }
    if (!(jitter_sigma_m >= 0.0)) throw std::invalid_argument("InjectionConfig: jitter_sigma_m < 0");
    if (!(obj_min_m > 0.0) || !(obj_min_m <= obj_max_m) || !std::isfinite(obj_max_m)) {
      throw std::invalid_argument("InjectionConfig: need 0 < obj_min_m <= obj_max_m");
    }
    if (!(fill_probability >= 0.0 && fill_probability <= 1.0)) {
      throw std::invalid_argument("InjectionConfig: fill_probability outside [0, 1]");
    }
    if (feather_px < 0) throw std::invalid_argument("InjectionConfig: feather_px < 0");
    if (!(noise_magnitude >= 0.0)) throw std::invalid_argument("InjectionConfig: noise_magnitude < 0");
    if (!(min_object_px > 0.0)) throw std::invalid_argument("InjectionConfig: min_object_px <= 0");
  }
};

/// Road-plane grid intersection, in lateral meters and meters along the road.
struct GridNode {
  double lateral_m = 0.0;
  double distance_m = 0.0;
};

struct AnchorPoint {
  GroundPoint ground;             // jittered position: lateral + camera depth
  double road_distance_m = 0.0;   // jittered position along the road
  std::optional<GridNode> node;   // unjittered grid node; absent in uniform mode
  PixelCoord pixel;
  double scale_px_per_m = 0.0;
};

struct PlacedBox {
  int row = 0;  // top-left, may lie outside the image
  int col = 0;
  int h = 0;
  int w = 0;
};

struct SizeRange {
  double min_px = 0.0;
  double max_px = 0.0;
};

struct InjectionRecord {
  std::uint32_t instance_id = 0;  // value in the label map
  AnchorPoint anchor;
  std::string cutout_source_id;
  SizeRange pixel_size_range;
  double placed_size_px = 0.0;
  PlacedBox placed_bbox;
  std::int64_t visible_px = 0;
};

struct SkipRecord {
  AnchorPoint anchor;
  SizeRange pixel_size_range;
  std::string reason;
};

struct FrameSynthesis {
  RgbImage image;
  LabelMap labels;  // 0 = background, k = record with instance_id k
  std::vector<InjectionRecord> records;
  std::vector<InjectionRecord> occluded;  // composited, then fully covered; instance_id 0
  std::vector<SkipRecord> skips;
};

/// Expected pixel size of an obstacle at the anchor.
inline SizeRange pixel_size_range(const AnchorPoint& anchor, const InjectionConfig& cfg) {
  if (!(anchor.scale_px_per_m > 0.0)) {
    throw GeometryError("pixel_size_range: anchor scale must be > 0 (anchor at/above horizon)");
  }
  return {cfg.obj_min_m * anchor.scale_px_per_m, cfg.obj_max_m * anchor.scale_px_per_m};
}

namespace detail {

inline std::optional<std::pair<int, int>> nearest_pixel(const LabelMap& mask, PixelCoord p) {
  if (!std::isfinite(p.row) || !std::isfinite(p.col)) return std::nullopt;
  const double r = std::round(p.row);
  const double c = std::round(p.col);
  if (r < 0 || c < 0 || r >= mask.rows() || c >= mask.cols()) return std::nullopt;
  return std::pair{static_cast<int>(r), static_cast<int>(c)};
}

/// An anchor at `pix` if it is a legal placement site.
inline std::optional<AnchorPoint> make_anchor(const CameraRig& rig, const LabelMap& road_mask,
                                              PixelCoord pix) {
  const auto idx = nearest_pixel(road_mask, pix);
  if (!idx || road_mask(idx->first, idx->second) == 0) return std::nullopt;
  if (pix.row < 0.0 || pix.col < 0.0 || pix.row >= rig.image_rows || pix.col >= rig.image_cols) {
    return std::nullopt;
  }
  const double scale = scale_at(rig, pix);
  if (!(scale > 0.0)) return std::nullopt;
  AnchorPoint a;
  a.pixel = pix;
  a.ground = back_project(rig, pix);
  a.road_distance_m = road_distance_from_depth(rig, a.ground.depth_m);
  a.scale_px_per_m = scale;
  return a;
}

struct RoadExtent {
  int top_row = -1;
  int bottom_row = -1;  // lowest road row strictly below the horizon
  int min_col = 0;
  int max_col = 0;
};

inline std::optional<RoadExtent> road_extent(const CameraRig& rig, const LabelMap& road_mask) {
  RoadExtent e{-1, -1, road_mask.cols(), -1};
  const double horizon = rig.horizon_row();
  for (int r = 0; r < road_mask.rows(); ++r) {
    if (!(r > horizon)) continue;
    const auto row = road_mask.row(r);
    for (int c = 0; c < road_mask.cols(); ++c) {
      if (row[c] == 0) continue;
      if (e.top_row < 0) e.top_row = r;
      e.bottom_row = r;
      e.min_col = std::min(e.min_col, c);
      e.max_col = std::max(e.max_col, c);
    }
  }
  if (e.bottom_row < 0) return std::nullopt;
  return e;
}

/// Road columns covered in `row`, or nullopt if none.
inline std::optional<std::pair<int, int>> road_columns(const LabelMap& road_mask, int row) {
  const auto values = road_mask.row(row);
  int lo = -1, hi = -1;
  for (int c = 0; c < road_mask.cols(); ++c) {
    if (values[c] == 0) continue;
    if (lo < 0) lo = c;
    hi = c;
  }
  if (lo < 0) return std::nullopt;
  return std::pair{lo, hi};
}

/// Per-pixel compositing weight: 1 in the interior, a linear ramp over the
/// outermost `feather_px` rings of the mask, 0 outside.
inline Raster<float> feather_weights(const BinaryMask& alpha, int feather_px) {
  Raster<float> w(alpha.rows(), alpha.cols(), 0.0f);
  if (feather_px <= 0) {
    for (int r = 0; r < alpha.rows(); ++r)
      for (int c = 0; c < alpha.cols(); ++c) w(r, c) = alpha(r, c) ? 1.0f : 0.0f;
    return w;
  }
  // 4-neighbour distance to the nearest non-mask pixel (outside the patch counts).
  Raster<int> dist(alpha.rows(), alpha.cols(), -1);
  std::deque<std::pair<int, int>> queue;
  constexpr int dr[] = {-1, 1, 0, 0};
  constexpr int dc[] = {0, 0, -1, 1};
  for (int r = 0; r < alpha.rows(); ++r) {
    for (int c = 0; c < alpha.cols(); ++c) {
      if (!alpha(r, c)) continue;
      for (int k = 0; k < 4; ++k) {
        const int nr = r + dr[k], nc = c + dc[k];
        if (!alpha.contains(nr, nc) || !alpha(nr, nc)) {
          dist(r, c) = 1;
          queue.emplace_back(r, c);
          break;
        }
      }
    }
  }
  while (!queue.empty()) {
    const auto [r, c] = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int nr = r + dr[k], nc = c + dc[k];
      if (!alpha.contains(nr, nc) || !alpha(nr, nc) || dist(nr, nc) >= 0) continue;
      dist(nr, nc) = dist(r, c) + 1;
      queue.emplace_back(nr, nc);
    }
  }
  for (int r = 0; r < alpha.rows(); ++r) {
    for (int c = 0; c < alpha.cols(); ++c) {
      if (!alpha(r, c)) continue;
      const int d = dist(r, c);
      w(r, c) = d > feather_px ? 1.0f : static_cast<float>(d) / static_cast<float>(feather_px + 1);
    }
  }
  return w;
}

inline std::uint8_t blend(std::uint8_t src, std::uint8_t dst, float w) {
  if (w >= 1.0f) return src;
  const double v = w * static_cast<double>(src) + (1.0 - w) * static_cast<double>(dst);
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// Pastes `cut` with the bottom-center of its bbox on `anchor`, unscaled.
inline PlacedBox composite(RgbImage& image, LabelMap& labels, const ObjectCutout& cut,
                           PixelCoord anchor, std::uint32_t id, int feather_px) {
  const int bottom = static_cast<int>(std::lround(anchor.row));
  const int center = static_cast<int>(std::lround(anchor.col));
  const PlacedBox box{bottom - cut.bbox_h + 1, center - cut.bbox_w / 2, cut.bbox_h, cut.bbox_w};
  const Raster<float> weights = feather_weights(cut.alpha, feather_px);
  for (int r = 0; r < cut.bbox_h; ++r) {
    for (int c = 0; c < cut.bbox_w; ++c) {
      const float w = weights(r, c);
      const int ir = box.row + r, ic = box.col + c;
      if (w <= 0.0f || !image.contains(ir, ic)) continue;
      Rgb& dst = image(ir, ic);
      const Rgb& src = cut.pixels(r, c);
      dst = {blend(src.r, dst.r, w), blend(src.g, dst.g, w), blend(src.b, dst.b, w)};
      labels(ir, ic) = id;
    }
  }
  return box;
}

struct Placement {
  AnchorPoint anchor;
  SizeRange range;
  const ObjectCutout* cutout = nullptr;
};

}  // namespace detail

/// Jittered road-plane grid projected into the image. Lines run every
/// grid_depth_m along the road, starting at the nearest visible road row and
/// ending where obj_max_m shrinks below min_object_px; laterals every
/// grid_lateral_m across the road width seen at each line. Nodes are
/// returned near to far, left to right. Anchors that land outside the
/// image, at/above the horizon or off the road mask are dropped.
inline std::vector<AnchorPoint> build_grid(const CameraRig& rig, const LabelMap& road_mask,
                                           const InjectionConfig& cfg, RandomSource& rng) {
  rig.validate();
  cfg.validate();
  if (road_mask.rows() != rig.image_rows || road_mask.cols() != rig.image_cols) {
    throw std::invalid_argument("build_grid: road mask and rig dimensions differ");
  }
  const auto extent = detail::road_extent(rig, road_mask);
  if (!extent) return {};

  const double near_depth = depth_at(rig, {static_cast<double>(extent->bottom_row), 0.0});
  const double near_distance = road_distance_from_depth(rig, near_depth);
  const double far_depth_limit = rig.focal_px * cfg.obj_max_m / cfg.min_object_px;
  // Jitter cannot pull a node from beyond this line into the visible road.
  const double top_depth = depth_at(rig, {static_cast<double>(extent->top_row), 0.0});
  const double far_distance_limit =
      road_distance_from_depth(rig, top_depth) + 6.0 * cfg.jitter_sigma_m + cfg.grid_depth_m;

  std::vector<AnchorPoint> anchors;
  for (int k = 0;; ++k) {
    const double distance = near_distance + k * cfg.grid_depth_m;
    const double depth = depth_from_road_distance(rig, distance);
    if (depth > far_depth_limit || distance > far_distance_limit) break;

    const PixelCoord line = project_road_point(rig, {0.0, depth});
    const int line_row = std::clamp(static_cast<int>(std::lround(line.row)), 0, rig.image_rows - 1);
    const auto cols = detail::road_columns(road_mask, line_row)
                          .value_or(std::pair{extent->min_col, extent->max_col});
    const double x_lo = (cols.first - rig.principal_col) * depth / rig.focal_px;
    const double x_hi = (cols.second - rig.principal_col) * depth / rig.focal_px;
    const auto m_lo = static_cast<long>(std::floor(x_lo / cfg.grid_lateral_m));
    const auto m_hi = static_cast<long>(std::ceil(x_hi / cfg.grid_lateral_m));

    for (long m = m_lo; m <= m_hi; ++m) {
      const GridNode node{m * cfg.grid_lateral_m, distance};
      double lateral = node.lateral_m;
      double jittered_distance = node.distance_m;
      if (cfg.jitter_sigma_m > 0.0) {
        lateral += rng.normal(0.0, cfg.jitter_sigma_m);
        jittered_distance += rng.normal(0.0, cfg.jitter_sigma_m);
      }
      const double jittered_depth = depth_from_road_distance(rig, jittered_distance);
      if (!(jittered_depth > 0.0)) continue;
      const PixelCoord pix = project_road_point(rig, {lateral, jittered_depth});
      if (auto anchor = detail::make_anchor(rig, road_mask, pix)) {
        anchor->node = node;
        anchors.push_back(*anchor);
      }
    }
  }
  return anchors;
}

/// Zero-mean Gaussian noise with standard deviation `magnitude` (in 8-bit
/// levels) added to every channel, rounded and clamped to [0, 255].
inline RgbImage add_noise(const RgbImage& image, double magnitude, RandomSource& rng) {
  if (!(magnitude >= 0.0)) throw std::invalid_argument("add_noise: magnitude must be >= 0");
  RgbImage out = image;
  if (magnitude == 0.0) return out;
  const auto perturb = [&](std::uint8_t v) {
    const double x = static_cast<double>(v) + rng.normal(0.0, magnitude);
    return static_cast<std::uint8_t>(std::clamp(std::lround(x), 0L, 255L));
  };
  for (Rgb& p : out.values()) p = {perturb(p.r), perturb(p.g), perturb(p.b)};
  return out;
}

namespace detail {

inline void check_frame_inputs(const RgbImage& image, const LabelMap& road_mask,
                               const CameraRig& rig) {
  require_same_shape(image, road_mask, "synthesize_frame");
  rig.validate();
  if (image.rows() != rig.image_rows || image.cols() != rig.image_cols) {
    throw std::invalid_argument("synthesize_frame: image and rig dimensions differ");
  }
}

/// Composites placements in order, then moves fully covered objects to
/// `occluded` and renumbers the label map densely in placement order.
inline FrameSynthesis composite_all(const RgbImage& image, const std::vector<Placement>& placements,
                                    std::vector<SkipRecord> skips, const InjectionConfig& cfg,
                                    std::uint64_t frame_seed) {
  FrameSynthesis out{image, LabelMap(image.rows(), image.cols(), 0), {}, {}, std::move(skips)};
  std::vector<InjectionRecord> placed;
  for (const auto& p : placements) {
    const auto id = static_cast<std::uint32_t>(placed.size() + 1);
    InjectionRecord rec;
    rec.instance_id = id;
    rec.anchor = p.anchor;
    rec.cutout_source_id = p.cutout->source_id;
    rec.pixel_size_range = p.range;
    rec.placed_size_px = p.cutout->overall_size_px;
    rec.placed_bbox = composite(out.image, out.labels, *p.cutout, p.anchor.pixel, id, cfg.feather_px);
    placed.push_back(std::move(rec));
  }

  for (auto v : out.labels.values()) {
    if (v != 0) ++placed[v - 1].visible_px;
  }
  std::vector<std::uint32_t> remap(placed.size() + 1, 0);
  for (auto& rec : placed) {
    if (rec.visible_px == 0) {
      rec.instance_id = 0;
      out.occluded.push_back(std::move(rec));
      continue;
    }
    remap[rec.instance_id] = static_cast<std::uint32_t>(out.records.size() + 1);
    rec.instance_id = remap[rec.instance_id];
    out.records.push_back(std::move(rec));
  }
  for (auto& v : out.labels.values()) v = remap[v];

  if (cfg.noise_magnitude > 0.0) {
    RandomSource noise_rng(derive_seed(frame_seed, "noise"));
    out.image = add_noise(out.image, cfg.noise_magnitude, noise_rng);
  }
  return out;
}

}  // namespace detail

/// Perspective-aware synthesis. A Bernoulli(fill_probability) subset of the
/// grid anchors each receives a cut-out whose overall size lies in the
/// anchor's pixel size range; nothing is rescaled. Anchors are filled far to
/// near so nearer objects cover farther ones.
inline FrameSynthesis synthesize_frame(const RgbImage& image, const LabelMap& road_mask,
                                       const CameraRig& rig, const CutoutPool& pool,
                                       const InjectionConfig& cfg, const std::string& frame_id) {
  detail::check_frame_inputs(image, road_mask, rig);
  const std::uint64_t seed = derive_seed(cfg.master_seed, frame_id);
  RandomSource rng(seed);

  std::vector<AnchorPoint> anchors = build_grid(rig, road_mask, cfg, rng);
  std::stable_sort(anchors.begin(), anchors.end(), [](const auto& a, const auto& b) {
    return a.ground.depth_m > b.ground.depth_m;
  });

  std::vector<detail::Placement> placements;
  std::vector<SkipRecord> skips;
  for (const auto& anchor : anchors) {
    if (!rng.bernoulli(cfg.fill_probability)) continue;
    const SizeRange range = pixel_size_range(anchor, cfg);
    const ObjectCutout* cut = pool.query_by_size(range.min_px, range.max_px, rng);
    if (cut == nullptr) {
      skips.push_back({anchor, range, "no candidate"});
      continue;
    }
    placements.push_back({anchor, range, cut});
  }
  return detail::composite_all(image, placements, std::move(skips), cfg, seed);
}

/// Baseline: as many draws as the perspective grid has anchors, each at a
/// uniformly random road pixel below the horizon, each filled with
/// probability fill_probability by a uniformly random cut-out from the whole
/// pool regardless of size.
inline FrameSynthesis synthesize_frame_uniform(const RgbImage& image, const LabelMap& road_mask,
                                               const CameraRig& rig, const CutoutPool& pool,
                                               const InjectionConfig& cfg,
                                               const std::string& frame_id) {
  detail::check_frame_inputs(image, road_mask, rig);
  const std::uint64_t seed = derive_seed(cfg.master_seed, frame_id);
  RandomSource rng(seed);

  const std::size_t draws = build_grid(rig, road_mask, cfg, rng).size();
  std::vector<std::pair<int, int>> road_pixels;
  const double horizon = rig.horizon_row();
  for (int r = 0; r < road_mask.rows(); ++r) {
    if (!(r > horizon)) continue;
    for (int c = 0; c < road_mask.cols(); ++c) {
      if (road_mask(r, c) != 0) road_pixels.emplace_back(r, c);
    }
  }

  std::vector<AnchorPoint> sites;
  if (!road_pixels.empty()) {
    for (std::size_t i = 0; i < draws; ++i) {
      const auto [r, c] = road_pixels[rng.below(road_pixels.size())];
      if (auto a = detail::make_anchor(rig, road_mask, {static_cast<double>(r), static_cast<double>(c)})) {
        sites.push_back(*a);
      }
    }
  }
  std::stable_sort(sites.begin(), sites.end(),
                   [](const auto& a, const auto& b) { return a.pixel.row < b.pixel.row; });

  std::vector<detail::Placement> placements;
  std::vector<SkipRecord> skips;
  for (const auto& site : sites) {
    if (!rng.bernoulli(cfg.fill_probability)) continue;
    const SizeRange range = pixel_size_range(site, cfg);
    const ObjectCutout* cut = pool.sample_any(rng);
    if (cut == nullptr) {
      skips.push_back({site, range, "empty pool"});
      continue;
    }
    placements.push_back({site, range, cut});
  }
  return detail::composite_all(image, placements, std::move(skips), cfg, seed);
}

/// Dispatches on cfg.mode.
inline FrameSynthesis synthesize(const RgbImage& image, const LabelMap& road_mask,
                                 const CameraRig& rig, const CutoutPool& pool,
                                 const InjectionConfig& cfg, const std::string& frame_id) {
  return cfg.mode == InjectionMode::perspective
             ? synthesize_frame(image, road_mask, rig, pool, cfg, frame_id)
             : synthesize_frame_uniform(image, road_mask, rig, pool, cfg, frame_id);
}

}  // namespace roadpersp
