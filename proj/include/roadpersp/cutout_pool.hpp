#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "roadpersp/components.hpp"
#include "roadpersp/random.hpp"
#include "roadpersp/raster.hpp"

namespace roadpersp {

/// Mean of sqrt(area), bbox width and bbox height.
inline double overall_size(std::int64_t area_px, int bbox_w, int bbox_h) {
  return (std::sqrt(static_cast<double>(area_px)) + bbox_w + bbox_h) / 3.0;
}

struct ObjectCutout {
  RgbImage pixels;    // bbox_h x bbox_w crop of the source frame
  BinaryMask alpha;   // 1 on the instance support
  int bbox_w = 0;
  int bbox_h = 0;
  std::int64_t area_px = 0;
  double overall_size_px = 0.0;
  std::string source_id;
  std::string class_label;

  /// Builds the derived fields from a patch and its mask.
  static ObjectCutout from_patch(RgbImage pixels, BinaryMask alpha, std::string source_id,
                                 std::string class_label) {
    require_same_shape(pixels, alpha, "ObjectCutout");
    ObjectCutout c;
    c.bbox_h = pixels.rows();
    c.bbox_w = pixels.cols();
    c.area_px = std::count_if(alpha.values().begin(), alpha.values().end(),
                              [](std::uint8_t a) { return a != 0; });
    c.overall_size_px = overall_size(c.area_px, c.bbox_w, c.bbox_h);
    c.pixels = std::move(pixels);
    c.alpha = std::move(alpha);
    c.source_id = std::move(source_id);
    c.class_label = std::move(class_label);
    return c;
  }
};

/// Maps label values to class names. Values >= instance_divisor encode
/// class_id * instance_divisor + instance (the Cityscapes instanceIds
/// scheme); smaller values are bare class ids with no instance split.
struct ClassTable {
  std::map<std::uint32_t, std::string> names;
  std::uint32_t instance_divisor = 1000;

  std::optional<std::string> name_of(std::uint32_t class_id) const {
    if (auto it = names.find(class_id); it != names.end()) return it->second;
    return std::nullopt;
  }

  /// Cityscapes label ids for the object classes cut-outs are taken from.
  static ClassTable cityscapes() {
    return {{{19, "traffic light"},
             {20, "traffic sign"},
             {24, "person"},
             {25, "rider"},
             {26, "car"},
             {27, "truck"},
             {28, "bus"},
             {31, "train"},
             {32, "motorcycle"},
             {33, "bicycle"}},
            1000};
  }
};

namespace detail {

inline bool touches_border(int r0, int c0, int r1, int c1, int rows, int cols) {
  return r0 == 0 || c0 == 0 || r1 == rows - 1 || c1 == cols - 1;
}

/// Crops one instance given the set of its pixels; nullopt when it touches
/// the frame border.
inline std::optional<ObjectCutout> crop_instance(const RgbImage& image,
                                                 const std::vector<std::pair<int, int>>& support,
                                                 std::string source_id, std::string class_label) {
  int r0 = image.rows(), c0 = image.cols(), r1 = -1, c1 = -1;
  for (auto [r, c] : support) {
    r0 = std::min(r0, r);
    c0 = std::min(c0, c);
    r1 = std::max(r1, r);
    c1 = std::max(c1, c);
  }
  if (support.empty() || touches_border(r0, c0, r1, c1, image.rows(), image.cols())) {
    return std::nullopt;
  }
  RgbImage pixels(r1 - r0 + 1, c1 - c0 + 1);
  BinaryMask alpha(r1 - r0 + 1, c1 - c0 + 1, 0);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) pixels(r - r0, c - c0) = image(r, c);
  }
  for (auto [r, c] : support) alpha(r - r0, c - c0) = 1;
  return ObjectCutout::from_patch(std::move(pixels), std::move(alpha), std::move(source_id),
                                  std::move(class_label));
}

}  // namespace detail

/// One cut-out per instance of an eligible class, in ascending label order.
/// Instances touching the frame border are skipped. Bare class regions
/// (label < instance_divisor) of an eligible class are split into
/// 8-connected components, one cut-out each.
inline std::vector<ObjectCutout> extract_cutouts(const RgbImage& image,
                                                 const LabelMap& instance_labels,
                                                 const std::set<std::string>& eligible_classes,
                                                 const ClassTable& table,
                                                 const std::string& frame_id = "frame") {
  require_same_shape(image, instance_labels, "extract_cutouts");
  if (table.instance_divisor == 0) throw std::invalid_argument("ClassTable: instance_divisor is 0");

  std::map<std::uint32_t, std::vector<std::pair<int, int>>> support;
  for (int r = 0; r < instance_labels.rows(); ++r) {
    for (int c = 0; c < instance_labels.cols(); ++c) {
      const std::uint32_t v = instance_labels(r, c);
      if (v == 0) continue;
      const std::uint32_t cls = v >= table.instance_divisor ? v / table.instance_divisor : v;
      const auto name = table.name_of(cls);
      if (name && eligible_classes.contains(*name)) support[v].emplace_back(r, c);
    }
  }

  std::vector<ObjectCutout> out;
  for (const auto& [value, pixels] : support) {
    const bool has_instances = value >= table.instance_divisor;
    const std::uint32_t cls = has_instances ? value / table.instance_divisor : value;
    const std::string name = *table.name_of(cls);
    const std::string base = frame_id + "#" + std::to_string(value);
    if (has_instances) {
      if (auto cut = detail::crop_instance(image, pixels, base, name)) out.push_back(std::move(*cut));
      continue;
    }
    BinaryMask region(image.rows(), image.cols(), 0);
    for (auto [r, c] : pixels) region(r, c) = 1;
    const LabelMap comps = components(region);
    std::map<std::uint32_t, std::vector<std::pair<int, int>>> parts;
    for (auto [r, c] : pixels) parts[comps(r, c)].emplace_back(r, c);
    for (const auto& [k, part] : parts) {
      if (auto cut = detail::crop_instance(image, part, base + ".c" + std::to_string(k), name)) {
        out.push_back(std::move(*cut));
      }
    }
  }
  return out;
}

/// Immutable collection of cut-outs ordered by overall size.
class CutoutPool {
 public:
  CutoutPool() = default;
  explicit CutoutPool(std::vector<ObjectCutout> cutouts) : cutouts_(std::move(cutouts)) {
    std::stable_sort(cutouts_.begin(), cutouts_.end(), [](const auto& a, const auto& b) {
      return std::tie(a.overall_size_px, a.source_id) < std::tie(b.overall_size_px, b.source_id);
    });
    sizes_.reserve(cutouts_.size());
    for (const auto& c : cutouts_) sizes_.push_back(c.overall_size_px);
  }

  std::size_t size() const noexcept { return cutouts_.size(); }
  bool empty() const noexcept { return cutouts_.empty(); }
  const ObjectCutout& operator[](std::size_t i) const { return cutouts_.at(i); }
  std::span<const ObjectCutout> cutouts() const noexcept { return cutouts_; }

  /// Cut-outs with overall size in the closed interval [min_px, max_px].
  std::span<const ObjectCutout> candidates(double min_px, double max_px) const {
    if (!(min_px <= max_px)) throw std::invalid_argument("CutoutPool: inverted size interval");
    const auto lo = std::lower_bound(sizes_.begin(), sizes_.end(), min_px);
    const auto hi = std::upper_bound(lo, sizes_.end(), max_px);
    const auto first = static_cast<std::size_t>(lo - sizes_.begin());
    return std::span<const ObjectCutout>(cutouts_).subspan(
        first, static_cast<std::size_t>(hi - lo));
  }

  /// Uniform pick among the candidates; nullptr when there are none.
  const ObjectCutout* query_by_size(double min_px, double max_px, RandomSource& rng) const {
    const auto found = candidates(min_px, max_px);
    if (found.empty()) return nullptr;
    return &found[rng.below(found.size())];
  }

  /// Uniform pick from the whole pool; nullptr when empty.
  const ObjectCutout* sample_any(RandomSource& rng) const {
    if (cutouts_.empty()) return nullptr;
    return &cutouts_[rng.below(cutouts_.size())];
  }

 private:
  std::vector<ObjectCutout> cutouts_;
  std::vector<double> sizes_;
};

}  // namespace roadpersp
