#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "roadpersp/raster.hpp"

namespace roadpersp {

/// 8-connected component labeling of the nonzero pixels of `mask`. Ids are
/// 1..n in raster-scan order of each component's first pixel.
template <typename T>
LabelMap components(const Raster<T>& mask) {
  LabelMap out(mask.rows(), mask.cols(), 0);
  std::uint32_t next_id = 0;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      if (mask(r, c) == T{} || out(r, c) != 0) continue;
      const std::uint32_t id = ++next_id;
      out(r, c) = id;
      stack.assign(1, {r, c});
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = pr + dr;
            const int nc = pc + dc;
            if (!mask.contains(nr, nc) || mask(nr, nc) == T{} || out(nr, nc) != 0) continue;
            out(nr, nc) = id;
            stack.emplace_back(nr, nc);
          }
        }
      }
    }
  }
  return out;
}

inline std::uint32_t max_label(const LabelMap& labels) {
  std::uint32_t m = 0;
  for (auto v : labels.values()) m = v > m ? v : m;
  return m;
}

}  // namespace roadpersp
