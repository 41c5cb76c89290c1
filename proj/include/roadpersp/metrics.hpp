#pragma once

// Pixel-level AuPRC and component-level sIoU / PPV / F1 scoring.
//
// Component conventions:
//   gt components     the distinct nonzero ids of the ground-truth instance map
//   pred components   8-connected components of (score >= threshold)
//   sIoU(K)  = |K ∩ P| / (|K ∪ P| - |P ∩ A|), where P is the union of the
//              predicted components touching K and A the pixels of all other
//              gt components
//   PPV(K^)  = |K^ ∩ gt| / |K^|
//   for each tau: TP = #{K : sIoU > tau}, FN = #gt - TP, FP = #{K^ : PPV <= tau}
//                 F1 = 2TP / (2TP + FN + FP)   (1 when nothing is detected or missed)
// Only pixels inside the evaluation mask take part.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roadpersp/components.hpp"
#include "roadpersp/raster.hpp"

namespace roadpersp {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScoreMap {
  FloatRaster values;   // obstacle likelihood in [0, 1]
  BinaryMask eval_mask; // 1 where pixels are scored

  static ScoreMap everywhere(FloatRaster values) {
    BinaryMask mask(values.rows(), values.cols(), 1);
    return {std::move(values), std::move(mask)};
  }

  void validate() const {
    require_same_shape(values, eval_mask, "ScoreMap");
    for (float v : values.values()) {
      if (!std::isfinite(v)) throw MetricError("ScoreMap: non-finite score");
    }
  }
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Positive/negative pixel counts per distinct score, kept in descending
/// score order. Merging two histograms is associative and exact.
class ScoreHistogram {
 public:
  struct Bin {
    float score = 0.0f;
    std::uint64_t positives = 0;
    std::uint64_t negatives = 0;
  };

  ScoreHistogram() = default;

  static ScoreHistogram from(const ScoreMap& scores, const LabelMap& gt) {
    scores.validate();
    require_same_shape(scores.values, gt, "ScoreHistogram");
    std::vector<std::pair<float, bool>> samples;
    samples.reserve(scores.values.size());
    const auto vals = scores.values.values();
    const auto mask = scores.eval_mask.values();
    const auto labels = gt.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (mask[i]) samples.emplace_back(vals[i], labels[i] != 0);
    }
    std::sort(samples.begin(), samples.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    ScoreHistogram h;
    for (const auto& [s, positive] : samples) {
      if (h.bins_.empty() || h.bins_.back().score != s) h.bins_.push_back({s, 0, 0});
      (positive ? h.bins_.back().positives : h.bins_.back().negatives) += 1;
    }
    return h;
  }

  void merge(const ScoreHistogram& other) {
    std::vector<Bin> merged;
    merged.reserve(bins_.size() + other.bins_.size());
    auto a = bins_.begin();
    auto b = other.bins_.begin();
    while (a != bins_.end() || b != other.bins_.end()) {
      if (b == other.bins_.end() || (a != bins_.end() && a->score > b->score)) {
        merged.push_back(*a++);
      } else if (a == bins_.end() || b->score > a->score) {
        merged.push_back(*b++);
      } else {
        merged.push_back({a->score, a->positives + b->positives, a->negatives + b->negatives});
        ++a;
        ++b;
      }
    }
    bins_ = std::move(merged);
  }

  const std::vector<Bin>& bins() const noexcept { return bins_; }

  std::uint64_t positives() const {
    return std::accumulate(bins_.begin(), bins_.end(), std::uint64_t{0},
                           [](auto acc, const Bin& b) { return acc + b.positives; });
  }
  std::uint64_t negatives() const {
    return std::accumulate(bins_.begin(), bins_.end(), std::uint64_t{0},
                           [](auto acc, const Bin& b) { return acc + b.negatives; });
  }

  bool degenerate() const { return positives() == 0 || negatives() == 0; }

  /// Average precision with step interpolation; tied scores enter together.
  double auprc() const {
    const std::uint64_t total_pos = positives();
    if (total_pos == 0 || negatives() == 0) {
      throw MetricError("auprc: ground truth inside the evaluation mask is all one class");
    }
    double ap = 0.0;
    std::uint64_t tp = 0, fp = 0;
    for (const Bin& b : bins_) {
      tp += b.positives;
      fp += b.negatives;
      if (b.positives == 0) continue;
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += precision * static_cast<double>(b.positives) / static_cast<double>(total_pos);
    }
    return ap;
  }

  /// One point per distinct score, thresholds descending.
  std::vector<PrPoint> pr_curve() const {
    const std::uint64_t total_pos = positives();
    std::vector<PrPoint> curve;
    std::uint64_t tp = 0, fp = 0;
    for (const Bin& b : bins_) {
      tp += b.positives;
      fp += b.negatives;
      curve.push_back({b.score, static_cast<double>(tp) / static_cast<double>(tp + fp),
                       total_pos ? static_cast<double>(tp) / static_cast<double>(total_pos) : 0.0});
    }
    return curve;
  }

 private:
  std::vector<Bin> bins_;
};

/// Pixel-level area under the precision-recall curve inside eval_mask.
inline double auprc(const ScoreMap& scores, const LabelMap& gt) {
  return ScoreHistogram::from(scores, gt).auprc();
}

/// Adjusted IoU of a gt component `k` against a prediction mask, discounting
/// predicted pixels that lie on other gt components.
inline double siou(const BinaryMask& k, const BinaryMask& prediction, const BinaryMask& other_gt) {
  require_same_shape(k, prediction, "siou");
  require_same_shape(k, other_gt, "siou");
  std::uint64_t inter = 0, uni = 0, excluded = 0, k_size = 0;
  const auto kv = k.values(), pv = prediction.values(), ov = other_gt.values();
  for (std::size_t i = 0; i < kv.size(); ++i) {
    const bool in_k = kv[i] != 0, in_p = pv[i] != 0;
    k_size += in_k;
    inter += in_k && in_p;
    uni += in_k || in_p;
    excluded += in_p && !in_k && ov[i] != 0;
  }
  if (k_size == 0) throw MetricError("siou: empty gt component");
  return static_cast<double>(inter) / static_cast<double>(uni - excluded);
}

/// Fraction of a predicted component lying on ground-truth obstacles.
inline double ppv(const BinaryMask& pred_component, const BinaryMask& gt) {
  require_same_shape(pred_component, gt, "ppv");
  std::uint64_t size = 0, hit = 0;
  const auto pv = pred_component.values(), gv = gt.values();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    size += pv[i] != 0;
    hit += pv[i] != 0 && gv[i] != 0;
  }
  if (size == 0) throw MetricError("ppv: empty predicted component");
  return static_cast<double>(hit) / static_cast<double>(size);
}

/// 0.25, 0.30, ..., 0.75
inline std::vector<double> default_taus() {
  std::vector<double> taus;
  for (int i = 0; i <= 10; ++i) taus.push_back((25 + 5 * i) / 100.0);
  return taus;
}

struct ComponentOptions {
  double threshold = 0.5;  // prediction = score >= threshold
  std::vector<double> taus = default_taus();

  void validate() const {
    if (taus.empty()) throw MetricError("component metrics: empty tau list");
    for (double t : taus) {
      if (!(t > 0.0 && t < 1.0)) throw MetricError("component metrics: tau outside (0, 1)");
    }
  }
};

struct TauCounts {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;

  double f1() const {
    const std::uint64_t denom = 2 * tp + fn + fp;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
};

/// Metrics for one frame or, after merge(), for a set of frames.
struct ComponentReport {
  std::vector<double> siou;  // per gt component
  std::vector<double> ppv;   // per predicted component
  std::vector<double> taus;
  std::vector<TauCounts> counts;  // parallel to taus
  std::vector<double> f1_at_tau;  // parallel to taus
  double mean_f1 = 0.0;
  std::optional<double> mean_siou;  // absent without gt components
  std::optional<double> mean_ppv;   // absent without predicted components
  std::optional<double> auprc;      // absent when ground truth is one class
  ScoreHistogram histogram;

  /// Recomputes the derived fields from siou/ppv/counts/histogram.
  void finalize() {
    f1_at_tau.clear();
    for (const auto& c : counts) f1_at_tau.push_back(c.f1());
    mean_f1 = f1_at_tau.empty()
                  ? 0.0
                  : std::accumulate(f1_at_tau.begin(), f1_at_tau.end(), 0.0) /
                        static_cast<double>(f1_at_tau.size());
    const auto mean = [](const std::vector<double>& xs) -> std::optional<double> {
      if (xs.empty()) return std::nullopt;
      return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    };
    mean_siou = mean(siou);
    mean_ppv = mean(ppv);
    auprc = histogram.degenerate() ? std::nullopt : std::optional<double>(histogram.auprc());
  }

  void merge(const ComponentReport& other) {
    if (taus.empty()) {
      taus = other.taus;
      counts.assign(taus.size(), {});
    }
    if (taus != other.taus) throw MetricError("ComponentReport::merge: tau lists differ");
    siou.insert(siou.end(), other.siou.begin(), other.siou.end());
    ppv.insert(ppv.end(), other.ppv.begin(), other.ppv.end());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      counts[i].tp += other.counts[i].tp;
      counts[i].fn += other.counts[i].fn;
      counts[i].fp += other.counts[i].fp;
    }
    histogram.merge(other.histogram);
    finalize();
  }
};

/// Component-level report for one frame. `gt_instances` holds one id per
/// obstacle instance (0 = none).
inline ComponentReport component_f1(const ScoreMap& scores, const LabelMap& gt_instances,
                                    const ComponentOptions& options = {}) {
  options.validate();
  scores.validate();
  require_same_shape(scores.values, gt_instances, "component_f1");

  const int rows = gt_instances.rows(), cols = gt_instances.cols();
  LabelMap gt(rows, cols, 0);
  BinaryMask predicted(rows, cols, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!scores.eval_mask(r, c)) continue;
      gt(r, c) = gt_instances(r, c);
      predicted(r, c) = scores.values(r, c) >= options.threshold ? 1 : 0;
    }
  }
  const LabelMap pred = components(predicted);
  const std::uint32_t n_pred = max_label(pred);

  // Per predicted component: size, pixels on any gt, pixels on each gt id.
  std::vector<std::uint64_t> pred_size(n_pred + 1, 0), pred_on_gt(n_pred + 1, 0);
  std::map<std::uint32_t, std::uint64_t> gt_size;
  std::map<std::uint32_t, std::map<std::uint32_t, std::uint64_t>> overlap;  // gt -> pred -> px
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::uint32_t g = gt(r, c), p = pred(r, c);
      if (g != 0) ++gt_size[g];
      if (p == 0) continue;
      ++pred_size[p];
      if (g != 0) {
        ++pred_on_gt[p];
        ++overlap[g][p];
      }
    }
  }

  ComponentReport report;
  for (const auto& [g, k_size] : gt_size) {
    std::uint64_t inter = 0, p_size = 0, on_other = 0;
    if (auto it = overlap.find(g); it != overlap.end()) {
      for (const auto& [p, px] : it->second) {
        inter += px;
        p_size += pred_size[p];
        on_other += pred_on_gt[p] - px;
      }
    }
    const std::uint64_t uni = k_size + p_size - inter;
    report.siou.push_back(static_cast<double>(inter) / static_cast<double>(uni - on_other));
  }
  for (std::uint32_t p = 1; p <= n_pred; ++p) {
    report.ppv.push_back(static_cast<double>(pred_on_gt[p]) / static_cast<double>(pred_size[p]));
  }

  report.taus = options.taus;
  for (double tau : options.taus) {
    TauCounts tc;
    tc.tp = static_cast<std::uint64_t>(
        std::count_if(report.siou.begin(), report.siou.end(), [&](double s) { return s > tau; }));
    tc.fn = report.siou.size() - tc.tp;
    tc.fp = static_cast<std::uint64_t>(
        std::count_if(report.ppv.begin(), report.ppv.end(), [&](double v) { return v <= tau; }));
    report.counts.push_back(tc);
  }
  report.histogram = ScoreHistogram::from(scores, gt_instances);
  report.finalize();
  return report;
}

}  // namespace roadpersp
