#pragma once

// Pipeline commands behind the roadpersp CLI. Each command writes
// config.json to its output directory before doing any work; the file holds
// everything (besides the input files) that determines the outputs. Worker
// count and output location are left out because they do not.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadpersp/cutout_pool.hpp"
#include "roadpersp/dataset_io.hpp"
#include "roadpersp/geometry.hpp"
#include "roadpersp/injector.hpp"
#include "roadpersp/metrics.hpp"
#include "roadpersp/parallel.hpp"

namespace roadpersp {

// ---------------------------------------------------------------------------
// JSON views of domain types

inline json to_json(const InjectionConfig& cfg) {
  return {{"grid_depth_m", cfg.grid_depth_m},
          {"grid_lateral_m", cfg.grid_lateral_m},
          {"jitter_sigma_m", cfg.jitter_sigma_m},
          {"obj_min_m", cfg.obj_min_m},
          {"obj_max_m", cfg.obj_max_m},
          {"fill_probability", cfg.fill_probability},
          {"mode", to_string(cfg.mode)},
          {"master_seed", cfg.master_seed},
          {"feather_px", cfg.feather_px},
          {"noise_magnitude", cfg.noise_magnitude},
          {"min_object_px", cfg.min_object_px}};
}

/// Overlays the keys present in `j` onto `cfg`.
inline InjectionConfig injection_config_from_json(const json& j, InjectionConfig cfg = {}) {
  if (!j.is_object()) throw std::invalid_argument("injection config must be a JSON object");
  const auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  take("grid_depth_m", cfg.grid_depth_m);
  take("grid_lateral_m", cfg.grid_lateral_m);
  take("jitter_sigma_m", cfg.jitter_sigma_m);
  take("obj_min_m", cfg.obj_min_m);
  take("obj_max_m", cfg.obj_max_m);
  take("fill_probability", cfg.fill_probability);
  take("master_seed", cfg.master_seed);
  take("feather_px", cfg.feather_px);
  take("noise_magnitude", cfg.noise_magnitude);
  take("min_object_px", cfg.min_object_px);
  if (j.contains("mode")) cfg.mode = parse_injection_mode(j.at("mode").get<std::string>());
  return cfg;
}

inline json to_json(const AnchorPoint& a) {
  json j = {{"lateral_m", a.ground.lateral_m},
            {"depth_m", a.ground.depth_m},
            {"road_distance_m", a.road_distance_m},
            {"row", a.pixel.row},
            {"col", a.pixel.col},
            {"scale_px_per_m", a.scale_px_per_m},
            {"grid_node", nullptr}};
  if (a.node) j["grid_node"] = {{"lateral_m", a.node->lateral_m}, {"distance_m", a.node->distance_m}};
  return j;
}

inline json to_json(const InjectionRecord& r) {
  return {{"instance_id", r.instance_id},
          {"anchor", to_json(r.anchor)},
          {"cutout_source_id", r.cutout_source_id},
          {"pixel_size_range", {r.pixel_size_range.min_px, r.pixel_size_range.max_px}},
          {"placed_size_px", r.placed_size_px},
          {"placed_bbox", {{"row", r.placed_bbox.row}, {"col", r.placed_bbox.col}, {"h", r.placed_bbox.h}, {"w", r.placed_bbox.w}}},
          {"visible_px", r.visible_px}};
}

inline json to_json(const FrameSynthesis& s, const std::string& frame_id, InjectionMode mode) {
  json records = json::array();
  for (const auto& r : s.records) records.push_back(to_json(r));
  json occluded = json::array();
  for (const auto& r : s.occluded) occluded.push_back(to_json(r));
  json skips = json::array();
  for (const auto& k : s.skips) {
    skips.push_back({{"anchor", to_json(k.anchor)},
                     {"pixel_size_range", {k.pixel_size_range.min_px, k.pixel_size_range.max_px}},
                     {"reason", k.reason}});
  }
  return {{"frame_id", frame_id}, {"mode", to_string(mode)}, {"records", records}, {"occluded", occluded}, {"skips", skips}};
}

inline json to_json(const ComponentReport& r) {
  const auto opt = [](const std::optional<double>& v) -> json { return v ? json(*v) : json(nullptr); };
  json per_tau = json::array();
  for (std::size_t i = 0; i < r.taus.size(); ++i) {
    per_tau.push_back({{"tau", r.taus[i]},
                       {"f1", r.f1_at_tau[i]},
                       {"tp", r.counts[i].tp},
                       {"fn", r.counts[i].fn},
                       {"fp", r.counts[i].fp}});
  }
  return {{"auprc", opt(r.auprc)},
          {"mean_f1", r.mean_f1},
          {"mean_siou", opt(r.mean_siou)},
          {"mean_ppv", opt(r.mean_ppv)},
          {"gt_components", r.siou.size()},
          {"pred_components", r.ppv.size()},
          {"f1_at_tau", per_tau}};
}

// ---------------------------------------------------------------------------
// map

/// One <id>_perspective.pfm and <id>_perspective.json per frame.
inline void cmd_map(const fs::path& manifest_path, const fs::path& out, int workers = 0) {
  fs::create_directories(out);
  write_json(out / "config.json", {{"command", "map"}, {"manifest", manifest_path.generic_string()}});
  const DatasetManifest manifest = load_manifest(manifest_path);
  parallel_for(manifest.frames.size(), workers, [&](std::size_t i) {
    const LoadedFrame frame = load_frame(manifest.frames[i]);
    const PerspectiveMap map = perspective_map(frame.rig);
    const std::string& id = frame.record.frame_id;
    write_pfm(out / (id + "_perspective.pfm"), map.values);
    write_json(out / (id + "_perspective.json"),
               {{"frame_id", id}, {"horizon_row", map.horizon_row}, {"rig", rig_to_json(map.rig)}});
  });
}

// ---------------------------------------------------------------------------
// extract

/// Builds a cut-out pool from every frame that has instance labels. Returns
/// the number of cut-outs.
inline std::size_t cmd_extract(const fs::path& manifest_path, const std::set<std::string>& classes,
                               const ClassTable& table, const fs::path& out, int workers = 0) {
  fs::create_directories(out);
  json table_json = json::object();
  for (const auto& [id, name] : table.names) table_json[std::to_string(id)] = name;
  write_json(out / "config.json", {{"command", "extract"},
                                   {"manifest", manifest_path.generic_string()},
                                   {"classes", classes},
                                   {"class_table", {{"instance_divisor", table.instance_divisor},
                                                    {"classes", table_json}}}});
  const DatasetManifest manifest = load_manifest(manifest_path);
  std::vector<std::vector<ObjectCutout>> per_frame(manifest.frames.size());
  parallel_for(manifest.frames.size(), workers, [&](std::size_t i) {
    const FrameRecord& rec = manifest.frames[i];
    if (!rec.labels) return;
    const RgbImage image = read_rgb_png(rec.image);
    const LabelMap labels = read_label_png(*rec.labels);
    if (!labels.same_shape(image)) throw DatasetError(*rec.labels, "size differs from image");
    per_frame[i] = extract_cutouts(image, labels, classes, table, rec.frame_id);
  });
  std::vector<ObjectCutout> all;
  for (auto& v : per_frame) std::move(v.begin(), v.end(), std::back_inserter(all));
  const CutoutPool pool(std::move(all));
  save_pool(out, pool);
  return pool.size();
}

// ---------------------------------------------------------------------------
// inject

struct InjectSummary {
  std::size_t frames = 0;
  std::size_t injections = 0;
  std::size_t occluded = 0;
  std::size_t skips = 0;
};

/// Synthesizes every frame of the manifest: <id>_image.png, <id>_labels.png
/// and <id>_records.json. Output bytes do not depend on `workers`.
inline InjectSummary cmd_inject(const fs::path& manifest_path, const fs::path& pool_path,
                                const InjectionConfig& cfg, const fs::path& out, int workers = 0) {
  cfg.validate();
  fs::create_directories(out);
  write_json(out / "config.json", {{"command", "inject"},
                                   {"manifest", manifest_path.generic_string()},
                                   {"pool", pool_path.generic_string()},
                                   {"injection", to_json(cfg)}});
  const DatasetManifest manifest = load_manifest(manifest_path);
  const CutoutPool pool = load_pool(pool_path);
  std::vector<InjectSummary> counts(manifest.frames.size());
  parallel_for(manifest.frames.size(), workers, [&](std::size_t i) {
    const FrameRecord& rec = manifest.frames[i];
    if (!rec.road_mask) throw DatasetError(manifest_path, "frame '" + rec.frame_id + "' has no road_mask");
    const LoadedFrame frame = load_frame(rec);
    const FrameSynthesis s = synthesize(frame.image, *frame.road_mask, frame.rig, pool, cfg, rec.frame_id);
    write_rgb_png(out / (rec.frame_id + "_image.png"), s.image);
    write_label_png(out / (rec.frame_id + "_labels.png"), s.labels);
    write_json(out / (rec.frame_id + "_records.json"), to_json(s, rec.frame_id, cfg.mode));
    counts[i] = {1, s.records.size(), s.occluded.size(), s.skips.size()};
  });
  InjectSummary summary;
  for (const InjectSummary& c : counts) {
    summary.frames += c.frames;
    summary.injections += c.injections;
    summary.occluded += c.occluded;
    summary.skips += c.skips;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// eval

namespace detail {

inline std::optional<fs::path> find_prediction(const fs::path& dir, const std::string& id) {
  for (const char* suffix : {"_scores.pfm", ".pfm", "_scores.png", ".png"}) {
    const fs::path p = dir / (id + suffix);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

inline bool is_score_file(const fs::path& p) {
  const std::string name = p.filename().string();
  return p.extension() == ".pfm" || (p.extension() == ".png" && !name.ends_with("_labels.png") &&
                                     !name.ends_with("_image.png") && !name.ends_with("_eval.png"));
}

}  // namespace detail

struct EvalResult {
  std::vector<std::pair<std::string, ComponentReport>> frames;
  ComponentReport aggregate;
};

/// Scores <pred_dir>/<id>{_scores,}.{pfm,png} against <gt_dir>/<id>_labels.png
/// for every gt frame. An optional <gt_dir>/<id>_eval.png restricts scoring
/// to its nonzero pixels. Writes report.json and, when requested and
/// defined, pr_curve.csv.
inline EvalResult cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out,
                           const ComponentOptions& options = {}, int workers = 0,
                           bool write_pr_csv = true) {
  options.validate();
  fs::create_directories(out);
  write_json(out / "config.json", {{"command", "eval"},
                                   {"pred_dir", pred_dir.generic_string()},
                                   {"gt_dir", gt_dir.generic_string()},
                                   {"threshold", options.threshold},
                                   {"taus", options.taus}});
  if (!fs::is_directory(pred_dir)) throw DatasetError(pred_dir, "prediction directory does not exist");
  if (!fs::is_directory(gt_dir)) throw DatasetError(gt_dir, "ground-truth directory does not exist");
  bool any_pred = false;
  for (const auto& e : fs::directory_iterator(pred_dir)) {
    any_pred = any_pred || (e.is_regular_file() && detail::is_score_file(e.path()));
  }
  if (!any_pred) throw DatasetError(pred_dir, "no score maps (.pfm/.png) found");

  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(gt_dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.ends_with("_labels.png")) {
      ids.push_back(name.substr(0, name.size() - std::string("_labels.png").size()));
    }
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw DatasetError(gt_dir, "no <id>_labels.png ground-truth files found");

  EvalResult result;
  result.frames.resize(ids.size());
  parallel_for(ids.size(), workers, [&](std::size_t i) {
    const std::string& id = ids[i];
    const auto pred_path = detail::find_prediction(pred_dir, id);
    if (!pred_path) throw DatasetError(pred_dir, "no score map for frame '" + id + "'");
    const LabelMap gt = read_label_png(gt_dir / (id + "_labels.png"));
    ScoreMap scores = ScoreMap::everywhere(read_score_raster(*pred_path));
    if (!scores.values.same_shape(gt)) throw DatasetError(*pred_path, "size differs from ground truth");
    if (const fs::path mask = gt_dir / (id + "_eval.png"); fs::is_regular_file(mask)) {
      const LabelMap m = read_label_png(mask);
      if (!m.same_shape(gt)) throw DatasetError(mask, "size differs from ground truth");
      for (std::size_t k = 0; k < m.size(); ++k) scores.eval_mask.values()[k] = m.values()[k] != 0;
    }
    result.frames[i] = {id, component_f1(scores, gt, options)};
  });
  for (const auto& [id, report] : result.frames) result.aggregate.merge(report);

  json frames = json::array();
  for (const auto& [id, report] : result.frames) {
    json j = to_json(report);
    j["frame_id"] = id;
    frames.push_back(std::move(j));
  }
  write_json(out / "report.json", {{"frames", frames}, {"aggregate", to_json(result.aggregate)}});

  if (write_pr_csv && !result.aggregate.histogram.degenerate()) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "threshold,precision,recall\n";
    for (const PrPoint& p : result.aggregate.histogram.pr_curve()) {
      csv << p.threshold << "," << p.precision << "," << p.recall << "\n";
    }
    write_file_bytes(out / "pr_curve.csv", csv.str());
  }
  return result;
}

// ---------------------------------------------------------------------------
// estimate-pitch

struct PitchEstimate {
  double pitch_rad = 0.0;
  double horizon_row = 0.0;
};

inline PitchEstimate cmd_estimate_pitch(const fs::path& road_mask_path, double focal_px,
                                        std::optional<double> principal_row,
                                        int horizon_offset_px = kDefaultHorizonOffsetPx,
                                        const std::vector<std::uint32_t>& road_values = {}) {
  const LabelMap mask = binarize_road(read_label_png(road_mask_path), road_values);
  const double prow = principal_row.value_or(mask.rows() / 2.0);
  PitchEstimate e;
  try {
    e.pitch_rad = estimate_pitch(mask, focal_px, prow, horizon_offset_px);
  } catch (const GeometryError& err) {
    throw DatasetError(road_mask_path, err.what());
  }
  e.horizon_row = prow - focal_px * std::tan(e.pitch_rad);
  return e;
}

}  // namespace roadpersp
