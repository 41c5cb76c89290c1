// roadpersp: perspective maps, cut-out extraction, obstacle injection and
// evaluation from the command line.

#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roadpersp/roadpersp.hpp"

namespace {

using namespace roadpersp;

int fail(const std::string& kind, const std::string& message, const std::string& path = {}) {
  json err = {{"error", message}, {"kind", kind}};
  if (!path.empty()) err["path"] = path;
  std::cerr << err.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perspective-aware road obstacle data synthesis and evaluation"};
  app.require_subcommand(1);

  std::string manifest, out, config_path, pool_path;
  std::optional<std::uint64_t> seed;
  int workers = 0;

  const auto common = [&](CLI::App* cmd, bool needs_manifest) {
    auto* m = cmd->add_option("--manifest", manifest, "Dataset manifest JSON");
    if (needs_manifest) m->required();
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--workers", workers, "Worker threads (0 = all cores)");
    cmd->add_option("--config", config_path, "JSON file with option defaults; flags override it");
  };

  auto* map_cmd = app.add_subcommand("map", "Write per-frame perspective maps (PFM) and horizon rows");
  common(map_cmd, true);

  std::vector<std::string> classes{"person", "rider", "car", "truck", "bus", "train", "motorcycle",
                                   "bicycle", "traffic light", "traffic sign"};
  std::string class_table_path;
  auto* extract_cmd = app.add_subcommand("extract", "Build a cut-out pool from instance-labeled frames");
  common(extract_cmd, true);
  extract_cmd->add_option("--classes", classes, "Eligible class names")->delimiter(',');
  extract_cmd->add_option("--class-table", class_table_path, "Class id table JSON (default: Cityscapes ids)");

  std::string mode;
  std::optional<double> obj_min, obj_max, fill_prob, noise, jitter;
  std::optional<int> feather;
  auto* inject_cmd = app.add_subcommand("inject", "Synthesize obstacle frames");
  common(inject_cmd, true);
  inject_cmd->add_option("--pool", pool_path, "Cut-out pool (pool.json or its directory)")->required();
  inject_cmd->add_option("--seed", seed, "Master seed");
  inject_cmd->add_option("--mode", mode, "perspective | uniform")->check(CLI::IsMember({"perspective", "uniform"}));
  inject_cmd->add_option("--obj-min", obj_min, "Smallest obstacle size in meters");
  inject_cmd->add_option("--obj-max", obj_max, "Largest obstacle size in meters");
  inject_cmd->add_option("--fill-prob", fill_prob, "Fraction of anchors that receive an object");
  inject_cmd->add_option("--noise", noise, "Std. dev. of additive pixel noise (8-bit levels)");
  inject_cmd->add_option("--jitter", jitter, "Std. dev. of anchor jitter in meters");
  inject_cmd->add_option("--feather", feather, "Alpha feather width in pixels");

  std::string pred_dir, gt_dir;
  std::optional<double> threshold;
  bool no_csv = false;
  auto* eval_cmd = app.add_subcommand("eval", "Score detector outputs against ground truth");
  common(eval_cmd, false);
  eval_cmd->add_option("--pred", pred_dir, "Directory of score maps")->required();
  eval_cmd->add_option("--gt", gt_dir, "Directory of <id>_labels.png ground truth")->required();
  eval_cmd->add_option("--threshold", threshold, "Score threshold for predicted components");
  eval_cmd->add_flag("--no-csv", no_csv, "Skip pr_curve.csv");

  std::string road_mask;
  double focal = 0.0;
  std::optional<double> principal_row;
  int offset = kDefaultHorizonOffsetPx;
  std::vector<std::uint32_t> road_values;
  auto* pitch_cmd = app.add_subcommand("estimate-pitch", "Estimate camera pitch from a road mask");
  pitch_cmd->add_option("--road-mask", road_mask, "Road mask PNG")->required();
  pitch_cmd->add_option("--focal", focal, "Focal length in pixels")->required();
  pitch_cmd->add_option("--principal-row", principal_row, "Principal point row (default: image center)");
  pitch_cmd->add_option("--offset", offset, "Rows between the horizon and the top of the road");
  pitch_cmd->add_option("--road-values", road_values, "Mask values that mean road (default: nonzero)")->delimiter(',');

  std::string cs_root, cs_split = "train";
  auto* cs_cmd = app.add_subcommand("convert-cityscapes", "Write a manifest for a Cityscapes split");
  cs_cmd->add_option("--root", cs_root, "Cityscapes root directory")->required();
  cs_cmd->add_option("--split", cs_split, "Split name");
  cs_cmd->add_option("--out", out, "Manifest path to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", e.what()}, {"kind", "usage"}}.dump() << "\n";
    return 2;
  }

  try {
    const json config = config_path.empty() ? json::object() : read_json(config_path);

    if (*map_cmd) {
      cmd_map(manifest, out, workers);
    } else if (*extract_cmd) {
      const ClassTable table = class_table_path.empty() ? ClassTable::cityscapes() : load_class_table(class_table_path);
      std::set<std::string> eligible(classes.begin(), classes.end());
      if (config.contains("classes") && extract_cmd->count("--classes") == 0) {
        eligible = config["classes"].get<std::set<std::string>>();
      }
      const std::size_t n = cmd_extract(manifest, eligible, table, out, workers);
      std::cout << json{{"cutouts", n}}.dump() << "\n";
    } else if (*inject_cmd) {
      InjectionConfig cfg;
      if (config.contains("injection")) cfg = injection_config_from_json(config["injection"], cfg);
      if (seed) cfg.master_seed = *seed;
      if (!mode.empty()) cfg.mode = parse_injection_mode(mode);
      if (obj_min) cfg.obj_min_m = *obj_min;
      if (obj_max) cfg.obj_max_m = *obj_max;
      if (fill_prob) cfg.fill_probability = *fill_prob;
      if (noise) cfg.noise_magnitude = *noise;
      if (jitter) cfg.jitter_sigma_m = *jitter;
      if (feather) cfg.feather_px = *feather;
      const InjectSummary s = cmd_inject(manifest, pool_path, cfg, out, workers);
      std::cout << json{{"frames", s.frames}, {"injections", s.injections}, {"occluded", s.occluded}, {"skips", s.skips}}.dump() << "\n";
    } else if (*eval_cmd) {
      ComponentOptions options;
      if (config.contains("threshold")) options.threshold = config["threshold"].get<double>();
      if (config.contains("taus")) options.taus = config["taus"].get<std::vector<double>>();
      if (threshold) options.threshold = *threshold;
      const EvalResult r = cmd_eval(pred_dir, gt_dir, out, options, workers, !no_csv);
      std::cout << to_json(r.aggregate).dump() << "\n";
    } else if (*pitch_cmd) {
      const PitchEstimate e = cmd_estimate_pitch(road_mask, focal, principal_row, offset, road_values);
      std::cout << json{{"pitch_rad", e.pitch_rad}, {"horizon_row", e.horizon_row}}.dump() << "\n";
    } else if (*cs_cmd) {
      const DatasetManifest m = convert_cityscapes(cs_root, cs_split, out);
      std::cout << json{{"frames", m.frames.size()}}.dump() << "\n";
    }
  } catch (const DatasetError& e) {
    return fail("dataset", e.reason(), e.path().string());
  } catch (const GeometryError& e) {
    return fail("geometry", e.what());
  } catch (const MetricError& e) {
    return fail("metric", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
