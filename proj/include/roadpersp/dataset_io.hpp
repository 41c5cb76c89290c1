#pragma once

// File formats and dataset layout.
//
//   float rasters    PFM, "Pf" grayscale, little-endian (negative scale),
//                    rows stored bottom to top
//   label maps       16-bit grayscale PNG (8-bit accepted on read)
//   images           8-bit RGB PNG
//   metadata         JSON
//
// Manifest schema (all paths relative to the manifest's directory):
//
//   {
//     "defaults": { "calibration": "<sidecar.json>" | { ...sidecar... },
//                   "road_values": [7] },
//     "frames": [
//       { "frame_id": "berlin_000001",
//         "image": "images/berlin_000001.png",
//         "labels": "labels/berlin_000001.png",          (optional)
//         "road_mask": "road/berlin_000001.png",         (optional)
//         "road_values": [7],                            (optional)
//         "calibration": "calib/berlin_000001.json" | { ... } }  (optional)
//     ]
//   }
//
// "road_values" lists the mask values that mean road; when absent any
// nonzero value does. A frame's calibration replaces the default one.
//
// Calibration sidecar: focal_px, cam_height_m (required); pitch_rad,
// principal_row, principal_col, image_rows, image_cols, horizon_offset_px
// (optional). A missing principal point defaults to the image center; a
// missing pitch is estimated from the road mask.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "roadpersp/cutout_pool.hpp"
#include "roadpersp/geometry.hpp"
#include "roadpersp/raster.hpp"

namespace roadpersp {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Every loader/writer failure names the file and the reason.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(const fs::path& path, const std::string& reason)
      : std::runtime_error(path.string() + ": " + reason), path_(path), reason_(reason) {}
  const fs::path& path() const noexcept { return path_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  fs::path path_;
  std::string reason_;
};

inline std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline void write_file_bytes(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(path, "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DatasetError(path, "write failed");
}

inline json read_json(const fs::path& path) {
  const std::string text = read_file_bytes(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DatasetError(path, std::string("invalid JSON: ") + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_file_bytes(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// PFM

inline std::string encode_pfm(const FloatRaster& raster) {
  std::string out = "Pf\n" + std::to_string(raster.cols()) + " " + std::to_string(raster.rows()) + "\n-1\n";
  const std::size_t header = out.size();
  out.resize(header + raster.size() * 4);
  char* dst = out.data() + header;
  for (int r = raster.rows() - 1; r >= 0; --r) {
    for (float v : raster.row(r)) {
      if (!std::isfinite(v)) throw std::invalid_argument("encode_pfm: non-finite value");
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int k = 0; k < 4; ++k) *dst++ = static_cast<char>((bits >> (8 * k)) & 0xffu);
    }
  }
  return out;
}

inline FloatRaster decode_pfm(std::string_view bytes, const fs::path& origin = "<memory>") {
  std::size_t pos = 0;
  const auto token = [&]() -> std::string {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  const std::string magic = token();
  if (magic == "PF") throw DatasetError(origin, "color PFM not supported, expected 'Pf'");
  if (magic != "Pf") throw DatasetError(origin, "malformed PFM header: bad magic");
  long cols = 0, rows = 0;
  double scale = 0.0;
  try {
    cols = std::stol(token());
    rows = std::stol(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw DatasetError(origin, "malformed PFM header");
  }
  if (cols <= 0 || rows <= 0) throw DatasetError(origin, "malformed PFM header: bad dimensions");
  if (!(scale < 0.0)) throw DatasetError(origin, "big-endian PFM (positive scale) not supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw DatasetError(origin, "malformed PFM header");
  }
  ++pos;  // the single whitespace byte ending the header
  const std::size_t need = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 4;
  if (bytes.size() - pos != need) {
    throw DatasetError(origin, "PFM payload is " + std::to_string(bytes.size() - pos) +
                                   " bytes, expected " + std::to_string(need));
  }
  FloatRaster out(static_cast<int>(rows), static_cast<int>(cols));
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (int r = out.rows() - 1; r >= 0; --r) {
    for (float& v : out.row(r)) {
      std::uint32_t bits = 0;
      for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(*src++) << (8 * k);
      v = std::bit_cast<float>(bits);
      if (std::isnan(v)) throw DatasetError(origin, "PFM contains NaN");
    }
  }
  return out;
}

inline void write_pfm(const fs::path& path, const FloatRaster& raster) {
  write_file_bytes(path, encode_pfm(raster));
}

inline FloatRaster read_pfm(const fs::path& path) { return decode_pfm(read_file_bytes(path), path); }

// ---------------------------------------------------------------------------
// PNG

inline RgbImage read_rgb_png(const fs::path& path) {
  if (!fs::exists(path)) throw DatasetError(path, "file does not exist");
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DatasetError(path, "not a readable image");
  RgbImage out(bgr.rows, bgr.cols);
  for (int r = 0; r < bgr.rows; ++r) {
    const auto* p = bgr.ptr<cv::Vec3b>(r);
    for (int c = 0; c < bgr.cols; ++c) out(r, c) = {p[c][2], p[c][1], p[c][0]};
  }
  return out;
}

inline void write_rgb_png(const fs::path& path, const RgbImage& image) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cv::Mat bgr(image.rows(), image.cols(), CV_8UC3);
  for (int r = 0; r < image.rows(); ++r) {
    auto* p = bgr.ptr<cv::Vec3b>(r);
    for (int c = 0; c < image.cols(); ++c) {
      const Rgb& px = image(r, c);
      p[c] = {px.b, px.g, px.r};
    }
  }
  if (!cv::imwrite(path.string(), bgr)) throw DatasetError(path, "PNG encoding failed");
}

/// Single-channel 8- or 16-bit PNG.
inline LabelMap read_label_png(const fs::path& path) {
  if (!fs::exists(path)) throw DatasetError(path, "file does not exist");
  const cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw DatasetError(path, "not a readable image");
  if (m.channels() != 1) throw DatasetError(path, "label map must be single-channel");
  LabelMap out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      if (m.depth() == CV_16U) {
        out(r, c) = m.at<std::uint16_t>(r, c);
      } else if (m.depth() == CV_8U) {
        out(r, c) = m.at<std::uint8_t>(r, c);
      } else {
        throw DatasetError(path, "label map must be 8- or 16-bit");
      }
    }
  }
  return out;
}

inline void write_label_png(const fs::path& path, const LabelMap& labels) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cv::Mat m(labels.rows(), labels.cols(), CV_16UC1);
  for (int r = 0; r < labels.rows(); ++r) {
    for (int c = 0; c < labels.cols(); ++c) {
      const std::uint32_t v = labels(r, c);
      if (v > 0xffffu) throw DatasetError(path, "label value " + std::to_string(v) + " exceeds 16 bits");
      m.at<std::uint16_t>(r, c) = static_cast<std::uint16_t>(v);
    }
  }
  if (!cv::imwrite(path.string(), m)) throw DatasetError(path, "PNG encoding failed");
}

inline void write_mask_png(const fs::path& path, const BinaryMask& mask) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cv::Mat m(mask.rows(), mask.cols(), CV_8UC1);
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) m.at<std::uint8_t>(r, c) = mask(r, c) ? 255 : 0;
  if (!cv::imwrite(path.string(), m)) throw DatasetError(path, "PNG encoding failed");
}

/// Score map from a PFM, or from a 16-bit PNG holding value * 65535.
inline FloatRaster read_score_raster(const fs::path& path) {
  if (path.extension() == ".pfm") return read_pfm(path);
  const LabelMap raw = read_label_png(path);
  FloatRaster out(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.values()[i] = static_cast<float>(raw.values()[i] / 65535.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationSpec {
  std::optional<double> focal_px;
  std::optional<double> cam_height_m;
  std::optional<double> pitch_rad;
  std::optional<double> principal_row;
  std::optional<double> principal_col;
  std::optional<int> image_rows;
  std::optional<int> image_cols;
  std::optional<int> horizon_offset_px;

  static CalibrationSpec from_json(const json& j, const fs::path& origin) {
    if (!j.is_object()) throw DatasetError(origin, "calibration must be a JSON object");
    CalibrationSpec s;
    const auto number = [&](const char* key, auto& field) {
      if (!j.contains(key) || j[key].is_null()) return;
      if (!j[key].is_number()) throw DatasetError(origin, std::string("calibration key '") + key + "' is not a number");
      field = j[key].get<typename std::remove_reference_t<decltype(field)>::value_type>();
    };
    number("focal_px", s.focal_px);
    number("cam_height_m", s.cam_height_m);
    number("pitch_rad", s.pitch_rad);
    number("principal_row", s.principal_row);
    number("principal_col", s.principal_col);
    number("image_rows", s.image_rows);
    number("image_cols", s.image_cols);
    number("horizon_offset_px", s.horizon_offset_px);
    if (!s.focal_px) throw DatasetError(origin, "calibration lacks focal_px");
    if (!s.cam_height_m) throw DatasetError(origin, "calibration lacks cam_height_m");
    return s;
  }

  json to_json() const {
    json j = json::object();
    const auto put = [&](const char* key, const auto& field) {
      if (field) j[key] = *field;
    };
    put("focal_px", focal_px);
    put("cam_height_m", cam_height_m);
    put("pitch_rad", pitch_rad);
    put("principal_row", principal_row);
    put("principal_col", principal_col);
    put("image_rows", image_rows);
    put("image_cols", image_cols);
    put("horizon_offset_px", horizon_offset_px);
    return j;
  }

  /// Complete rig for an image of the given size. Without a pitch the road
  /// mask is required and the pitch is estimated from it.
  CameraRig resolve(int rows, int cols, const LabelMap* road_mask, const fs::path& origin) const {
    if ((image_rows && *image_rows != rows) || (image_cols && *image_cols != cols)) {
      throw DatasetError(origin, "calibration image size differs from the image (" +
                                     std::to_string(rows) + "x" + std::to_string(cols) + ")");
    }
    CameraRig rig{*focal_px,
                  *cam_height_m,
                  0.0,
                  principal_row.value_or(rows / 2.0),
                  principal_col.value_or(cols / 2.0),
                  rows,
                  cols};
    if (pitch_rad) {
      rig.pitch_rad = *pitch_rad;
    } else if (road_mask != nullptr) {
      rig.pitch_rad = estimate_pitch(*road_mask, rig.focal_px, rig.principal_row,
                                     horizon_offset_px.value_or(kDefaultHorizonOffsetPx));
    } else {
      throw DatasetError(origin, "calibration lacks pitch_rad and no road mask to estimate it from");
    }
    try {
      rig.validate();
    } catch (const GeometryError& e) {
      throw DatasetError(origin, e.what());
    }
    return rig;
  }
};

inline json rig_to_json(const CameraRig& rig) {
  return {{"focal_px", rig.focal_px},         {"cam_height_m", rig.cam_height_m},
          {"pitch_rad", rig.pitch_rad},       {"principal_row", rig.principal_row},
          {"principal_col", rig.principal_col}, {"image_rows", rig.image_rows},
          {"image_cols", rig.image_cols}};
}

// ---------------------------------------------------------------------------
// Manifest

struct FrameRecord {
  std::string frame_id;
  fs::path image;
  std::optional<fs::path> labels;
  std::optional<fs::path> road_mask;
  std::vector<std::uint32_t> road_values;  // empty: any nonzero value is road
  CalibrationSpec calibration;
  fs::path calibration_origin;  // sidecar file, or the manifest for inline values
};

struct DatasetManifest {
  fs::path path;
  std::vector<FrameRecord> frames;
};

namespace detail {

inline fs::path existing_file(const fs::path& base, const json& value, const fs::path& manifest,
                              const std::string& what) {
  if (!value.is_string()) throw DatasetError(manifest, what + " must be a path string");
  fs::path p = base / value.get<std::string>();
  if (!fs::is_regular_file(p)) throw DatasetError(p, what + " file does not exist");
  return p;
}

inline std::vector<std::uint32_t> road_values_from(const json& j, const fs::path& manifest) {
  if (!j.is_array()) throw DatasetError(manifest, "road_values must be an array");
  std::vector<std::uint32_t> out;
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) throw DatasetError(manifest, "road_values entries must be nonnegative integers");
    out.push_back(v.get<std::uint32_t>());
  }
  return out;
}

inline std::pair<CalibrationSpec, fs::path> calibration_from(const fs::path& base, const json& value,
                                                             const fs::path& manifest) {
  if (value.is_object()) return {CalibrationSpec::from_json(value, manifest), manifest};
  const fs::path p = existing_file(base, value, manifest, "calibration");
  return {CalibrationSpec::from_json(read_json(p), p), p};
}

}  // namespace detail

/// Parses and validates a manifest: ids unique, referenced files present,
/// every frame's calibration resolved.
inline DatasetManifest load_manifest(const fs::path& path) {
  const json root = read_json(path);
  const fs::path base = path.parent_path();
  if (!root.is_object() || !root.contains("frames") || !root["frames"].is_array()) {
    throw DatasetError(path, "manifest needs a 'frames' array");
  }
  std::optional<std::pair<CalibrationSpec, fs::path>> default_calib;
  std::vector<std::uint32_t> default_road_values;
  if (root.contains("defaults")) {
    const json& d = root["defaults"];
    if (d.contains("calibration")) default_calib = detail::calibration_from(base, d["calibration"], path);
    if (d.contains("road_values")) default_road_values = detail::road_values_from(d["road_values"], path);
  }

  DatasetManifest manifest{path, {}};
  std::set<std::string> seen;
  for (const json& f : root["frames"]) {
    if (!f.is_object() || !f.contains("frame_id") || !f["frame_id"].is_string()) {
      throw DatasetError(path, "every frame needs a string 'frame_id'");
    }
    FrameRecord rec;
    rec.frame_id = f["frame_id"].get<std::string>();
    if (rec.frame_id.empty()) throw DatasetError(path, "empty frame_id");
    if (!seen.insert(rec.frame_id).second) {
      throw DatasetError(path, "duplicate frame_id '" + rec.frame_id + "'");
    }
    if (!f.contains("image")) throw DatasetError(path, "frame '" + rec.frame_id + "' has no image");
    rec.image = detail::existing_file(base, f["image"], path, "image");
    if (f.contains("labels")) rec.labels = detail::existing_file(base, f["labels"], path, "labels");
    if (f.contains("road_mask")) rec.road_mask = detail::existing_file(base, f["road_mask"], path, "road_mask");
    rec.road_values = f.contains("road_values") ? detail::road_values_from(f["road_values"], path)
                                                : default_road_values;
    if (f.contains("calibration")) {
      std::tie(rec.calibration, rec.calibration_origin) = detail::calibration_from(base, f["calibration"], path);
    } else if (default_calib) {
      std::tie(rec.calibration, rec.calibration_origin) = *default_calib;
    } else {
      throw DatasetError(path, "unresolved calibration for frame '" + rec.frame_id + "'");
    }
    manifest.frames.push_back(std::move(rec));
  }
  return manifest;
}

/// Writes `manifest` with paths relative to `path`'s directory.
inline void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  const fs::path base = fs::absolute(path).parent_path();
  const auto rel = [&](const fs::path& p) { return fs::relative(fs::absolute(p), base).generic_string(); };
  json frames = json::array();
  for (const auto& f : manifest.frames) {
    json j = {{"frame_id", f.frame_id}, {"image", rel(f.image)}};
    if (f.labels) j["labels"] = rel(*f.labels);
    if (f.road_mask) j["road_mask"] = rel(*f.road_mask);
    if (!f.road_values.empty()) j["road_values"] = f.road_values;
    j["calibration"] = f.calibration.to_json();
    frames.push_back(std::move(j));
  }
  write_json(path, {{"frames", frames}});
}

struct LoadedFrame {
  FrameRecord record;
  RgbImage image;
  std::optional<LabelMap> labels;
  std::optional<LabelMap> road_mask;  // 1 = road
  CameraRig rig;
};

inline LabelMap binarize_road(const LabelMap& raw, const std::vector<std::uint32_t>& road_values) {
  LabelMap out(raw.rows(), raw.cols(), 0);
  const std::set<std::uint32_t> accepted(road_values.begin(), road_values.end());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::uint32_t v = raw.values()[i];
    out.values()[i] = accepted.empty() ? (v != 0) : accepted.contains(v);
  }
  return out;
}

/// Reads a frame's rasters, checks their sizes agree and resolves its rig.
inline LoadedFrame load_frame(const FrameRecord& rec) {
  LoadedFrame f{rec, read_rgb_png(rec.image), std::nullopt, std::nullopt, {}};
  const auto check = [&](const LabelMap& m, const fs::path& p) {
    if (!m.same_shape(f.image)) {
      throw DatasetError(p, "size " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                " differs from image " + std::to_string(f.image.rows()) + "x" +
                                std::to_string(f.image.cols()));
    }
  };
  if (rec.labels) {
    f.labels = read_label_png(*rec.labels);
    check(*f.labels, *rec.labels);
  }
  if (rec.road_mask) {
    f.road_mask = binarize_road(read_label_png(*rec.road_mask), rec.road_values);
    check(*f.road_mask, *rec.road_mask);
  }
  f.rig = rec.calibration.resolve(f.image.rows(), f.image.cols(),
                                  f.road_mask ? &*f.road_mask : nullptr, rec.calibration_origin);
  return f;
}

// ---------------------------------------------------------------------------
// Class table and cut-out pool

/// {"instance_divisor": 1000, "classes": {"26": "car", ...}}
inline ClassTable load_class_table(const fs::path& path) {
  const json j = read_json(path);
  ClassTable table;
  table.instance_divisor = j.value("instance_divisor", 1000u);
  if (!j.contains("classes") || !j["classes"].is_object()) {
    throw DatasetError(path, "class table needs a 'classes' object");
  }
  for (const auto& [key, name] : j["classes"].items()) {
    try {
      table.names[static_cast<std::uint32_t>(std::stoul(key))] = name.get<std::string>();
    } catch (const std::exception&) {
      throw DatasetError(path, "bad class entry '" + key + "'");
    }
  }
  return table;
}

/// Writes <dir>/pool.json plus a pixels/mask PNG pair per cut-out.
inline void save_pool(const fs::path& dir, const CutoutPool& pool) {
  fs::create_directories(dir / "cutouts");
  json entries = json::array();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const ObjectCutout& c = pool[i];
    char stem[32];
    std::snprintf(stem, sizeof stem, "%06zu", i);
    const std::string pixels = std::string("cutouts/") + stem + "_pixels.png";
    const std::string mask = std::string("cutouts/") + stem + "_mask.png";
    write_rgb_png(dir / pixels, c.pixels);
    write_mask_png(dir / mask, c.alpha);
    entries.push_back({{"source_id", c.source_id},
                       {"class_label", c.class_label},
                       {"bbox", {{"w", c.bbox_w}, {"h", c.bbox_h}}},
                       {"area_px", c.area_px},
                       {"overall_size_px", c.overall_size_px},
                       {"pixels", pixels},
                       {"mask", mask}});
  }
  write_json(dir / "pool.json", entries);
}

/// Loads a pool from its pool.json (or the directory holding it). Stored
/// sizes are checked against the masks.
inline CutoutPool load_pool(fs::path path) {
  if (fs::is_directory(path)) path /= "pool.json";
  const json entries = read_json(path);
  if (!entries.is_array()) throw DatasetError(path, "pool manifest must be a JSON array");
  const fs::path base = path.parent_path();
  std::vector<ObjectCutout> cutouts;
  for (const json& e : entries) {
    try {
      RgbImage pixels = read_rgb_png(base / e.at("pixels").get<std::string>());
      const LabelMap raw = read_label_png(base / e.at("mask").get<std::string>());
      BinaryMask alpha(raw.rows(), raw.cols());
      for (std::size_t i = 0; i < raw.size(); ++i) alpha.values()[i] = raw.values()[i] != 0;
      if (!pixels.same_shape(alpha)) throw DatasetError(path, "pixels/mask size mismatch");
      ObjectCutout c = ObjectCutout::from_patch(std::move(pixels), std::move(alpha),
                                                e.at("source_id").get<std::string>(),
                                                e.at("class_label").get<std::string>());
      if (c.area_px != e.at("area_px").get<std::int64_t>() ||
          c.bbox_w != e.at("bbox").at("w").get<int>() || c.bbox_h != e.at("bbox").at("h").get<int>() ||
          c.overall_size_px != e.at("overall_size_px").get<double>()) {
        throw DatasetError(path, "stored size fields of '" + c.source_id + "' do not match its mask");
      }
      cutouts.push_back(std::move(c));
    } catch (const json::exception& ex) {
      throw DatasetError(path, std::string("bad pool entry: ") + ex.what());
    }
  }
  return CutoutPool(std::move(cutouts));
}

// ---------------------------------------------------------------------------
// Cityscapes

/// Builds a manifest over a Cityscapes tree (leftImg8bit/, gtFine/,
/// camera/) for one split and writes it to `out_manifest`. Road masks use
/// the labelIds maps with road = 7; calibration comes from the per-frame
/// camera JSON.
inline DatasetManifest convert_cityscapes(const fs::path& root, const std::string& split,
                                          const fs::path& out_manifest) {
  const fs::path images_dir = root / "leftImg8bit" / split;
  if (!fs::is_directory(images_dir)) throw DatasetError(images_dir, "not a directory");
  std::vector<fs::path> images;
  for (const auto& entry : fs::recursive_directory_iterator(images_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with("_leftImg8bit.png")) images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());

  DatasetManifest manifest{out_manifest, {}};
  for (const fs::path& img : images) {
    const std::string name = img.filename().string();
    const std::string stem = name.substr(0, name.size() - std::string("_leftImg8bit.png").size());
    const std::string city = img.parent_path().filename().string();
    const fs::path gt = root / "gtFine" / split / city;
    const fs::path camera = root / "camera" / split / city / (stem + "_camera.json");
    FrameRecord rec;
    rec.frame_id = stem;
    rec.image = img;
    if (fs::exists(gt / (stem + "_gtFine_instanceIds.png"))) rec.labels = gt / (stem + "_gtFine_instanceIds.png");
    if (fs::exists(gt / (stem + "_gtFine_labelIds.png"))) {
      rec.road_mask = gt / (stem + "_gtFine_labelIds.png");
      rec.road_values = {7};
    }
    const json cam = read_json(camera);
    try {
      rec.calibration.focal_px = cam.at("intrinsic").at("fx").get<double>();
      rec.calibration.principal_col = cam.at("intrinsic").at("u0").get<double>();
      rec.calibration.principal_row = cam.at("intrinsic").at("v0").get<double>();
      rec.calibration.cam_height_m = cam.at("extrinsic").at("z").get<double>();
      rec.calibration.pitch_rad = cam.at("extrinsic").at("pitch").get<double>();
    } catch (const json::exception& e) {
      throw DatasetError(camera, std::string("bad camera file: ") + e.what());
    }
    rec.calibration_origin = camera;
    manifest.frames.push_back(std::move(rec));
  }
  write_manifest(out_manifest, manifest);
  return manifest;
}

}  // namespace roadpersp
