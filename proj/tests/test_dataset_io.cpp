#include <gtest/gtest.h>

#include <cstring>
#include <limits>

#include "roadpersp/dataset_io.hpp"
#include "support/synthetic.hpp"

namespace roadpersp {
namespace {

using testing::scratch_dir;

bool bit_equal(const FloatRaster& a, const FloatRaster& b) {
  return a.same_shape(b) && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

TEST(Pfm, SmallRoundTrip) {
  FloatRaster x(2, 2);
  x(0, 0) = 0;
  x(0, 1) = 1;
  x(1, 0) = 2;
  x(1, 1) = 3;
  const std::string bytes = encode_pfm(x);
  EXPECT_EQ(bytes.substr(0, 10), "Pf\n2 2\n-1\n");
  // Bottom row first.
  float first = 0;
  std::memcpy(&first, bytes.data() + 10, 4);
  EXPECT_EQ(first, 2.0f);
  EXPECT_TRUE(bit_equal(decode_pfm(bytes), x));
}

TEST(Pfm, RejectsBigEndian) {
  EXPECT_THROW(decode_pfm(std::string("Pf\n1 1\n1.0\n") + std::string(4, '\0')), DatasetError);
}

TEST(Pfm, RejectsMalformedHeaders) {
  EXPECT_THROW(decode_pfm("P6\n1 1\n255\n"), DatasetError);
  EXPECT_THROW(decode_pfm("PF\n1 1\n-1\n" + std::string(12, '\0')), DatasetError);
  EXPECT_THROW(decode_pfm("Pf\nx 1\n-1\n" + std::string(4, '\0')), DatasetError);
  EXPECT_THROW(decode_pfm("Pf\n2 2\n-1\n" + std::string(4, '\0')), DatasetError);
}

TEST(Pfm, RejectsNaN) {
  FloatRaster x(1, 2, 1.0f);
  x(0, 1) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(encode_pfm(x), std::invalid_argument);
  std::string bytes = encode_pfm(FloatRaster(1, 1, 1.0f));
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + bytes.size() - 4, &nan, 4);
  EXPECT_THROW(decode_pfm(bytes), DatasetError);
}

TEST(Pfm, MillionRandomFloatsStableAndExact) {
  RandomSource rng(12);
  FloatRaster x(1000, 1000);
  for (float& v : x.values()) {
    do {
      const auto bits = static_cast<std::uint32_t>(rng.next());
      std::memcpy(&v, &bits, 4);
    } while (!std::isfinite(v));
  }
  const auto dir = scratch_dir("pfm");
  write_pfm(dir / "a.pfm", x);
  write_pfm(dir / "b.pfm", x);
  EXPECT_EQ(fnv1a64(read_file_bytes(dir / "a.pfm")), fnv1a64(read_file_bytes(dir / "b.pfm")));
  EXPECT_TRUE(bit_equal(read_pfm(dir / "a.pfm"), x));
}

TEST(Png, LabelRoundTripSixteenBit) {
  LabelMap m(5, 7, 0);
  m(0, 0) = 65535;
  m(2, 3) = 26001;
  m(4, 6) = 1;
  const auto dir = scratch_dir("png");
  write_label_png(dir / "l.png", m);
  EXPECT_EQ(read_label_png(dir / "l.png"), m);
  m(1, 1) = 70000;
  EXPECT_THROW(write_label_png(dir / "bad.png", m), DatasetError);
}

TEST(Png, RgbRoundTrip) {
  const RgbImage img = testing::scene_image(testing::small_rig(), 2);
  const auto dir = scratch_dir("rgb");
  write_rgb_png(dir / "i.png", img);
  EXPECT_EQ(read_rgb_png(dir / "i.png"), img);
  EXPECT_THROW(read_rgb_png(dir / "missing.png"), DatasetError);
}

TEST(Png, ScoreRasterFromSixteenBit) {
  LabelMap m(1, 3, 0);
  m(0, 1) = 65535;
  m(0, 2) = 32768;
  const auto dir = scratch_dir("score");
  write_label_png(dir / "s.png", m);
  const FloatRaster s = read_score_raster(dir / "s.png");
  EXPECT_EQ(s(0, 0), 0.0f);
  EXPECT_EQ(s(0, 1), 1.0f);
  EXPECT_NEAR(s(0, 2), 0.5, 1e-4);
}

TEST(Calibration, DefaultsPrincipalPointToCenter) {
  const CalibrationSpec spec = CalibrationSpec::from_json({{"focal_px", 1000}, {"cam_height_m", 1.2}, {"pitch_rad", 0.0}}, "c.json");
  const CameraRig rig = spec.resolve(400, 600, nullptr, "c.json");
  EXPECT_EQ(rig.principal_row, 200.0);
  EXPECT_EQ(rig.principal_col, 300.0);
}

TEST(Calibration, EstimatesMissingPitchFromRoad) {
  const CalibrationSpec spec = CalibrationSpec::from_json({{"focal_px", 2265}, {"cam_height_m", 1.5}}, "c.json");
  LabelMap road(1024, 64, 0);
  for (int r = 512; r < 1024; ++r) road(r, 3) = 1;
  EXPECT_NEAR(spec.resolve(1024, 64, &road, "c.json").pitch_rad, std::atan(16.0 / 2265.0), 1e-15);
  EXPECT_THROW(spec.resolve(1024, 64, nullptr, "c.json"), DatasetError);
}

TEST(Calibration, RejectsMissingFocalAndSizeMismatch) {
  EXPECT_THROW(CalibrationSpec::from_json({{"cam_height_m", 1.5}}, "c.json"), DatasetError);
  const CalibrationSpec spec = CalibrationSpec::from_json(
      {{"focal_px", 10}, {"cam_height_m", 1.5}, {"pitch_rad", 0.0}, {"image_rows", 5}}, "c.json");
  EXPECT_THROW(spec.resolve(6, 6, nullptr, "c.json"), DatasetError);
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch_dir("manifest");
    rig_ = testing::small_rig();
    write_rgb_png(dir_ / "a.png", RgbImage(rig_.image_rows, rig_.image_cols));
    write_rgb_png(dir_ / "b.png", RgbImage(rig_.image_rows, rig_.image_cols));
    write_label_png(dir_ / "road.png", testing::road_mask(rig_));
    write_json(dir_ / "calib.json", rig_to_json(rig_));
    write_json(dir_ / "other_calib.json", {{"focal_px", 500.0}, {"cam_height_m", 2.0}, {"pitch_rad", 0.01}});
  }
  fs::path dir_;
  CameraRig rig_;
};

TEST_F(ManifestTest, TwoFrames) {
  write_json(dir_ / "m.json", {{"frames",
                                {{{"frame_id", "a"}, {"image", "a.png"}, {"calibration", "calib.json"}},
                                 {{"frame_id", "b"}, {"image", "b.png"}, {"road_mask", "road.png"},
                                  {"calibration", "other_calib.json"}}}}});
  const DatasetManifest m = load_manifest(dir_ / "m.json");
  ASSERT_EQ(m.frames.size(), 2u);
  EXPECT_EQ(m.frames[1].frame_id, "b");
  const LoadedFrame b = load_frame(m.frames[1]);
  EXPECT_EQ(b.rig.focal_px, 500.0);
  EXPECT_TRUE(b.road_mask.has_value());
  EXPECT_EQ(load_frame(m.frames[0]).rig, rig_);
}

TEST_F(ManifestTest, DuplicateIdNamesTheId) {
  write_json(dir_ / "m.json", {{"defaults", {{"calibration", "calib.json"}}},
                               {"frames", {{{"frame_id", "dup"}, {"image", "a.png"}},
                                           {{"frame_id", "dup"}, {"image", "b.png"}}}}});
  try {
    load_manifest(dir_ / "m.json");
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("dup"), std::string::npos);
    EXPECT_EQ(e.path(), dir_ / "m.json");
  }
}

TEST_F(ManifestTest, DefaultCalibrationApplied) {
  write_json(dir_ / "m.json", {{"defaults", {{"calibration", "calib.json"}}},
                               {"frames", {{{"frame_id", "a"}, {"image", "a.png"}}}}});
  const DatasetManifest m = load_manifest(dir_ / "m.json");
  EXPECT_EQ(*m.frames[0].calibration.focal_px, rig_.focal_px);
  EXPECT_EQ(m.frames[0].calibration_origin, dir_ / "calib.json");
}

TEST_F(ManifestTest, InlineCalibration) {
  write_json(dir_ / "m.json", {{"frames", {{{"frame_id", "a"}, {"image", "a.png"},
                                            {"calibration", {{"focal_px", 700}, {"cam_height_m", 1.0}, {"pitch_rad", 0}}}}}}});
  EXPECT_EQ(load_frame(load_manifest(dir_ / "m.json").frames[0]).rig.focal_px, 700.0);
}

TEST_F(ManifestTest, UnresolvedCalibration) {
  write_json(dir_ / "m.json", {{"frames", {{{"frame_id", "a"}, {"image", "a.png"}}}}});
  EXPECT_THROW(load_manifest(dir_ / "m.json"), DatasetError);
}

TEST_F(ManifestTest, MissingFileNamesPath) {
  write_json(dir_ / "m.json", {{"defaults", {{"calibration", "calib.json"}}},
                               {"frames", {{{"frame_id", "a"}, {"image", "nope.png"}}}}});
  try {
    load_manifest(dir_ / "m.json");
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.path(), dir_ / "nope.png");
  }
}

TEST_F(ManifestTest, DimensionMismatchAtLoad) {
  write_label_png(dir_ / "small_road.png", LabelMap(10, 10, 1));
  write_json(dir_ / "m.json", {{"defaults", {{"calibration", "calib.json"}}},
                               {"frames", {{{"frame_id", "a"}, {"image", "a.png"}, {"road_mask", "small_road.png"}}}}});
  const DatasetManifest m = load_manifest(dir_ / "m.json");
  EXPECT_THROW(load_frame(m.frames[0]), DatasetError);
}

TEST_F(ManifestTest, RoadValuesSelectRoad) {
  LabelMap ids(rig_.image_rows, rig_.image_cols, 0);
  ids(300, 5) = 7;
  ids(300, 6) = 8;
  write_label_png(dir_ / "ids.png", ids);
  write_json(dir_ / "m.json", {{"defaults", {{"calibration", "calib.json"}, {"road_values", {7}}}},
                               {"frames", {{{"frame_id", "a"}, {"image", "a.png"}, {"road_mask", "ids.png"}}}}});
  const LoadedFrame f = load_frame(load_manifest(dir_ / "m.json").frames[0]);
  EXPECT_EQ((*f.road_mask)(300, 5), 1u);
  EXPECT_EQ((*f.road_mask)(300, 6), 0u);
}

TEST_F(ManifestTest, LoadingDoesNotModifySources) {
  write_json(dir_ / "m.json", {{"defaults", {{"calibration", "calib.json"}}},
                               {"frames", {{{"frame_id", "a"}, {"image", "a.png"}, {"road_mask", "road.png"}}}}});
  const std::string before = read_file_bytes(dir_ / "road.png");
  load_frame(load_manifest(dir_ / "m.json").frames[0]);
  EXPECT_EQ(read_file_bytes(dir_ / "road.png"), before);
}

TEST(Pool, SaveLoadRoundTrip) {
  const CutoutPool pool = testing::synthetic_pool(30, 2.0, 60.0, 4);
  const auto dir = scratch_dir("pool");
  save_pool(dir, pool);
  const CutoutPool back = load_pool(dir);
  ASSERT_EQ(back.size(), pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EXPECT_EQ(back[i].source_id, pool[i].source_id);
    EXPECT_EQ(back[i].pixels, pool[i].pixels);
    EXPECT_EQ(back[i].alpha, pool[i].alpha);
    EXPECT_EQ(back[i].overall_size_px, pool[i].overall_size_px);
  }
  const json manifest = read_json(dir / "pool.json");
  EXPECT_EQ(manifest[0].at("bbox").at("w").get<int>(), pool[0].bbox_w);
}

TEST(Pool, RejectsTamperedSize) {
  const CutoutPool pool = testing::synthetic_pool(3, 5.0, 10.0, 4);
  const auto dir = scratch_dir("pool_bad");
  save_pool(dir, pool);
  json manifest = read_json(dir / "pool.json");
  manifest[0]["area_px"] = 123456;
  write_json(dir / "pool.json", manifest);
  EXPECT_THROW(load_pool(dir), DatasetError);
}

TEST(ClassTable, LoadsFromJson) {
  const auto dir = scratch_dir("classes");
  write_json(dir / "t.json", {{"instance_divisor", 100}, {"classes", {{"5", "cone"}}}});
  const ClassTable t = load_class_table(dir / "t.json");
  EXPECT_EQ(t.instance_divisor, 100u);
  EXPECT_EQ(*t.name_of(5), "cone");
}

TEST(Cityscapes, ConvertsDirectoryLayout) {
  const auto root = scratch_dir("cityscapes");
  const std::string stem = "aachen_000000_000019";
  write_rgb_png(root / "leftImg8bit/train/aachen" / (stem + "_leftImg8bit.png"), RgbImage(8, 16));
  write_label_png(root / "gtFine/train/aachen" / (stem + "_gtFine_instanceIds.png"), LabelMap(8, 16, 0));
  LabelMap ids(8, 16, 0);
  for (int r = 5; r < 8; ++r)
    for (int c = 0; c < 16; ++c) ids(r, c) = 7;
  write_label_png(root / "gtFine/train/aachen" / (stem + "_gtFine_labelIds.png"), ids);
  write_json(root / "camera/train/aachen" / (stem + "_camera.json"),
             {{"extrinsic", {{"pitch", 0.038}, {"z", 1.22}, {"x", 1.7}, {"y", 0.1}}},
              {"intrinsic", {{"fx", 2262.52}, {"fy", 2265.3}, {"u0", 8.0}, {"v0", 4.0}}}});
  const fs::path out = root / "out" / "manifest.json";
  convert_cityscapes(root, "train", out);
  const DatasetManifest m = load_manifest(out);
  ASSERT_EQ(m.frames.size(), 1u);
  const LoadedFrame f = load_frame(m.frames[0]);
  EXPECT_EQ(f.rig.focal_px, 2262.52);
  EXPECT_EQ(f.rig.cam_height_m, 1.22);
  EXPECT_EQ(f.rig.pitch_rad, 0.038);
  EXPECT_EQ((*f.road_mask)(6, 3), 1u);
  EXPECT_EQ((*f.road_mask)(2, 3), 0u);
}

}  // namespace
}  // namespace roadpersp
