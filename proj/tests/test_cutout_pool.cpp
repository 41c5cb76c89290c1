#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "roadpersp/cutout_pool.hpp"
#include "support/synthetic.hpp"

namespace roadpersp {
namespace {

const ClassTable kTable = ClassTable::cityscapes();

RgbImage gradient_image(int rows, int cols) {
  RgbImage img(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      img(r, c) = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(c), 7};
  return img;
}

ObjectCutout sized(double size, const std::string& id) {
  ObjectCutout c;
  c.overall_size_px = size;
  c.source_id = id;
  return c;
}

TEST(OverallSize, MeanOfThreeTerms) {
  EXPECT_DOUBLE_EQ(overall_size(400, 20, 20), 20.0);
  EXPECT_DOUBLE_EQ(overall_size(100, 10, 40), 20.0);
}

TEST(ExtractCutouts, SingleSquareCar) {
  const RgbImage img = gradient_image(64, 64);
  LabelMap labels(64, 64, 0);
  for (int r = 10; r < 30; ++r)
    for (int c = 20; c < 40; ++c) labels(r, c) = 26001;
  const auto cuts = extract_cutouts(img, labels, {"car"}, kTable, "f0");
  ASSERT_EQ(cuts.size(), 1u);
  const ObjectCutout& c = cuts[0];
  EXPECT_EQ(c.bbox_w, 20);
  EXPECT_EQ(c.bbox_h, 20);
  EXPECT_EQ(c.area_px, 400);
  EXPECT_DOUBLE_EQ(c.overall_size_px, 20.0);
  EXPECT_EQ(c.class_label, "car");
  EXPECT_EQ(c.source_id, "f0#26001");
  EXPECT_EQ(c.pixels(0, 0), img(10, 20));
  EXPECT_EQ(c.pixels(19, 19), img(29, 39));
}

TEST(ExtractCutouts, ThinInstanceSize) {
  const RgbImage img = gradient_image(64, 64);
  LabelMap labels(64, 64, 0);
  // 10 x 40 bbox (rows 11..20, cols 5..44) with 100 labeled pixels.
  for (int c = 5; c < 45; ++c) labels(20, c) = 24001;  // 40
  for (int r = 11; r < 20; ++r) labels(r, 5) = 24001;  // 9
  for (int c = 6; c < 45; ++c) labels(11, c) = 24001;  // 39
  for (int c = 10; c < 22; ++c) labels(15, c) = 24001; // 12
  int count = 0;
  for (auto v : labels.values()) count += v != 0;
  ASSERT_EQ(count, 100);
  const auto cuts = extract_cutouts(img, labels, {"person"}, kTable);
  ASSERT_EQ(cuts.size(), 1u);
  EXPECT_EQ(cuts[0].bbox_h, 10);
  EXPECT_EQ(cuts[0].bbox_w, 40);
  EXPECT_DOUBLE_EQ(cuts[0].overall_size_px, 20.0);
}

TEST(ExtractCutouts, NoEligibleInstances) {
  const RgbImage img = gradient_image(32, 32);
  LabelMap labels(32, 32, 0);
  labels(5, 5) = 26001;
  EXPECT_TRUE(extract_cutouts(img, labels, {"person"}, kTable).empty());
  EXPECT_TRUE(extract_cutouts(img, labels, {}, kTable).empty());
}

TEST(ExtractCutouts, SkipsBorderTouchingInstances) {
  const RgbImage img = gradient_image(32, 32);
  LabelMap labels(32, 32, 0);
  for (int r = 0; r < 5; ++r) labels(r, 10) = 26001;   // touches top
  for (int r = 10; r < 15; ++r) labels(r, 31) = 26002; // touches right
  for (int r = 10; r < 15; ++r) labels(r, 10) = 26003;
  const auto cuts = extract_cutouts(img, labels, {"car"}, kTable);
  ASSERT_EQ(cuts.size(), 1u);
  EXPECT_EQ(cuts[0].source_id, "frame#26003");
}

TEST(ExtractCutouts, OccludedInstanceKeepsFullSupport) {
  const RgbImage img = gradient_image(32, 32);
  LabelMap labels(32, 32, 0);
  labels(5, 5) = 26001;
  labels(5, 9) = 26001;
  const auto cuts = extract_cutouts(img, labels, {"car"}, kTable);
  ASSERT_EQ(cuts.size(), 1u);
  EXPECT_EQ(cuts[0].bbox_w, 5);
  EXPECT_EQ(cuts[0].area_px, 2);
}

TEST(ExtractCutouts, BareClassRegionsSplitIntoComponents) {
  const RgbImage img = gradient_image(32, 32);
  LabelMap labels(32, 32, 0);
  labels(5, 5) = 20;  // traffic sign, no instance id
  labels(20, 20) = 20;
  labels(21, 21) = 20;
  const auto cuts = extract_cutouts(img, labels, {"traffic sign"}, kTable, "f");
  ASSERT_EQ(cuts.size(), 2u);
  EXPECT_EQ(cuts[0].source_id, "f#20.c1");
  EXPECT_EQ(cuts[1].area_px, 2);
}

TEST(ExtractCutouts, DimensionMismatch) {
  EXPECT_THROW(extract_cutouts(gradient_image(4, 4), LabelMap(4, 5), {"car"}, kTable), std::invalid_argument);
}

TEST(ExtractCutouts, StoredSizeMatchesMask) {
  const CameraRig rig = testing::small_rig();
  RandomSource rng(3);
  LabelMap labels(rig.image_rows, rig.image_cols, 0);
  for (std::uint32_t k = 1; k <= 20; ++k) {
    const int r0 = 2 + static_cast<int>(rng.below(300)), c0 = 2 + static_cast<int>(rng.below(700));
    for (int i = 0; i < 60; ++i) labels(r0 + static_cast<int>(rng.below(40)), c0 + static_cast<int>(rng.below(40))) = 26000 + k;
  }
  const RgbImage img = testing::scene_image(rig, 1);
  const auto a = extract_cutouts(img, labels, {"car"}, kTable);
  const auto b = extract_cutouts(img, labels, {"car"}, kTable);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::int64_t area = 0;
    for (auto v : a[i].alpha.values()) area += v;
    EXPECT_EQ(area, a[i].area_px);
    EXPECT_EQ(overall_size(area, a[i].alpha.cols(), a[i].alpha.rows()), a[i].overall_size_px);
    EXPECT_LE(a[i].area_px, static_cast<std::int64_t>(a[i].bbox_w) * a[i].bbox_h);
    EXPECT_EQ(a[i].pixels, b[i].pixels);
    EXPECT_EQ(a[i].alpha, b[i].alpha);
  }
}

CutoutPool four_sizes() {
  return CutoutPool({sized(30, "c"), sized(10, "a"), sized(50, "d"), sized(20, "b")});
}

TEST(CutoutPool, SortedBySize) {
  const CutoutPool pool = four_sizes();
  for (std::size_t i = 1; i < pool.size(); ++i) EXPECT_LE(pool[i - 1].overall_size_px, pool[i].overall_size_px);
}

TEST(QueryBySize, PicksBothCandidatesEvenly) {
  const CutoutPool pool = four_sizes();
  std::map<std::string, int> hits;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    RandomSource rng(seed);
    const ObjectCutout* c = pool.query_by_size(18, 35, rng);
    ASSERT_NE(c, nullptr);
    ++hits[c->source_id];
  }
  ASSERT_EQ(hits.size(), 2u);
  // Binomial(2000, 1/2): sd ~ 22.4; allow 4 sd.
  EXPECT_NEAR(hits["b"], 1000, 90);
  EXPECT_NEAR(hits["c"], 1000, 90);
}

TEST(QueryBySize, EmptyInterval) {
  RandomSource rng(1);
  EXPECT_EQ(four_sizes().query_by_size(60, 70, rng), nullptr);
}

TEST(QueryBySize, ClosedInterval) {
  RandomSource rng(1);
  const ObjectCutout* c = four_sizes().query_by_size(50, 50, rng);
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->source_id, "d");
}

TEST(QueryBySize, InvertedIntervalIsError) {
  RandomSource rng(1);
  EXPECT_THROW(four_sizes().query_by_size(40, 30, rng), std::invalid_argument);
}

TEST(QueryBySize, UniformOverFullRangeChiSquare) {
  const CutoutPool pool = four_sizes();
  RandomSource rng(99);
  std::map<std::string, int> hits;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++hits[pool.query_by_size(10, 50, rng)->source_id];
  double chi2 = 0.0;
  for (const auto& [id, n] : hits) {
    const double e = draws / 4.0;
    chi2 += (n - e) * (n - e) / e;
    // Each count within 3 sd of Binomial(10^4, 1/4).
    EXPECT_NEAR(n, e, 3.0 * std::sqrt(draws * 0.25 * 0.75));
  }
  EXPECT_EQ(hits.size(), 4u);
  EXPECT_LT(chi2, 16.27);  // chi-square, 3 dof, p = 0.001
}

TEST(QueryBySize, NeverOutsideIntervalProperty) {
  const CutoutPool pool = testing::synthetic_pool(300, 1.0, 200.0, 5);
  RandomSource rng(17);
  for (int i = 0; i < 5000; ++i) {
    double a = rng.uniform(0.0, 220.0), b = rng.uniform(0.0, 220.0);
    if (a > b) std::swap(a, b);
    const ObjectCutout* c = pool.query_by_size(a, b, rng);
    std::size_t expected = 0;
    for (const auto& x : pool.cutouts()) expected += x.overall_size_px >= a && x.overall_size_px <= b;
    EXPECT_EQ(pool.candidates(a, b).size(), expected);
    if (c == nullptr) {
      EXPECT_EQ(expected, 0u);
    } else {
      EXPECT_GE(c->overall_size_px, a);
      EXPECT_LE(c->overall_size_px, b);
    }
  }
}

}  // namespace
}  // namespace roadpersp
