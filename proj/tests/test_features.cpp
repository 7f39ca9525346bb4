#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include "actrec/features.hpp"
#include "test_support.hpp"

using namespace actrec;
using fixtures::make_track;

namespace {

std::vector<Box> constant_velocity(std::size_t n, double dx, double dy) {
  std::vector<Box> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Box{10 + dx * i, 20 + dy * i, 20, 40});
  return out;
}

// Direct transcription of the feature table for a full window around t
// (frames t-k-1 .. t+k all present). p(i) is the box at frame t+i.
std::array<double, kCategoryFeatureCount> oracle(const Track& track, FrameIndex t, int k) {
  auto p = [&](int i) { return track.frames.at(static_cast<std::size_t>(t + i - track.frames.front().frame)).box; };
  double num_sz = 0, den_sz = 0, num_wd = 0, den_wd = 0, num_ht = 0, den_ht = 0, num_r = 0, den_r = 0, spd = 0;
  for (int i = -k; i <= k; ++i) {
    const Box a = p(i), b = p(i - 1);
    num_sz += std::abs(a.width * a.height - b.width * b.height);
    den_sz += b.width * b.height;
    num_wd += std::abs(a.width - b.width);
    den_wd += b.width;
    num_ht += std::abs(a.height - b.height);
    den_ht += b.height;
    num_r += std::abs(a.width / a.height - b.width / b.height);
    den_r += b.width / b.height;
    spd += std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
  }
  const double n = 2 * k + 1;
  std::array<double, kCategoryFeatureCount> out{};
  out[0] = num_sz / den_sz / n;
  out[1] = num_wd / den_wd / n;
  out[2] = num_ht / den_ht / n;
  out[3] = spd / n;
  const Box first = p(-k), last = p(k);
  out[4] = std::sqrt(std::pow((last.x - first.x) / n, 2) + std::pow((last.y - first.y) / n, 2));
  double mv = 0;
  for (int i = -(k - 1); i <= k; ++i) {
    const Box s = p(-i);
    const double span = k + i + 1;
    mv += std::sqrt(std::pow((last.x - s.x) / span, 2) + std::pow((last.y - s.y) / span, 2));
  }
  out[5] = mv / (2 * k);
  out[6] = num_r / den_r / n;
  return out;
}

}  // namespace

TEST(CategoryFeatures, StaticBoxGivesZeros) {
  const auto track = make_track("o", 0, std::vector<Box>(20, Box{50, 60, 20, 40}));
  const auto f = extract_category_features(track.frames, 10, 4);
  for (double v : f.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(f.support, 9);
}

TEST(CategoryFeatures, ConstantVelocitySpeed) {
  const auto track = make_track("o", 0, constant_velocity(10, 3, 4));
  const auto f = extract_category_features(track.frames, 5, 1);
  EXPECT_DOUBLE_EQ(f[Feature::AvgSpeed], 5.0);
  EXPECT_NEAR(f[Feature::AvgVector], 10.0 / 3.0, 1e-12);
}

TEST(CategoryFeatures, MatchesTableOracleOnRandomTracks) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> len(4, 12), kk(1, 2);
    const int k = kk(rng);
    const auto track = make_track("o", 100, fixtures::random_boxes(rng, static_cast<std::size_t>(len(rng))));
    for (const auto& fr : track.frames) {
      const FrameIndex t = fr.frame;
      if (t - k - 1 < track.frames.front().frame || t + k > track.frames.back().frame) continue;
      const auto got = extract_category_features(track.frames, t, k);
      const auto want = oracle(track, t, k);
      for (std::size_t i = 0; i < kCategoryFeatureCount; ++i) {
        EXPECT_NEAR(got.values[i], want[i], 1e-12 * std::max(1.0, std::abs(want[i]))) << "feature " << i;
      }
    }
  }
}

TEST(CategoryFeatures, TranslationInvariant) {
  std::mt19937_64 rng(3);
  auto boxes = fixtures::random_boxes(rng, 15);
  const auto a = make_track("o", 0, boxes);
  for (auto& b : boxes) {
    b.x += 37.5;
    b.y -= 12.25;
  }
  const auto b = make_track("o", 0, boxes);
  for (FrameIndex t = 0; t < 15; ++t) {
    const auto fa = extract_category_features(a.frames, t, 4);
    const auto fb = extract_category_features(b.frames, t, 4);
    for (std::size_t i = 0; i < kCategoryFeatureCount; ++i) {
      // Size features see no coordinates at all; motion features only differences.
      if (i == index_of(Feature::AvgSpeed) || i == index_of(Feature::AvgVector) ||
          i == index_of(Feature::MeanVector)) {
        EXPECT_NEAR(fa.values[i], fb.values[i], 1e-9);
      } else {
        EXPECT_EQ(fa.values[i], fb.values[i]);
      }
    }
  }
}

TEST(CategoryFeatures, ChangeFeaturesScaleInvariant) {
  std::mt19937_64 rng(5);
  auto boxes = fixtures::random_boxes(rng, 15);
  const auto a = make_track("o", 0, boxes);
  for (auto& b : boxes) {
    b.width *= 2.5;
    b.height *= 2.5;
  }
  const auto b = make_track("o", 0, boxes);
  for (FrameIndex t = 0; t < 15; ++t) {
    const auto fa = extract_category_features(a.frames, t, 3);
    const auto fb = extract_category_features(b.frames, t, 3);
    for (Feature f : {Feature::ChangeSize, Feature::ChangeWidth, Feature::ChangeHeight, Feature::ChangeRatio}) {
      EXPECT_NEAR(fa[f], fb[f], 1e-12);
    }
  }
}

TEST(CategoryFeatures, NonnegativeAndFinite) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto track = make_track("o", 0, fixtures::random_boxes(rng, 20));
    for (const auto& fr : track.frames) {
      const auto f = extract_category_features(track.frames, fr.frame, 4);
      for (double v : f.values) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(v, 0.0);
      }
    }
  }
}

TEST(CategoryFeatures, WindowShrinksAtTrackEdges) {
  const auto track = make_track("o", 0, constant_velocity(6, 3, 4));
  const auto first = extract_category_features(track.frames, 0, 4);
  EXPECT_EQ(first.support, 5);
  EXPECT_DOUBLE_EQ(first[Feature::AvgSpeed], 5.0);
  const auto single = make_track("s", 0, {Box{1, 1, 2, 2}});
  const auto f = extract_category_features(single.frames, 0, 4);
  for (double v : f.values) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(extract_category_features(track.frames, 99, 4), LookupError);
}

TEST(SimilarityFeatures, DirectFormulas) {
  std::vector<Box> boxes(11, Box{100, 50, 20, 40});
  const auto track = make_track("o", 5, boxes);
  const auto f = extract_similarity_features(track.frames, 5, 4);
  EXPECT_EQ(f[Feature::X], 100.0);
  EXPECT_EQ(f[Feature::Y], 50.0);
  EXPECT_EQ(f[Feature::Height], 40.0);
  EXPECT_EQ(f[Feature::Width], 20.0);
  EXPECT_EQ(f[Feature::Ratio], 2.0);
  EXPECT_EQ(f[Feature::Size], 800.0);
  EXPECT_EQ(f[Feature::Duration], 1.0);
  EXPECT_EQ(extract_similarity_features(track.frames, 15, 4)[Feature::Duration], 11.0);
  const auto square = make_track("q", 0, {Box{0, 0, 7, 7}});
  EXPECT_EQ(extract_similarity_features(square.frames, 0, 4)[Feature::Ratio], 1.0);
}

TEST(FeatureStats, PopulationVariance) {
  std::vector<SimilarityFeatureFrame> frames(2);
  frames[0].values[3] = 1.0;
  frames[1].values[3] = 3.0;
  const std::vector<ActivityId> labels{"a", "a"};
  const auto stats = compute_feature_stats(frames, labels, {"a"});
  EXPECT_DOUBLE_EQ(stats.per_activity[0][3].mean, 2.0);
  EXPECT_DOUBLE_EQ(stats.per_activity[0][3].var, 1.0);
}

TEST(FeatureStats, ConstantValuesGetFloor) {
  std::vector<SimilarityFeatureFrame> frames(4);
  for (auto& f : frames) f.values[0] = 2.0;
  const std::vector<ActivityId> labels{"a", "a", "b", "b"};
  const auto stats = compute_feature_stats(frames, labels, {"a", "b"});
  EXPECT_EQ(stats.per_activity[0][0].var, kMinimumVariance);
  EXPECT_GT(stats.overall[0].var, 0.0);
}

TEST(FeatureStats, PermutationInvariant) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<SimilarityFeatureFrame> frames(200);
  std::vector<ActivityId> labels;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (auto& v : frames[i].values) v = g(rng);
    labels.push_back(i % 3 == 0 ? "a" : "b");
  }
  const auto s1 = compute_feature_stats(frames, labels, {"a", "b"});
  std::vector<std::size_t> perm(frames.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<SimilarityFeatureFrame> f2;
  std::vector<ActivityId> l2;
  for (auto p : perm) {
    f2.push_back(frames[p]);
    l2.push_back(labels[p]);
  }
  const auto s2 = compute_feature_stats(f2, l2, {"a", "b"});
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    EXPECT_EQ(s1.overall[f].mean, s2.overall[f].mean);
    EXPECT_EQ(s1.overall[f].var, s2.overall[f].var);
    for (std::size_t a = 0; a < 2; ++a) {
      EXPECT_EQ(s1.per_activity[a][f].mean, s2.per_activity[a][f].mean);
      EXPECT_EQ(s1.per_activity[a][f].var, s2.per_activity[a][f].var);
    }
  }
}

TEST(FeatureStats, ActivityWithoutFramesRejected) {
  std::vector<SimilarityFeatureFrame> frames(2);
  const std::vector<ActivityId> labels{"a", "a"};
  EXPECT_THROW(compute_feature_stats(frames, labels, {"a", "b"}), InsufficientDataError);
}
