#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "actrec/cfr.hpp"

using namespace actrec;

namespace {

ScoreFrame score(FrameIndex t, const std::string& object, std::vector<double> s) {
  ScoreFrame f;
  f.frame = t;
  f.object = object;
  f.scores = std::move(s);
  return f;
}

SimilarityFeatureFrame feat(FrameIndex t, const std::string& object, double v) {
  SimilarityFeatureFrame f;
  f.frame = t;
  f.object = object;
  f.values.fill(v);
  return f;
}

// Four features in two categories, unit weights, r = 2.
SimilaritySchema small_schema() { return SimilaritySchema{{"a", "b"}, {{0, 1}, {2, 3}}}; }

MdpfParams unit_params(std::size_t n, std::size_t categories = 2) {
  MdpfParams p;
  p.n = n;
  p.category_weights.assign(categories, 1.0);
  p.feature_weights.fill(1.0);
  return p;
}

std::array<double, kFeatureCount> vec(std::initializer_list<double> head) {
  std::array<double, kFeatureCount> v{};
  std::copy(head.begin(), head.end(), v.begin());
  return v;
}

}  // namespace

TEST(ConfidentFrames, ThresholdRule) {
  auto p = uniform_fusion_params({"walk", "run"}, {"c1", "c2"});
  const std::vector<ScoreFrame> frames{score(0, "o", {0.85, 0.15}), score(1, "o", {0.7, 0.3}),
                                       score(2, "o", {0.2, 0.8})};
  const auto part = detect_confident_frames(frames, p);
  EXPECT_EQ(part.assignment(0), std::optional<std::size_t>(0));
  EXPECT_FALSE(part.assignment(1).has_value());  // equal to th is a left frame
  EXPECT_EQ(part.assignment(2), std::optional<std::size_t>(1));
  EXPECT_EQ(part.left().size(), 1u);
}

TEST(ConfidentFrames, ConflictGoesToHigherScore) {
  auto p = uniform_fusion_params({"A", "B"}, {"c"}, 0.3);
  const std::vector<ScoreFrame> frames{score(0, "o", {0.45, 0.55}), score(1, "o", {0.5, 0.5})};
  const auto part = detect_confident_frames(frames, p);
  EXPECT_EQ(part.assignment(0), std::optional<std::size_t>(1));
  EXPECT_EQ(part.assignment(1), std::optional<std::size_t>(0));
}

TEST(ConfidentFrames, PartitionCoversEveryFrameOnce) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  auto p = uniform_fusion_params({"A", "B", "C"}, {"c"}, 0.4);
  std::vector<ScoreFrame> frames;
  for (int i = 0; i < 300; ++i) {
    double a = u(rng), b = u(rng), c = u(rng), s = a + b + c;
    frames.push_back(score(i, i % 2 ? "x" : "y", {a / s, b / s, c / s}));
  }
  const auto part = detect_confident_frames(frames, p);
  std::size_t total = part.left().size();
  for (std::size_t a = 0; a < 3; ++a) total += part.confident(a).size();
  EXPECT_EQ(total, frames.size());
}

TEST(TopTwo, Examples) {
  EXPECT_EQ(top_two_candidates(std::vector<double>{0.5, 0.3, 0.2}), (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(top_two_candidates(std::vector<double>{0.4, 0.4}), (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(top_two_candidates(std::vector<double>{1.0, 0.0}), (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(top_two_candidates(std::vector<double>{0.1, 0.2, 0.7}), (std::pair<std::size_t, std::size_t>{2, 1}));
  EXPECT_EQ(top_two_candidates(std::vector<double>{0.3, 0.6, 0.3}), (std::pair<std::size_t, std::size_t>{1, 0}));
  EXPECT_THROW(top_two_candidates(std::vector<double>{1.0}), ValidationError);
}

TEST(Mdpf, HandExamples) {
  const auto s = small_schema();
  const auto x = vec({3, 4, 0, 0}), y = vec({0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(mdpf_distance(x, y, s, unit_params(0)), 5.0);
  EXPECT_DOUBLE_EQ(mdpf_distance(x, y, s, unit_params(2)), 0.0);
  EXPECT_EQ(mdpf_distance(x, x, s, unit_params(0)), 0.0);
  EXPECT_THROW(mdpf_distance(x, y, s, unit_params(4)), ValidationError);
}

TEST(Mdpf, EuclideanSpecialCase) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10, 10);
  const SimilaritySchema one{{"all"}, {{0, 1, 2, 3, 4, 5, 6}}};
  for (int trial = 0; trial < 500; ++trial) {
    std::array<double, kFeatureCount> x{}, y{};
    double ss = 0;
    for (std::size_t f = 0; f < 7; ++f) {
      x[f] = u(rng);
      y[f] = u(rng);
      ss += (x[f] - y[f]) * (x[f] - y[f]);
    }
    EXPECT_NEAR(mdpf_distance(x, y, one, unit_params(0, 1)), std::sqrt(ss), 1e-12);
  }
}

TEST(Mdpf, DiscardSetMatchesSubsetOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 5), wu(0.1, 3);
  const SimilaritySchema s{{"a", "b", "c"}, {{0, 1, 2}, {3, 4}, {5, 6, 7}}};
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<double, kFeatureCount> x{}, y{};
    MdpfParams p = unit_params(trial % 8, 3);
    for (std::size_t f = 0; f < 8; ++f) {
      x[f] = u(rng);
      y[f] = u(rng);
      p.feature_weights[f] = wu(rng);
    }
    // Brute force: among all n-subsets of positions, the discard set is the
    // one with the largest total of weighted differences.
    std::vector<std::pair<std::size_t, std::size_t>> pos;
    std::vector<double> diff;
    for (std::size_t c = 0; c < s.categories.size(); ++c) {
      for (std::size_t k = 0; k < s.categories[c].size(); ++k) {
        pos.emplace_back(c, k);
        const std::size_t f = s.categories[c][k];
        diff.push_back(p.feature_weights[f] * std::abs(x[f] - y[f]));
      }
    }
    double best = -1;
    std::vector<std::pair<std::size_t, std::size_t>> oracle;
    for (unsigned mask = 0; mask < (1u << 8); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != p.n) continue;
      double total = 0;
      std::vector<std::pair<std::size_t, std::size_t>> pick;
      for (std::size_t i = 0; i < 8; ++i) {
        if (mask & (1u << i)) {
          total += diff[i];
          pick.push_back(pos[i]);
        }
      }
      if (total > best) {
        best = total;
        oracle = pick;
      }
    }
    std::sort(oracle.begin(), oracle.end());
    EXPECT_EQ(mdpf_discard_set(x, y, s, p), oracle) << "trial " << trial;
  }
}

TEST(Mdpf, SymmetricAndNonincreasingInN) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3, 3);
  const auto s = similarity_schema(default_schema());
  for (int trial = 0; trial < 300; ++trial) {
    std::array<double, kFeatureCount> x{}, y{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      x[f] = u(rng);
      y[f] = u(rng);
    }
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n <= 4; ++n) {
      auto p = unit_params(n, s.categories.size());
      const double d = mdpf_distance(x, y, s, p);
      EXPECT_EQ(d, mdpf_distance(y, x, s, p));
      EXPECT_LE(d, prev + 1e-12);
      prev = d;
    }
  }
}

TEST(Mdpf, SimilaritySchemaAddsBoxGroup) {
  const auto s = similarity_schema(default_schema());
  ASSERT_EQ(s.categories.size(), 3u);
  EXPECT_EQ(s.names.back(), "mbb");
  EXPECT_EQ(s.feature_count(), 13u);
}

TEST(Mdpf, DefaultWeights) {
  FeatureStats stats;
  for (auto& mv : stats.overall) mv = MeanVar{0, 4};
  const auto s = similarity_schema(default_schema());
  const auto p = default_mdpf_params(stats, s);
  EXPECT_EQ(p.r, 2.0);
  EXPECT_EQ(p.n, 2u);
  EXPECT_EQ(p.feature_weights[index_of(Feature::AvgSpeed)], 0.5);
  EXPECT_EQ(p.feature_weights[index_of(Feature::X)], 1.0);
  EXPECT_EQ(p.feature_weights[index_of(Feature::Duration)], 1.0);
  EXPECT_EQ(p.feature_weights[index_of(Feature::Size)], 0.5);
}

TEST(Reference, NearestSameObject) {
  auto p = uniform_fusion_params({"walk", "run"}, {"c"}, 0.7);
  std::vector<ScoreFrame> frames{score(10, "o", {0.9, 0.1}), score(50, "o", {0.9, 0.1}),
                                 score(18, "o", {0.6, 0.4}), score(20, "q", {0.1, 0.9})};
  const auto part = detect_confident_frames(frames, p);
  const FrameRef left{2, "o", 18};
  const auto walk = locate_reference_frame(left, 0, part);
  ASSERT_TRUE(walk.has_value());
  EXPECT_EQ(walk->frame, 10);
  const auto run = locate_reference_frame(left, 1, part);
  ASSERT_TRUE(run.has_value());
  EXPECT_EQ(run->object, "q");
  EXPECT_EQ(run->frame, 20);
}

TEST(Reference, AbsentAnywhere) {
  auto p = uniform_fusion_params({"walk", "run", "fight"}, {"c"}, 0.7);
  std::vector<ScoreFrame> frames{score(0, "o", {0.9, 0.05, 0.05}), score(1, "o", {0.5, 0.3, 0.2})};
  const auto part = detect_confident_frames(frames, p);
  EXPECT_FALSE(locate_reference_frame(FrameRef{1, "o", 1}, 2, part).has_value());
}

TEST(Reference, EquidistantPrefersEarlierFrame) {
  auto p = uniform_fusion_params({"A", "B"}, {"c"}, 0.7);
  std::vector<ScoreFrame> frames{score(4, "o", {0.9, 0.1}), score(8, "o", {0.9, 0.1}), score(6, "o", {0.5, 0.5})};
  const auto part = detect_confident_frames(frames, p);
  EXPECT_EQ(locate_reference_frame(FrameRef{2, "o", 6}, 0, part)->frame, 4);
}

TEST(CfrRecognize, AllConfidentKeepsLabels) {
  auto p = uniform_fusion_params({"A", "B"}, {"c"}, 0.6);
  std::vector<ScoreFrame> s{score(0, "o", {0.9, 0.1}), score(1, "o", {0.2, 0.8})};
  std::vector<SimilarityFeatureFrame> f{feat(0, "o", 0), feat(1, "o", 1)};
  const auto sch = small_schema();
  const auto d = cfr_recognize(s, f, p, sch, unit_params(0));
  EXPECT_EQ(d[0].label, 0u);
  EXPECT_EQ(d[1].label, 1u);
  for (const auto& x : d) {
    EXPECT_EQ(x.provenance, Provenance::Confident);
    EXPECT_FALSE(x.distance1.has_value());
  }
}

TEST(CfrRecognize, SmallerDissimilarityWins) {
  auto p = uniform_fusion_params({"A", "B"}, {"c"}, 0.7);
  const auto sch = small_schema();
  // Left frame at value 0 per feature; candi1 (A) reference differs by 1 in
  // all four features (D = 2 * sqrt(2)), candi2 (B) by 0.5 (D = sqrt(2)).
  std::vector<ScoreFrame> s{score(0, "o", {0.9, 0.1}), score(1, "o", {0.1, 0.9}), score(2, "o", {0.6, 0.4})};
  std::vector<SimilarityFeatureFrame> f{feat(0, "o", 1.0), feat(1, "o", 0.5), feat(2, "o", 0.0)};
  const auto d = cfr_recognize(s, f, p, sch, unit_params(0));
  EXPECT_EQ(d[2].provenance, Provenance::Resolved);
  EXPECT_EQ(d[2].candi1, std::optional<std::size_t>(0));
  EXPECT_EQ(d[2].label, 1u);
  EXPECT_NEAR(*d[2].distance1, 2 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(*d[2].distance2, std::sqrt(2.0), 1e-12);
  // Reversed distances keep candi1.
  std::swap(f[0], f[1]);
  f[0].frame = 0;
  f[1].frame = 1;
  EXPECT_EQ(cfr_recognize(s, f, p, sch, unit_params(0))[2].label, 0u);
}

TEST(CfrRecognize, TieKeepsCandi1) {
  auto p = uniform_fusion_params({"A", "B"}, {"c"}, 0.7);
  std::vector<ScoreFrame> s{score(0, "o", {0.9, 0.1}), score(1, "o", {0.1, 0.9}), score(2, "o", {0.4, 0.6})};
  std::vector<SimilarityFeatureFrame> f{feat(0, "o", 1.0), feat(1, "o", -1.0), feat(2, "o", 0.0)};
  EXPECT_EQ(cfr_recognize(s, f, p, small_schema(), unit_params(0))[2].label, 1u);
}

TEST(CfrRecognize, MissingReferencesFallBack) {
  auto p = uniform_fusion_params({"A", "B", "C"}, {"c"}, 0.7);
  const auto sch = small_schema();
  // Only C has a confident frame; left frame candidates are (A, B).
  std::vector<ScoreFrame> s{score(0, "o", {0.05, 0.05, 0.9}), score(1, "o", {0.5, 0.4, 0.1})};
  std::vector<SimilarityFeatureFrame> f{feat(0, "o", 0), feat(1, "o", 0)};
  const auto d = cfr_recognize(s, f, p, sch, unit_params(0));
  EXPECT_EQ(d[1].provenance, Provenance::Fallback);
  EXPECT_EQ(d[1].label, 0u);
}

TEST(CfrRecognize, LoneCandi2ReferenceNeedsAcceptanceRadius) {
  auto p = uniform_fusion_params({"A", "B"}, {"c"}, 0.7);
  const auto sch = small_schema();
  std::vector<ScoreFrame> s{score(0, "o", {0.1, 0.9}), score(1, "o", {0.6, 0.4})};
  std::vector<SimilarityFeatureFrame> f{feat(0, "o", 1.0), feat(1, "o", 0.0)};
  // D_w to the candi2 reference is 2 * sqrt(2).
  EXPECT_EQ(cfr_recognize(s, f, p, sch, unit_params(0))[1].label, 1u);
  CfrOptions near;
  near.acceptance_radius = {10.0, 3.0};
  EXPECT_EQ(cfr_recognize(s, f, p, sch, unit_params(0), near)[1].label, 1u);
  CfrOptions tight;
  tight.acceptance_radius = {10.0, 2.0};
  const auto d = cfr_recognize(s, f, p, sch, unit_params(0), tight);
  EXPECT_EQ(d[1].label, 0u);
  EXPECT_EQ(d[1].provenance, Provenance::Fallback);
}

TEST(CfrRecognize, ZeroThresholdsReproduceWa) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  auto p = uniform_fusion_params({"A", "B", "C"}, {"c"}, 0.0);
  std::vector<ScoreFrame> s;
  std::vector<SimilarityFeatureFrame> f;
  for (int i = 0; i < 500; ++i) {
    double a = u(rng), b = u(rng), c = u(rng), t = a + b + c;
    s.push_back(score(i, "o", {a / t, b / t, c / t}));
    f.push_back(feat(i, "o", u(rng)));
  }
  const auto d = cfr_recognize(s, f, p, similarity_schema(default_schema()),
                               unit_params(2, 3));
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(d[i].label, classify_wa(s[i].scores));
}

TEST(CfrRecognize, ResolvedLabelsAreCandidates) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  auto p = uniform_fusion_params({"A", "B", "C", "D"}, {"c"}, 0.45);
  std::vector<ScoreFrame> s;
  std::vector<SimilarityFeatureFrame> f;
  for (int i = 0; i < 400; ++i) {
    std::vector<double> v(4);
    double t = 0;
    for (auto& x : v) t += x = u(rng) * u(rng);
    for (auto& x : v) x /= t;
    s.push_back(score(i % 100, i < 200 ? "x" : "y", v));
    f.push_back(feat(i % 100, i < 200 ? "x" : "y", u(rng)));
  }
  const auto d = cfr_recognize(s, f, p, small_schema(), unit_params(1));
  ASSERT_EQ(d.size(), s.size());
  for (const auto& x : d) {
    if (x.provenance == Provenance::Confident) continue;
    EXPECT_TRUE(x.label == *x.candi1 || x.label == *x.candi2);
  }
}

TEST(AcceptanceRadius, MedianOfCrossObjectDistances) {
  const auto sch = small_schema();
  std::vector<SimilarityFeatureFrame> f{feat(0, "a", 0), feat(0, "b", 1), feat(0, "c", 3), feat(1, "a", 10)};
  const std::vector<std::vector<std::size_t>> groups{{0, 1, 2}, {3}};
  const auto r = calibrate_acceptance_radii(f, groups, sch, unit_params(0));
  // Pairwise distances 2*sqrt(2)*{1, 3, 2}; median 2*sqrt(2)*2.
  EXPECT_NEAR(r[0], 4 * std::sqrt(2.0), 1e-12);
  EXPECT_TRUE(std::isinf(r[1]));
}
