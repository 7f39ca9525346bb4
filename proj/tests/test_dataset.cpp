#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "actrec/dataset.hpp"
#include "actrec/features.hpp"
#include "test_support.hpp"

using namespace actrec;

namespace {

LabeledTrackSet parse_csv(const std::string& text) {
  std::istringstream in(text);
  return parse_canonical_csv(in);
}

const std::string kHeader = "frame,object,x_center,y_center,width,height,label\n";

}  // namespace

TEST(CanonicalCsv, SingleRowMapsFields) {
  const auto set = parse_csv(kHeader + "12,obj3,100.0,50.0,20.0,40.0,walking\n");
  ASSERT_EQ(set.tracks.size(), 1u);
  const auto& f = set.tracks[0].frames.at(0);
  EXPECT_EQ(f.frame, 12);
  EXPECT_EQ(f.object, "obj3");
  EXPECT_EQ(f.box.x, 100.0);
  EXPECT_EQ(f.box.y, 50.0);
  EXPECT_EQ(f.box.width, 20.0);
  EXPECT_EQ(f.box.height, 40.0);
  EXPECT_EQ(f.label, std::optional<std::string>("walking"));
  EXPECT_EQ(set.activities, std::vector<std::string>{"walking"});
}

TEST(CanonicalCsv, InterleavedObjectsBecomeSortedTracks) {
  const auto set = parse_csv(kHeader +
                             "3,a,1,1,2,2,\n"
                             "1,b,1,1,2,2,\n"
                             "1,a,1,1,2,2,\n"
                             "2,b,1,1,2,2,\n"
                             "2,a,1,1,2,2,\n");
  ASSERT_EQ(set.tracks.size(), 2u);
  for (const auto& t : set.tracks) {
    for (std::size_t i = 1; i < t.frames.size(); ++i) EXPECT_LT(t.frames[i - 1].frame, t.frames[i].frame);
  }
  EXPECT_EQ(set.tracks[0].object, "a");
  EXPECT_EQ(set.tracks[0].frames.size(), 3u);
  EXPECT_EQ(set.tracks[1].frames.size(), 2u);
}

TEST(CanonicalCsv, ZeroWidthRejected) {
  EXPECT_THROW(parse_csv(kHeader + "1,a,1,1,0,2,\n"), ValidationError);
}

TEST(CanonicalCsv, MalformedInputsRejected) {
  EXPECT_THROW(parse_csv("frame,object\n1,a\n"), ParseError);
  EXPECT_THROW(parse_csv(kHeader + "1,a,1,1,2\n"), ParseError);
  EXPECT_THROW(parse_csv(kHeader + "x,a,1,1,2,2,\n"), ParseError);
  EXPECT_THROW(parse_csv(kHeader + "1,a,1,1,2,2,\n1,a,1,1,2,2,\n"), ValidationError);
  EXPECT_THROW(parse_csv(""), ParseError);
}

TEST(CanonicalCsv, EmptyLabelIsUnlabeled) {
  const auto set = parse_csv(kHeader + "1,a,1,1,2,2,\n");
  EXPECT_FALSE(set.tracks[0].frames[0].label.has_value());
  EXPECT_TRUE(set.activities.empty());
}

TEST(CanonicalCsv, RoundTripIsStable) {
  const auto set = generate_synthetic_tracks(fixtures::small_synthetic(2), 4);
  const auto text = to_canonical_csv(set);
  const auto back = parse_csv(text);
  EXPECT_EQ(to_canonical_csv(back), text);
  // Activities come back in order of first appearance.
  EXPECT_EQ(back.tracks, set.tracks);
  EXPECT_EQ(std::set<ActivityId>(back.activities.begin(), back.activities.end()),
            std::set<ActivityId>(set.activities.begin(), set.activities.end()));
}

TEST(CaviarXml, ParsesBoxesAndMapsLabels) {
  const std::string xml = R"(<?xml version="1.0"?>
<dataset name="test">
  <frame number="0">
    <objectlist>
      <object id="1">
        <box xc="100" yc="50" w="20" h="40"/>
        <hypothesislist>
          <hypothesis evaluation="1.0" id="1" prev="1.0">
            <movement evaluation="1.0">walking</movement>
            <role evaluation="1.0">walker</role>
            <context evaluation="1.0">walking</context>
            <situation evaluation="1.0">moving</situation>
          </hypothesis>
        </hypothesislist>
      </object>
      <object id="2">
        <box xc="10" yc="10" w="5" h="9"/>
        <hypothesislist>
          <hypothesis evaluation="1.0" id="1" prev="1.0">
            <movement evaluation="1.0">active</movement>
            <situation evaluation="1.0">fighting</situation>
          </hypothesis>
        </hypothesislist>
      </object>
    </objectlist>
  </frame>
  <frame number="1">
    <objectlist>
      <object id="1">
        <box xc="102" yc="50" w="20" h="40"/>
        <hypothesislist><hypothesis><movement>running</movement></hypothesis></hypothesislist>
      </object>
    </objectlist>
  </frame>
</dataset>)";
  std::istringstream in(xml);
  const auto set = parse_caviar_xml(in, CaviarLabelMap::standard());
  ASSERT_EQ(set.tracks.size(), 2u);
  EXPECT_EQ(set.tracks[0].frames.size(), 2u);
  EXPECT_EQ(*set.tracks[0].frames[0].label, "walking");
  EXPECT_EQ(*set.tracks[0].frames[1].label, "running");
  EXPECT_EQ(*set.tracks[1].frames[0].label, "fighting");
  EXPECT_EQ(set.tracks[0].frames[1].box.x, 102.0);
}

TEST(CaviarXml, MissingBoxIsParseError) {
  std::istringstream in(R"(<dataset><frame number="0"><objectlist><object id="1"/></objectlist></frame></dataset>)");
  EXPECT_THROW(parse_caviar_xml(in, CaviarLabelMap::standard()), ParseError);
  std::istringstream bad("<dataset><frame>");
  EXPECT_THROW(parse_caviar_xml(bad, CaviarLabelMap::standard()), ParseError);
}

TEST(Synthetic, SameSeedIdenticalOutput) {
  const auto cfg = fixtures::small_synthetic(3);
  EXPECT_EQ(to_canonical_csv(generate_synthetic_tracks(cfg, 9)), to_canonical_csv(generate_synthetic_tracks(cfg, 9)));
  EXPECT_NE(to_canonical_csv(generate_synthetic_tracks(cfg, 9)), to_canonical_csv(generate_synthetic_tracks(cfg, 10)));
}

TEST(Synthetic, ClipCountFollowsConfig) {
  auto cfg = fixtures::small_synthetic(3);
  cfg.activities.resize(2);
  for (auto& a : cfg.activities) a.frequency = 1.0;
  const auto set = generate_synthetic_tracks(cfg, 1);
  EXPECT_EQ(extract_clips(set).size(), 6u);
}

TEST(Synthetic, BoxesSatisfyInvariants) {
  const auto set = generate_synthetic_tracks(fixtures::small_synthetic(4), 2);
  EXPECT_NO_THROW(validate(set));
  for (const auto& t : set.tracks) {
    for (const auto& f : t.frames) {
      EXPECT_GT(f.box.width, 0.0);
      EXPECT_GT(f.box.height, 0.0);
      EXPECT_TRUE(f.label.has_value());
    }
  }
}

// Without per-individual offsets every clip of an activity samples the same
// distribution: per-clip mean speeds (recomputed from the emitted boxes)
// scatter around the activity mean by sampling noise only.
TEST(Synthetic, ZeroOffsetClipsShareOneDistribution) {
  auto cfg = fixtures::small_synthetic(12);
  cfg.individual_offset_scale = 0.0;
  cfg.within_clip_drift = 0.0;
  cfg.frame_noise_scale = 1.0;
  const auto set = generate_synthetic_tracks(cfg, 5);
  const auto clips = extract_clips(set);
  std::map<std::string, std::vector<double>> means;
  std::map<std::string, double> sigma;
  for (const auto& p : cfg.activities) sigma[p.name] = p.speed.sigma;
  std::map<std::string, std::size_t> lengths;
  for (const auto& c : clips) {
    const auto& fr = set.tracks[c.track].frames;
    double sum = 0.0;
    for (std::size_t i = c.begin + 1; i < c.end; ++i) {
      sum += std::hypot(fr[i].box.x - fr[i - 1].box.x, fr[i].box.y - fr[i - 1].box.y);
    }
    means[c.label].push_back(sum / static_cast<double>(c.end - c.begin - 1));
    lengths[c.label] = std::min<std::size_t>(lengths.count(c.label) ? lengths[c.label] : 1000, c.end - c.begin - 1);
  }
  for (const auto& [label, m] : means) {
    double grand = 0.0;
    for (double v : m) grand += v;
    grand /= static_cast<double>(m.size());
    // Scatter of a clip mean is about sigma / sqrt(length); allow 6 such units.
    const double tol = 6.0 * sigma[label] / std::sqrt(static_cast<double>(lengths[label])) + 0.02;
    for (double v : m) EXPECT_NEAR(v, grand, tol) << label;
  }
}

TEST(Synthetic, OffsetsSpreadClipMeans) {
  auto base = fixtures::small_synthetic(12);
  base.within_clip_drift = 0.0;
  auto spread = [&](double offset) {
    auto cfg = base;
    cfg.individual_offset_scale = offset;
    const auto set = generate_synthetic_tracks(cfg, 5);
    std::vector<double> m;
    for (const auto& c : extract_clips(set)) {
      if (c.label != "walking") continue;
      const auto& fr = set.tracks[c.track].frames;
      double sum = 0.0;
      for (std::size_t i = c.begin + 1; i < c.end; ++i) {
        sum += std::hypot(fr[i].box.x - fr[i - 1].box.x, fr[i].box.y - fr[i - 1].box.y);
      }
      m.push_back(sum / static_cast<double>(c.end - c.begin - 1));
    }
    double mean = 0.0, ss = 0.0;
    for (double v : m) mean += v;
    mean /= static_cast<double>(m.size());
    for (double v : m) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(m.size());
  };
  EXPECT_GT(spread(2.0), 4.0 * spread(0.0));
}

TEST(Synthetic, InvalidConfigRejected) {
  auto cfg = fixtures::small_synthetic();
  cfg.activities[0].speed.sigma = 0.0;
  EXPECT_THROW(generate_synthetic_tracks(cfg, 0), ValidationError);
  cfg = fixtures::small_synthetic();
  cfg.clip_length_range = {0, 3};
  EXPECT_THROW(generate_synthetic_tracks(cfg, 0), ValidationError);
}

TEST(Folds, TenClipsFiveFoldsOfTwo) {
  LabeledTrackSet set;
  set.activities = {"a", "b"};
  for (int i = 0; i < 10; ++i) {
    set.tracks.push_back(fixtures::make_track("o" + std::to_string(i), 0, std::vector<Box>(3, Box{1, 1, 2, 2}),
                                             i < 5 ? "a" : "b"));
  }
  const auto splits = split_folds(set, 5, 3);
  ASSERT_EQ(splits.size(), 5u);
  for (const auto& s : splits) {
    EXPECT_EQ(s.test.tracks.size(), 2u);
    EXPECT_EQ(s.train.tracks.size(), 8u);
  }
}

TEST(Folds, TestFoldsPartitionClips) {
  const auto set = generate_synthetic_tracks(fixtures::small_synthetic(8), 8);
  const auto clips = extract_clips(set);
  const auto splits = split_folds(set, 5, 11);
  std::multiset<std::pair<std::string, FrameIndex>> seen;
  for (const auto& s : splits) {
    for (const auto& t : s.test.tracks) {
      for (const auto& f : t.frames) seen.insert({t.object, f.frame});
    }
    EXPECT_EQ(s.train.frame_count() + s.test.frame_count(), set.frame_count());
  }
  std::multiset<std::pair<std::string, FrameIndex>> all;
  for (const auto& t : set.tracks) {
    for (const auto& f : t.frames) all.insert({t.object, f.frame});
  }
  EXPECT_EQ(seen, all);
}

TEST(Folds, DeterministicAndSeedSensitive) {
  const auto set = generate_synthetic_tracks(fixtures::small_synthetic(8), 8);
  const auto clips = extract_clips(set);
  EXPECT_EQ(assign_clip_folds(clips, set.activities, 5, 1), assign_clip_folds(clips, set.activities, 5, 1));
  EXPECT_NE(assign_clip_folds(clips, set.activities, 5, 1), assign_clip_folds(clips, set.activities, 5, 2));
}

TEST(Folds, TooFewClipsRejected) {
  LabeledTrackSet set;
  set.activities = {"a"};
  set.tracks.push_back(fixtures::make_track("o", 0, std::vector<Box>(3, Box{1, 1, 2, 2}), "a"));
  EXPECT_THROW(split_folds(set, 2, 0), InsufficientDataError);
  EXPECT_THROW(split_folds(set, 1, 0), ValidationError);
}
