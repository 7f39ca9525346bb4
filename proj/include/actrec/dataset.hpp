#pragma once

// Annotated tracking data: canonical CSV and CAVIAR XML ingest, seeded
// synthetic scenarios with per-individual drift, and clip-granular folds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "actrec/error.hpp"
#include "actrec/util.hpp"

namespace actrec {

using ActivityId = std::string;
using ObjectId = std::string;
using FrameIndex = std::int64_t;

// Minimum bounding box: center, width, height in pixels.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  bool operator==(const Box&) const = default;
};

struct TrackedFrame {
  FrameIndex frame = 0;
  ObjectId object;
  Box box;
  std::optional<ActivityId> label;

  bool operator==(const TrackedFrame&) const = default;
};

struct Track {
  ObjectId object;
  std::vector<TrackedFrame> frames;  // strictly increasing frame index

  bool operator==(const Track&) const = default;
};

struct LabeledTrackSet {
  std::vector<Track> tracks;
  std::vector<ActivityId> activities;

  std::size_t frame_count() const {
    std::size_t n = 0;
    for (const auto& t : tracks) n += t.frames.size();
    return n;
  }

  bool operator==(const LabeledTrackSet&) const = default;
};

// Throws ValidationError on the first broken invariant.
inline void validate(const LabeledTrackSet& set) {
  std::set<ActivityId> known(set.activities.begin(), set.activities.end());
  if (known.size() != set.activities.size()) {
    throw ValidationError("duplicate activity identifier in activity list");
  }
  std::set<ObjectId> objects;
  for (const auto& track : set.tracks) {
    if (!objects.insert(track.object).second) {
      throw ValidationError("object '" + track.object + "' has more than one track");
    }
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
      const auto& f = track.frames[i];
      if (f.object != track.object) {
        throw ValidationError("frame " + std::to_string(f.frame) + " filed under wrong object '" +
                              track.object + "'");
      }
      if (!(f.box.width > 0.0) || !(f.box.height > 0.0)) {
        throw ValidationError("object '" + f.object + "' frame " + std::to_string(f.frame) +
                              ": box width and height must be positive");
      }
      if (!std::isfinite(f.box.x) || !std::isfinite(f.box.y) || !std::isfinite(f.box.width) ||
          !std::isfinite(f.box.height)) {
        throw ValidationError("object '" + f.object + "' frame " + std::to_string(f.frame) +
                              ": non-finite box");
      }
      if (i > 0 && track.frames[i - 1].frame >= f.frame) {
        throw ValidationError("object '" + f.object + "': duplicate or unordered frame " +
                              std::to_string(f.frame));
      }
      if (f.label && !known.count(*f.label)) {
        throw ValidationError("label '" + *f.label + "' missing from activity list");
      }
    }
  }
}

// Groups loose frames into per-object tracks (first-appearance order), sorts
// each track by frame and registers labels in first-appearance order after
// `declared` activities.
inline LabeledTrackSet assemble_track_set(std::vector<TrackedFrame> frames,
                                          std::vector<ActivityId> declared = {}) {
  LabeledTrackSet set;
  set.activities = std::move(declared);
  std::set<ActivityId> seen(set.activities.begin(), set.activities.end());
  std::unordered_map<ObjectId, std::size_t> slot;
  for (auto& f : frames) {
    if (f.label && seen.insert(*f.label).second) set.activities.push_back(*f.label);
    auto [it, inserted] = slot.try_emplace(f.object, set.tracks.size());
    if (inserted) set.tracks.push_back(Track{f.object, {}});
    set.tracks[it->second].frames.push_back(std::move(f));
  }
  for (auto& track : set.tracks) {
    std::stable_sort(track.frames.begin(), track.frames.end(),
                     [](const TrackedFrame& a, const TrackedFrame& b) { return a.frame < b.frame; });
  }
  validate(set);
  return set;
}

// ---------------------------------------------------------------------------
// Canonical CSV

inline constexpr std::string_view kCanonicalHeader = "frame,object,x_center,y_center,width,height,label";

inline LabeledTrackSet parse_canonical_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<TrackedFrame> frames;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (line_no == 1 && view.size() >= 3 && static_cast<unsigned char>(view[0]) == 0xEF) {
      view.remove_prefix(3);  // UTF-8 BOM
    }
    if (view.empty()) continue;
    if (!have_header) {
      if (view != kCanonicalHeader) {
        throw ParseError("line " + std::to_string(line_no) + ": expected header '" +
                         std::string(kCanonicalHeader) + "'");
      }
      have_header = true;
      continue;
    }
    auto fields = split_fields(view);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != 7) {
      throw ParseError(where + ": expected 7 fields, got " + std::to_string(fields.size()));
    }
    TrackedFrame f;
    long long frame = parse_integer(fields[0], where + " field 'frame'");
    if (frame < 0) throw ValidationError(where + ": negative frame index");
    f.frame = frame;
    f.object = std::string(trim(fields[1]));
    if (f.object.empty()) throw ParseError(where + ": empty object id");
    f.box.x = parse_double(fields[2], where + " field 'x_center'");
    f.box.y = parse_double(fields[3], where + " field 'y_center'");
    f.box.width = parse_double(fields[4], where + " field 'width'");
    f.box.height = parse_double(fields[5], where + " field 'height'");
    if (!(f.box.width > 0.0) || !(f.box.height > 0.0)) {
      throw ValidationError(where + ": box width and height must be positive");
    }
    auto label = trim(fields[6]);
    if (!label.empty()) f.label = std::string(label);
    frames.push_back(std::move(f));
  }
  if (!have_header) throw ParseError("line 1: missing header row");
  return assemble_track_set(std::move(frames));
}

inline void write_canonical_csv(std::ostream& out, const LabeledTrackSet& set) {
  out << kCanonicalHeader << '\n';
  for (const auto& track : set.tracks) {
    for (const auto& f : track.frames) {
      out << f.frame << ',' << f.object << ',' << format_double(f.box.x) << ','
          << format_double(f.box.y) << ',' << format_double(f.box.width) << ','
          << format_double(f.box.height) << ',' << (f.label ? *f.label : std::string()) << '\n';
    }
  }
}

inline std::string to_canonical_csv(const LabeledTrackSet& set) {
  std::ostringstream os;
  write_canonical_csv(os, set);
  return os.str();
}

// ---------------------------------------------------------------------------
// CAVIAR ground-truth XML

// Maps CAVIAR hypothesis labels to activity identifiers. A situation match
// (e.g. "fighting") overrides the movement label. Unmapped movement labels are
// kept verbatim.
struct CaviarLabelMap {
  std::map<std::string, ActivityId> movement;
  std::map<std::string, ActivityId> situation;

  static CaviarLabelMap standard() {
    CaviarLabelMap m;
    for (const char* name : {"inactive", "active", "walking", "running"}) m.movement[name] = name;
    m.situation["fighting"] = "fighting";
    return m;
  }
};

inline LabeledTrackSet parse_caviar_xml(std::istream& in, const CaviarLabelMap& labels) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    pt::read_xml(in, doc, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  auto dataset = doc.get_child_optional("dataset");
  if (!dataset) throw ParseError("element <dataset>: missing root element");

  std::vector<TrackedFrame> frames;
  for (const auto& [tag, frame_node] : *dataset) {
    if (tag != "frame") continue;
    auto number = frame_node.get_optional<long long>("<xmlattr>.number");
    if (!number) throw ParseError("element <frame>: missing or invalid 'number' attribute");
    const std::string frame_where = "element <frame number=\"" + std::to_string(*number) + "\">";
    auto objects = frame_node.get_child_optional("objectlist");
    if (!objects) continue;
    for (const auto& [otag, obj] : *objects) {
      if (otag != "object") continue;
      auto id = obj.get_optional<std::string>("<xmlattr>.id");
      if (!id) throw ParseError(frame_where + " <object>: missing 'id' attribute");
      const std::string where = frame_where + " <object id=\"" + *id + "\">";
      auto box = obj.get_child_optional("box");
      if (!box) throw ParseError(where + ": missing <box>");
      auto xc = box->get_optional<double>("<xmlattr>.xc");
      auto yc = box->get_optional<double>("<xmlattr>.yc");
      auto w = box->get_optional<double>("<xmlattr>.w");
      auto h = box->get_optional<double>("<xmlattr>.h");
      if (!xc || !yc || !w || !h) throw ParseError(where + " <box>: requires numeric xc, yc, w, h");
      if (!(*w > 0.0) || !(*h > 0.0)) {
        throw ValidationError(where + " <box>: width and height must be positive");
      }
      TrackedFrame f;
      f.frame = *number;
      f.object = *id;
      f.box = Box{*xc, *yc, *w, *h};

      std::optional<std::string> movement, situation;
      if (auto hyps = obj.get_child_optional("hypothesislist")) {
        for (const auto& [htag, hyp] : *hyps) {
          if (htag != "hypothesis") continue;
          if (!movement) {
            if (auto m = hyp.get_optional<std::string>("movement")) movement = *m;
          }
          if (!situation) {
            if (auto s = hyp.get_optional<std::string>("situation")) situation = *s;
          }
        }
      }
      if (situation) {
        if (auto it = labels.situation.find(*situation); it != labels.situation.end()) {
          f.label = it->second;
        }
      }
      if (!f.label && movement && !movement->empty()) {
        auto it = labels.movement.find(*movement);
        f.label = it != labels.movement.end() ? it->second : *movement;
      }
      frames.push_back(std::move(f));
    }
  }
  return assemble_track_set(std::move(frames));
}

// ---------------------------------------------------------------------------
// Clips and folds

// Maximal run of consecutive labeled frames of one track sharing a label.
struct Clip {
  std::size_t track = 0;  // index into LabeledTrackSet::tracks
  std::size_t begin = 0;  // frame positions [begin, end) within the track
  std::size_t end = 0;
  ActivityId label;
};

inline std::vector<Clip> extract_clips(const LabeledTrackSet& set) {
  std::vector<Clip> clips;
  for (std::size_t t = 0; t < set.tracks.size(); ++t) {
    const auto& frames = set.tracks[t].frames;
    std::size_t i = 0;
    while (i < frames.size()) {
      if (!frames[i].label) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      while (j < frames.size() && frames[j].label == frames[i].label &&
             frames[j].frame == frames[j - 1].frame + 1) {
        ++j;
      }
      clips.push_back(Clip{t, i, j, *frames[i].label});
      i = j;
    }
  }
  return clips;
}

// Fold id per clip. Clips are shuffled within each activity and dealt
// round-robin with a running offset so fold sizes differ by at most one clip.
inline std::vector<std::size_t> assign_clip_folds(const std::vector<Clip>& clips,
                                                  const std::vector<ActivityId>& activities,
                                                  std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ValidationError("n_folds must be at least 2");
  std::map<ActivityId, std::vector<std::size_t>> by_activity;
  for (std::size_t c = 0; c < clips.size(); ++c) by_activity[clips[c].label].push_back(c);

  std::vector<std::string> deficient;
  for (const auto& a : activities) {
    auto it = by_activity.find(a);
    std::size_t have = it == by_activity.end() ? 0 : it->second.size();
    if (have > 0 && have < n_folds) {
      deficient.push_back(a + " (" + std::to_string(have) + " clips)");
    }
  }
  if (!deficient.empty()) {
    std::string msg = "too few clips for " + std::to_string(n_folds) + " folds:";
    for (const auto& d : deficient) msg += " " + d;
    throw InsufficientDataError(msg);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold(clips.size(), 0);
  std::size_t counter = 0;
  for (const auto& a : activities) {
    auto it = by_activity.find(a);
    if (it == by_activity.end()) continue;
    auto ids = it->second;
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t c : ids) fold[c] = counter++ % n_folds;
  }
  return fold;
}

struct FoldSplit {
  LabeledTrackSet train;
  LabeledTrackSet test;
};

// Clip-granular k-fold split. Each clip lands in exactly one test fold; a
// clip becomes its own track segment (object id and frame numbers kept, so
// frame uniqueness per object still holds within a fold). Unlabeled frames
// belong to no clip and are left out.
inline std::vector<FoldSplit> split_folds(const LabeledTrackSet& set, std::size_t n_folds,
                                          std::uint64_t seed) {
  const auto clips = extract_clips(set);
  const auto fold = assign_clip_folds(clips, set.activities, n_folds, seed);

  auto build = [&](auto keep) {
    LabeledTrackSet out;
    out.activities = set.activities;
    std::map<std::size_t, std::vector<TrackedFrame>> per_track;
    for (std::size_t c = 0; c < clips.size(); ++c) {
      if (!keep(fold[c])) continue;
      const auto& src = set.tracks[clips[c].track].frames;
      auto& dst = per_track[clips[c].track];
      dst.insert(dst.end(), src.begin() + static_cast<std::ptrdiff_t>(clips[c].begin),
                 src.begin() + static_cast<std::ptrdiff_t>(clips[c].end));
    }
    for (auto& [t, frames] : per_track) {
      std::sort(frames.begin(), frames.end(),
                [](const TrackedFrame& a, const TrackedFrame& b) { return a.frame < b.frame; });
      out.tracks.push_back(Track{set.tracks[t].object, std::move(frames)});
    }
    return out;
  };

  std::vector<FoldSplit> splits;
  for (std::size_t f = 0; f < n_folds; ++f) {
    splits.push_back(FoldSplit{build([f](std::size_t g) { return g != f; }),
                               build([f](std::size_t g) { return g == f; })});
  }
  return splits;
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

struct DriverProfile {
  double mean = 0.0;
  double sigma = 0.0;  // per-frame spread, also the unit of per-individual offset
};

// Generative drivers of one activity. Speed is in px/frame, heading jitter in
// rad/frame, width/height change is the mean relative |change| per frame.
struct ActivityProfile {
  ActivityId name;
  DriverProfile speed;
  DriverProfile heading_jitter;
  DriverProfile width_change;
  DriverProfile height_change;
  double frequency = 1.0;  // clip count multiplier relative to clips_per_activity
};

struct SyntheticConfig {
  std::vector<ActivityProfile> activities;
  double individual_offset_scale = 1.0;
  // Slow within-clip wander of every driver, in units of its sigma, with the
  // per-frame AR(1) coefficient; plus independent per-frame noise.
  // Fraction of the per-clip offset (and of the wander) shared by all drivers,
  // so an individual who moves faster than usual also changes shape more.
  double offset_correlation = 0.0;
  double within_clip_drift = 0.0;
  double drift_correlation = 0.95;
  double frame_noise_scale = 1.0;
  std::pair<int, int> clip_length_range{60, 160};
  int clips_per_activity = 10;
  std::pair<int, int> clips_per_object{1, 3};
  double base_width = 30.0;
  double base_height = 70.0;
  double scene_width = 640.0;
  double scene_height = 480.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (activities.empty()) throw ValidationError("synthetic config: no activities");
    for (const auto& a : activities) {
      for (const auto* d : {&a.speed, &a.heading_jitter, &a.width_change, &a.height_change}) {
        if (!(d->sigma > 0.0)) {
          throw ValidationError("synthetic config: activity '" + a.name + "' has sigma <= 0");
        }
      }
    }
    if (clip_length_range.first < 1 || clip_length_range.second < clip_length_range.first) {
      throw ValidationError("synthetic config: invalid clip length range");
    }
    if (clips_per_activity < 1) throw ValidationError("synthetic config: clips_per_activity < 1");
    if (clips_per_object.first < 1 || clips_per_object.second < clips_per_object.first) {
      throw ValidationError("synthetic config: invalid clips_per_object range");
    }
    if (!(individual_offset_scale >= 0.0)) {
      throw ValidationError("synthetic config: individual_offset_scale must be >= 0");
    }
    if (!(within_clip_drift >= 0.0) || !(frame_noise_scale >= 0.0)) {
      throw ValidationError("synthetic config: drift and noise scales must be >= 0");
    }
    if (!(offset_correlation >= 0.0 && offset_correlation <= 1.0)) {
      throw ValidationError("synthetic config: offset_correlation must lie in [0, 1]");
    }
    if (!(drift_correlation >= 0.0 && drift_correlation < 1.0)) {
      throw ValidationError("synthetic config: drift_correlation must lie in [0, 1)");
    }
    if (!(base_width > 0.0) || !(base_height > 0.0)) {
      throw ValidationError("synthetic config: base box size must be positive");
    }
  }
};

// Five-activity surveillance scenario (inactive, active, walking, running,
// fighting). Each minority activity sits next to a partner (active/inactive,
// running/walking, fighting/active); per-individual offsets push whole clips
// toward the partner while noisy frames keep a few of them recognizable.
inline SyntheticConfig standard_synthetic_config() {
  SyntheticConfig c;
  c.activities = {
      {"inactive", {0.15, 0.08}, {0.30, 0.10}, {0.005, 0.003}, {0.005, 0.003}, 2.0},
      {"active", {0.30, 0.12}, {0.60, 0.20}, {0.012, 0.005}, {0.010, 0.004}, 1.0},
      {"walking", {2.20, 0.45}, {0.08, 0.04}, {0.080, 0.015}, {0.015, 0.005}, 3.0},
      {"running", {3.40, 0.60}, {0.10, 0.05}, {0.090, 0.015}, {0.020, 0.006}, 0.8},
      {"fighting", {0.60, 0.25}, {0.80, 0.25}, {0.025, 0.008}, {0.020, 0.007}, 0.6},
  };
  c.individual_offset_scale = 0.6;
  c.within_clip_drift = 0.2;
  c.drift_correlation = 0.95;
  c.frame_noise_scale = 2.5;
  c.clip_length_range = {60, 160};
  c.clips_per_activity = 30;
  c.clips_per_object = {1, 3};
  return c;
}

namespace detail {

inline double sample_clipped(std::mt19937_64& rng, double mean, double sigma, double lo) {
  std::normal_distribution<double> n(mean, sigma);
  return std::max(lo, n(rng));
}

}  // namespace detail

// Deterministic for a fixed (config, seed). Each clip draws one offset per
// driver (scaled by individual_offset_scale * sigma) around the activity mean,
// then samples every frame around that clip mean.
inline LabeledTrackSet generate_synthetic_tracks(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);

  std::vector<std::size_t> order;
  for (std::size_t a = 0; a < config.activities.size(); ++a) {
    const auto n = static_cast<int>(std::lround(config.clips_per_activity * config.activities[a].frequency));
    for (int c = 0; c < n; ++c) order.push_back(a);
  }
  std::shuffle(order.begin(), order.end(), rng);

  // Chunk the shuffled clips into objects; an object never holds two adjacent
  // clips of the same activity (they would merge into one clip).
  std::vector<std::vector<std::size_t>> objects;
  std::uniform_int_distribution<int> per_object(config.clips_per_object.first,
                                                config.clips_per_object.second);
  std::size_t i = 0;
  while (i < order.size()) {
    int want = per_object(rng);
    std::vector<std::size_t> obj{order[i++]};
    while (static_cast<int>(obj.size()) < want && i < order.size() && order[i] != obj.back()) {
      obj.push_back(order[i++]);
    }
    objects.push_back(std::move(obj));
  }

  std::uniform_int_distribution<int> clip_len(config.clip_length_range.first,
                                              config.clip_length_range.second);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr double kPi = 3.14159265358979323846;

  LabeledTrackSet set;
  for (const auto& a : config.activities) set.activities.push_back(a.name);

  FrameIndex start = 0;
  for (std::size_t o = 0; o < objects.size(); ++o) {
    Track track;
    track.object = "obj" + std::to_string(o);
    const double base_w = config.base_width * (0.8 + 0.4 * unit(rng));
    const double base_h = config.base_height * (0.8 + 0.4 * unit(rng));
    double x = config.scene_width * (0.2 + 0.6 * unit(rng));
    double y = config.scene_height * (0.2 + 0.6 * unit(rng));
    double heading = 2.0 * kPi * unit(rng);
    double w = base_w;
    double h = base_h;
    FrameIndex frame = start;
    start += 25 + static_cast<FrameIndex>(unit(rng) * 200.0);

    for (std::size_t activity : objects[o]) {
      const auto& p = config.activities[activity];
      const double s = config.individual_offset_scale;
      const double shared = config.offset_correlation;
      const double own = std::sqrt(1.0 - shared * shared);
      const double vigor = gauss(rng);
      auto offset = [&](const DriverProfile& prof) {
        return std::max(0.0, prof.mean + s * prof.sigma * (shared * vigor + own * gauss(rng)));
      };
      const double speed_c = offset(p.speed);
      const double jitter_c = offset(p.heading_jitter);
      const double dw_c = offset(p.width_change);
      const double dh_c = offset(p.height_change);
      const int length = clip_len(rng);
      const double rho = config.drift_correlation;
      const double innovation = std::sqrt(1.0 - rho * rho);
      double common = gauss(rng);
      std::array<double, 4> wander{gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
      const double noise = config.frame_noise_scale;
      auto driver = [&](std::size_t d, double centre, const DriverProfile& prof) {
        wander[d] = rho * wander[d] + innovation * gauss(rng);
        const double z = shared * common + own * wander[d];
        return detail::sample_clipped(rng, centre + config.within_clip_drift * prof.sigma * z, noise * prof.sigma,
                                      0.0);
      };
      for (int k = 0; k < length; ++k) {
        common = rho * common + innovation * gauss(rng);
        const double speed = driver(0, speed_c, p.speed);
        heading += gauss(rng) * driver(1, jitter_c, p.heading_jitter);
        x += speed * std::cos(heading);
        y += speed * std::sin(heading);
        if (x < 0.0 || x > config.scene_width) {
          heading = kPi - heading;
          x = std::clamp(x, 0.0, config.scene_width);
        }
        if (y < 0.0 || y > config.scene_height) {
          heading = -heading;
          y = std::clamp(y, 0.0, config.scene_height);
        }
        auto step_size = [&](double& v, double base, double mag) {
          const double grow_p = 1.0 / (1.0 + std::pow(v / base, 4.0));
          const double sign = unit(rng) < grow_p ? 1.0 : -1.0;
          v = std::max(1.0, v * (1.0 + sign * mag));
        };
        step_size(w, base_w, driver(2, dw_c, p.width_change));
        step_size(h, base_h, driver(3, dh_c, p.height_change));
        track.frames.push_back(TrackedFrame{frame++, track.object, Box{x, y, w, h}, p.name});
      }
    }
    set.tracks.push_back(std::move(track));
  }
  validate(set);
  return set;
}

}  // namespace actrec
