#pragma once

// Windowed minimum-bounding-box features. The category features describe body
// movement (relative size/width/height/ratio change) and body translation
// (speed and net velocity); the shape/position features are only used for
// frame-to-frame dissimilarity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "actrec/dataset.hpp"
#include "actrec/error.hpp"
#include "actrec/util.hpp"

namespace actrec {

enum class Feature : std::size_t {
  ChangeSize = 0,   // f_c_mb_sz
  ChangeWidth,      // f_c_mb_wd
  ChangeHeight,     // f_c_mb_ht
  AvgSpeed,         // f_avg_spd
  AvgVector,        // f_avg_vct
  MeanVector,       // f_mean_vct
  ChangeRatio,      // f_c_mb_ratio
  X,                // x_MBB
  Y,                // y_MBB
  Duration,         // d_ob
  Height,           // h_mbb
  Width,            // w_mbb
  Ratio,            // r_mbb = h / w
  Size,             // size_mbb = h * w
};

inline constexpr std::size_t kCategoryFeatureCount = 7;
inline constexpr std::size_t kFeatureCount = 14;
inline constexpr double kDenominatorEpsilon = 1e-9;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "f_c_mb_sz", "f_c_mb_wd", "f_c_mb_ht", "f_avg_spd", "f_avg_vct", "f_mean_vct", "f_c_mb_ratio",
    "x_mbb",     "y_mbb",     "d_ob",      "h_mbb",     "w_mbb",     "r_mbb",      "size_mbb"};

constexpr std::size_t index_of(Feature f) { return static_cast<std::size_t>(f); }

inline std::string_view feature_name(std::size_t index) { return kFeatureNames.at(index); }

inline std::size_t feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return i;
  }
  throw LookupError("unknown feature id '" + std::string(name) + "'");
}

struct CategoryFeatureFrame {
  FrameIndex frame = 0;
  ObjectId object;
  std::array<double, kCategoryFeatureCount> values{};
  int support = 0;           // frames of [t-k, t+k] present in the track
  bool low_support = false;  // a ratio denominator fell below epsilon

  double operator[](Feature f) const { return values.at(index_of(f)); }
};

// All fourteen features of one frame. Indices follow `Feature`.
struct SimilarityFeatureFrame {
  FrameIndex frame = 0;
  ObjectId object;
  std::array<double, kFeatureCount> values{};
  int support = 0;
  bool low_support = false;

  double operator[](Feature f) const { return values[index_of(f)]; }
};

namespace detail {

inline std::size_t locate_frame(std::span<const TrackedFrame> track, FrameIndex t) {
  auto it = std::lower_bound(track.begin(), track.end(), t,
                             [](const TrackedFrame& f, FrameIndex v) { return f.frame < v; });
  if (it == track.end() || it->frame != t) {
    throw LookupError("frame " + std::to_string(t) + " not in track");
  }
  return static_cast<std::size_t>(it - track.begin());
}

// Relative absolute change of a positive quantity over the given transitions:
// (sum |q_i - q_{i-1}| / sum q_{i-1}) / N.
struct RelativeChange {
  double numerator = 0.0;
  double denominator = 0.0;
  int transitions = 0;

  void add(double prev, double cur) {
    numerator += std::abs(cur - prev);
    denominator += prev;
    ++transitions;
  }
  double value(bool& low_support) const {
    if (transitions == 0) return 0.0;
    if (denominator < kDenominatorEpsilon) {
      low_support = true;
      return 0.0;
    }
    return numerator / denominator / transitions;
  }
};

}  // namespace detail

// Anchored multi-span velocity: the mean over every start frame s in the
// window before the last available frame e of |p_e - p_s| / (e - s + 1).
// For a full window this averages 2k terms.
inline double mean_vector_feature(std::span<const TrackedFrame> window) {
  if (window.size() < 2) return 0.0;
  const auto& end = window.back();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < window.size(); ++i) {
    const auto& s = window[i];
    const double span = static_cast<double>(end.frame - s.frame + 1);
    sum += std::hypot((end.box.x - s.box.x) / span, (end.box.y - s.box.y) / span);
  }
  return sum / static_cast<double>(window.size() - 1);
}

// Category features at frame t over the window [t-k, t+k]. Transition i uses
// frames i-1 and i; transitions with a missing endpoint are dropped and every
// average is taken over the surviving transitions.
inline CategoryFeatureFrame extract_category_features(std::span<const TrackedFrame> track,
                                                      FrameIndex t, int window_k) {
  if (window_k < 0) throw ValidationError("window k must be nonnegative");
  const std::size_t pos = detail::locate_frame(track, t);
  CategoryFeatureFrame out;
  out.frame = t;
  out.object = track[pos].object;

  // Frames of [t-k-1, t+k] that exist in the track.
  std::size_t lo = pos;
  while (lo > 0 && track[lo - 1].frame >= t - window_k - 1) --lo;
  std::size_t hi = pos + 1;
  while (hi < track.size() && track[hi].frame <= t + window_k) ++hi;

  detail::RelativeChange size, width, height, ratio;
  double path = 0.0;
  int transitions = 0;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const auto& prev = track[i - 1];
    const auto& cur = track[i];
    if (cur.frame - prev.frame != 1 || cur.frame < t - window_k) continue;
    size.add(prev.box.width * prev.box.height, cur.box.width * cur.box.height);
    width.add(prev.box.width, cur.box.width);
    height.add(prev.box.height, cur.box.height);
    ratio.add(prev.box.width / prev.box.height, cur.box.width / cur.box.height);
    path += std::hypot(cur.box.x - prev.box.x, cur.box.y - prev.box.y);
    ++transitions;
  }

  // Frames of [t-k, t+k] for the net-displacement features.
  std::size_t wlo = lo;
  while (wlo < hi && track[wlo].frame < t - window_k) ++wlo;
  std::span<const TrackedFrame> window = track.subspan(wlo, hi - wlo);
  out.support = static_cast<int>(window.size());

  bool low = false;
  out.values[index_of(Feature::ChangeSize)] = size.value(low);
  out.values[index_of(Feature::ChangeWidth)] = width.value(low);
  out.values[index_of(Feature::ChangeHeight)] = height.value(low);
  out.values[index_of(Feature::ChangeRatio)] = ratio.value(low);
  out.values[index_of(Feature::AvgSpeed)] = transitions > 0 ? path / transitions : 0.0;
  {
    const auto& first = window.front();
    const auto& last = window.back();
    const double span = static_cast<double>(last.frame - first.frame + 1);
    out.values[index_of(Feature::AvgVector)] =
        std::hypot((last.box.x - first.box.x) / span, (last.box.y - first.box.y) / span);
  }
  out.values[index_of(Feature::MeanVector)] = mean_vector_feature(window);
  out.low_support = low;
  return out;
}

inline SimilarityFeatureFrame extract_similarity_features(std::span<const TrackedFrame> track,
                                                          FrameIndex t, int window_k) {
  const auto category = extract_category_features(track, t, window_k);
  const auto& f = track[detail::locate_frame(track, t)];
  if (f.box.height <= kDenominatorEpsilon || f.box.width <= kDenominatorEpsilon) {
    throw ValidationError("object '" + f.object + "' frame " + std::to_string(t) +
                          ": degenerate box");
  }
  SimilarityFeatureFrame out;
  out.frame = t;
  out.object = category.object;
  out.support = category.support;
  out.low_support = category.low_support;
  std::copy(category.values.begin(), category.values.end(), out.values.begin());
  out.values[index_of(Feature::X)] = f.box.x;
  out.values[index_of(Feature::Y)] = f.box.y;
  out.values[index_of(Feature::Duration)] = static_cast<double>(t - track.front().frame + 1);
  out.values[index_of(Feature::Height)] = f.box.height;
  out.values[index_of(Feature::Width)] = f.box.width;
  out.values[index_of(Feature::Ratio)] = f.box.height / f.box.width;
  out.values[index_of(Feature::Size)] = f.box.height * f.box.width;
  return out;
}

// Every frame of every track, tracks in set order, frames in track order.
inline std::vector<SimilarityFeatureFrame> extract_all_features(const LabeledTrackSet& set,
                                                                int window_k) {
  std::vector<SimilarityFeatureFrame> out;
  out.reserve(set.frame_count());
  for (const auto& track : set.tracks) {
    std::span<const TrackedFrame> frames(track.frames);
    for (const auto& f : frames) out.push_back(extract_similarity_features(frames, f.frame, window_k));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;

  bool operator==(const MeanVar&) const = default;
};

inline constexpr double kMinimumVariance = 1e-10;

struct FeatureStats {
  std::vector<ActivityId> activities;
  std::array<MeanVar, kFeatureCount> overall{};
  // per_activity[a][feature]
  std::vector<std::array<MeanVar, kFeatureCount>> per_activity;

  double sigma(std::size_t feature) const { return std::sqrt(overall[feature].var); }

  // (mean, variance) of one feature for every activity, keyed by activity.
  std::map<ActivityId, MeanVar> activity_profile(std::size_t feature) const {
    std::map<ActivityId, MeanVar> out;
    for (std::size_t a = 0; a < activities.size(); ++a) out[activities[a]] = per_activity[a][feature];
    return out;
  }
};

struct LabeledFeatures {
  const SimilarityFeatureFrame* frame = nullptr;
  ActivityId label;
};

// Population means and variances, per feature overall and per (feature,
// activity). Every variance is floored at max(floor_factor * overall variance,
// kMinimumVariance). Sums are accumulated in a fixed activity-major order of
// sorted values so the result does not depend on input order.
inline FeatureStats compute_feature_stats(std::span<const SimilarityFeatureFrame> frames,
                                          std::span<const ActivityId> labels,
                                          const std::vector<ActivityId>& activities,
                                          double floor_factor = 1e-6) {
  if (frames.size() != labels.size()) throw ValidationError("frames and labels differ in length");
  FeatureStats stats;
  stats.activities = activities;
  stats.per_activity.resize(activities.size());

  std::map<ActivityId, std::size_t> slot;
  for (std::size_t a = 0; a < activities.size(); ++a) slot[activities[a]] = a;
  std::vector<std::vector<std::size_t>> members(activities.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = slot.find(labels[i]);
    if (it == slot.end()) throw LookupError("label '" + labels[i] + "' is not a known activity");
    members[it->second].push_back(i);
  }
  for (std::size_t a = 0; a < activities.size(); ++a) {
    if (members[a].size() < 2) {
      throw InsufficientDataError("activity '" + activities[a] + "' has " +
                                  std::to_string(members[a].size()) +
                                  " labeled frames; at least 2 required (use LTS adaptation)");
    }
  }

  auto mean_var = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return MeanVar{mean, ss / static_cast<double>(v.size())};
  };

  std::vector<double> buffer;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    buffer.clear();
    for (const auto& fr : frames) buffer.push_back(fr.values[f]);
    MeanVar all = mean_var(buffer);
    const double floor = std::max(floor_factor * all.var, kMinimumVariance);
    all.var = std::max(all.var, floor);
    stats.overall[f] = all;
    for (std::size_t a = 0; a < activities.size(); ++a) {
      buffer.clear();
      for (std::size_t i : members[a]) buffer.push_back(frames[i].values[f]);
      MeanVar mv = mean_var(buffer);
      mv.var = std::max(mv.var, floor);
      stats.per_activity[a][f] = mv;
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Dumps

inline void write_feature_csv(std::ostream& out, std::span<const SimilarityFeatureFrame> frames,
                              std::span<const std::optional<ActivityId>> labels = {}) {
  out << "object,frame";
  for (auto name : kFeatureNames) out << ',' << name;
  out << ",support,low_support,label\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    out << f.object << ',' << f.frame;
    for (double v : f.values) out << ',' << format_double(v);
    out << ',' << f.support << ',' << (f.low_support ? 1 : 0) << ',';
    if (i < labels.size() && labels[i]) out << *labels[i];
    out << '\n';
  }
}

}  // namespace actrec
