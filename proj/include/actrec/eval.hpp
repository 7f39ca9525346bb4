#pragma once

// Frame-level Miss / FA / TFER and clip-level activity error rate.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actrec/dataset.hpp"
#include "actrec/error.hpp"

namespace actrec {

struct ActivityFrameErrors {
  ActivityId activity;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t misses = 0;        // truth == k, pred != k
  std::size_t false_alarms = 0;  // truth != k, pred == k
  std::optional<double> miss_rate;  // absent without positives
  std::optional<double> fa_rate;    // absent without negatives
};

struct FrameErrorReport {
  std::vector<ActivityFrameErrors> activities;
  std::size_t total_frames = 0;
  std::size_t total_misses = 0;
  double tfer = 0.0;
};

// pred / truth hold activity indices into `activities`.
inline FrameErrorReport frame_error_report(std::span<const std::size_t> pred, std::span<const std::size_t> truth,
                                           const std::vector<ActivityId>& activities) {
  if (pred.size() != truth.size()) {
    throw ValidationError("prediction has " + std::to_string(pred.size()) + " frames, truth has " +
                          std::to_string(truth.size()));
  }
  const std::size_t k = activities.size();
  FrameErrorReport r;
  r.total_frames = truth.size();
  r.activities.resize(k);
  for (std::size_t a = 0; a < k; ++a) r.activities[a].activity = activities[a];
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= k || pred[i] >= k) throw ValidationError("label index out of range");
    for (std::size_t a = 0; a < k; ++a) {
      auto& e = r.activities[a];
      if (truth[i] == a) {
        ++e.positives;
        if (pred[i] != a) ++e.misses;
      } else {
        ++e.negatives;
        if (pred[i] == a) ++e.false_alarms;
      }
    }
  }
  for (auto& e : r.activities) {
    if (e.positives > 0) e.miss_rate = static_cast<double>(e.misses) / static_cast<double>(e.positives);
    if (e.negatives > 0) e.fa_rate = static_cast<double>(e.false_alarms) / static_cast<double>(e.negatives);
    r.total_misses += e.misses;
  }
  r.tfer = r.total_frames > 0 ? static_cast<double>(r.total_misses) / static_cast<double>(r.total_frames) : 0.0;
  return r;
}

// One object's ground-truth label sequence (frames consecutive).
struct LabelSequence {
  ObjectId object;
  std::vector<std::size_t> labels;
};

struct ActivityClip {
  ObjectId object;
  std::size_t t1 = 0;  // positions within the object's sequence, inclusive
  std::size_t t2 = 0;
  std::size_t label = 0;

  bool operator==(const ActivityClip&) const = default;
};

inline std::vector<ActivityClip> extract_activity_clips(std::span<const LabelSequence> truth) {
  std::vector<ActivityClip> clips;
  for (const auto& seq : truth) {
    std::size_t i = 0;
    while (i < seq.labels.size()) {
      std::size_t j = i;
      while (j + 1 < seq.labels.size() && seq.labels[j + 1] == seq.labels[i]) ++j;
      clips.push_back(ActivityClip{seq.object, i, j, seq.labels[i]});
      i = j + 1;
    }
  }
  return clips;
}

struct ActivityClipErrors {
  ActivityId activity;
  std::size_t total = 0;
  std::size_t missed = 0;
  std::optional<double> aer;  // absent without clips
};

struct AerReport {
  std::vector<ActivityClipErrors> activities;
};

// A clip is missed when no frame inside it is predicted with the clip label.
inline AerReport activity_error_report(std::span<const LabelSequence> pred, std::span<const LabelSequence> truth,
                                       const std::vector<ActivityId>& activities) {
  if (pred.size() != truth.size()) throw ValidationError("prediction and truth cover different objects");
  for (std::size_t s = 0; s < truth.size(); ++s) {
    if (pred[s].labels.size() != truth[s].labels.size()) {
      throw ValidationError("prediction length differs from truth for object '" + truth[s].object + "'");
    }
  }
  AerReport r;
  r.activities.resize(activities.size());
  for (std::size_t a = 0; a < activities.size(); ++a) r.activities[a].activity = activities[a];
  for (std::size_t s = 0; s < truth.size(); ++s) {
    for (const auto& clip : extract_activity_clips(truth.subspan(s, 1))) {
      if (clip.label >= activities.size()) throw ValidationError("label index out of range");
      bool hit = false;
      for (std::size_t t = clip.t1; t <= clip.t2 && !hit; ++t) hit = pred[s].labels[t] == clip.label;
      auto& e = r.activities[clip.label];
      ++e.total;
      if (!hit) ++e.missed;
    }
  }
  for (auto& e : r.activities) {
    if (e.total > 0) e.aer = static_cast<double>(e.missed) / static_cast<double>(e.total);
  }
  return r;
}

}  // namespace actrec
