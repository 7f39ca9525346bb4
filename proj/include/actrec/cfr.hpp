#pragma once

// Confident-Frame-based Recognition. Frames whose fused score clears an
// activity threshold become confident frames and act as local models; every
// other frame picks between its two best global candidates by comparing its
// multi-category dynamic partial distance to the temporally nearest confident
// frame of each candidate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actrec/cfv.hpp"
#include "actrec/error.hpp"
#include "actrec/features.hpp"
#include "actrec/fusion.hpp"

namespace actrec {

// ---------------------------------------------------------------------------
// M-DPF

// Feature groups for the dissimilarity: the recognition categories plus one
// group holding the MBB position/shape/duration features.
struct SimilaritySchema {
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> categories;  // feature indices

  std::size_t feature_count() const {
    std::size_t n = 0;
    for (const auto& c : categories) n += c.size();
    return n;
  }
};

inline std::vector<std::size_t> mbb_feature_indices() {
  return {index_of(Feature::X),     index_of(Feature::Y),     index_of(Feature::Duration),
          index_of(Feature::Height), index_of(Feature::Width), index_of(Feature::Ratio),
          index_of(Feature::Size)};
}

inline SimilaritySchema similarity_schema(const CfvSchema& schema) {
  SimilaritySchema out;
  for (std::size_t c = 0; c < schema.categories.size(); ++c) {
    out.names.push_back(schema.categories[c].name);
    out.categories.push_back(schema.feature_indices(c));
  }
  out.names.push_back("mbb");
  out.categories.push_back(mbb_feature_indices());
  return out;
}

struct MdpfParams {
  double r = 2.0;
  std::size_t n = 2;                           // size of the discard set
  std::vector<double> category_weights;        // k_j per similarity category
  std::array<double, kFeatureCount> feature_weights{};  // w per feature index
};

// r = 2, n = 2, k_j = 1, w_i = 1 / sigma_i, and weight 1 for x, y and d_ob.
inline MdpfParams default_mdpf_params(const FeatureStats& stats, const SimilaritySchema& schema) {
  MdpfParams p;
  p.category_weights.assign(schema.categories.size(), 1.0);
  for (std::size_t f = 0; f < kFeatureCount; ++f) p.feature_weights[f] = 1.0 / stats.sigma(f);
  for (Feature f : {Feature::X, Feature::Y, Feature::Duration}) p.feature_weights[index_of(f)] = 1.0;
  return p;
}

inline void validate(const MdpfParams& p, const SimilaritySchema& schema) {
  if (!(p.r > 0.0)) throw ValidationError("M-DPF exponent r must be positive");
  if (p.category_weights.size() != schema.categories.size()) {
    throw ValidationError("M-DPF needs one category weight per similarity category");
  }
  for (double k : p.category_weights) {
    if (!(k >= 0.0)) throw ValidationError("M-DPF category weights must be >= 0");
  }
  for (double w : p.feature_weights) {
    if (!(w >= 0.0)) throw ValidationError("M-DPF feature weights must be >= 0");
  }
  if (p.n >= schema.feature_count()) {
    throw ValidationError("M-DPF discard count n must be below the feature count " +
                          std::to_string(schema.feature_count()));
  }
}

// Positions (category, slot) of the n largest weighted absolute differences,
// pooled across all categories. Ties prefer the earlier position.
inline std::vector<std::pair<std::size_t, std::size_t>> mdpf_discard_set(
    std::span<const double> x, std::span<const double> y, const SimilaritySchema& schema,
    const MdpfParams& params) {
  if (params.n >= schema.feature_count()) {
    throw ValidationError("M-DPF discard count n must be below the feature count");
  }
  struct Entry {
    double value;
    std::size_t order;
    std::size_t category;
    std::size_t slot;
  };
  std::vector<Entry> entries;
  entries.reserve(schema.feature_count());
  std::size_t order = 0;
  for (std::size_t c = 0; c < schema.categories.size(); ++c) {
    for (std::size_t s = 0; s < schema.categories[c].size(); ++s) {
      const std::size_t f = schema.categories[c][s];
      entries.push_back({params.feature_weights[f] * std::abs(x[f] - y[f]), order++, c, s});
    }
  }
  auto before = [](const Entry& a, const Entry& b) {
    return a.value > b.value || (a.value == b.value && a.order < b.order);
  };
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(params.n), entries.end(),
                    before);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < params.n; ++i) out.emplace_back(entries[i].category, entries[i].slot);
  std::sort(out.begin(), out.end());
  return out;
}

// D_w(X, Y) = sum_j k_j (sum_{f in F_j \ Delta} w_f |x_f - y_f|^r)^(1/r).
// x and y are full feature vectors indexed by `Feature`.
inline double mdpf_distance(std::span<const double> x, std::span<const double> y,
                            const SimilaritySchema& schema, const MdpfParams& params) {
  if (x.size() != kFeatureCount || y.size() != kFeatureCount) {
    throw ValidationError("M-DPF expects full feature vectors");
  }
  const auto discard = mdpf_discard_set(x, y, schema, params);
  double total = 0.0;
  for (std::size_t c = 0; c < schema.categories.size(); ++c) {
    double sum = 0.0;
    for (std::size_t s = 0; s < schema.categories[c].size(); ++s) {
      if (std::find(discard.begin(), discard.end(), std::make_pair(c, s)) != discard.end()) continue;
      const std::size_t f = schema.categories[c][s];
      const double d = std::abs(x[f] - y[f]);
      sum += params.feature_weights[f] * (params.r == 2.0 ? d * d : std::pow(d, params.r));
    }
    if (sum > 0.0) total += params.category_weights[c] * (params.r == 2.0 ? std::sqrt(sum) : std::pow(sum, 1.0 / params.r));
  }
  return total;
}

inline double mdpf_distance(const SimilarityFeatureFrame& x, const SimilarityFeatureFrame& y,
                            const SimilaritySchema& schema, const MdpfParams& params) {
  return mdpf_distance(std::span<const double>(x.values), std::span<const double>(y.values), schema, params);
}

// ---------------------------------------------------------------------------
// Confident frames

struct FrameRef {
  std::size_t index = 0;  // position in the recognized sequence
  ObjectId object;
  FrameIndex frame = 0;
};

class ConfidentPartition {
 public:
  ConfidentPartition() = default;

  std::size_t activity_count() const { return confident_.size(); }
  std::size_t frame_count() const { return assignment_.size(); }

  // Activity index a frame is confident for, or nullopt for a left frame.
  const std::optional<std::size_t>& assignment(std::size_t index) const { return assignment_.at(index); }
  const std::vector<FrameRef>& confident(std::size_t activity) const { return confident_.at(activity); }
  const std::vector<FrameRef>& left() const { return left_; }

  // Nearest confident frame of `activity` for the frame at `query`: same
  // object first, otherwise any other object; ties prefer the earlier frame.
  std::optional<FrameRef> nearest(const FrameRef& query, std::size_t activity) const {
    const auto& per_object = by_object_.at(activity);
    if (auto it = per_object.find(query.object); it != per_object.end()) {
      return closest(it->second, query.frame);
    }
    const auto& all = confident_.at(activity);
    if (all.empty()) return std::nullopt;
    return closest(all, query.frame);
  }

  static ConfidentPartition build(std::vector<std::optional<std::size_t>> assignment,
                                  std::span<const FrameRef> frames, std::size_t activities) {
    ConfidentPartition p;
    p.assignment_ = std::move(assignment);
    p.confident_.resize(activities);
    p.by_object_.resize(activities);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (const auto& a = p.assignment_[i]) {
        p.confident_[*a].push_back(frames[i]);
        p.by_object_[*a][frames[i].object].push_back(frames[i]);
      } else {
        p.left_.push_back(frames[i]);
      }
    }
    auto by_frame = [](const FrameRef& a, const FrameRef& b) {
      return a.frame < b.frame || (a.frame == b.frame && a.index < b.index);
    };
    for (std::size_t a = 0; a < activities; ++a) {
      std::sort(p.confident_[a].begin(), p.confident_[a].end(), by_frame);
      for (auto& [obj, refs] : p.by_object_[a]) std::sort(refs.begin(), refs.end(), by_frame);
    }
    return p;
  }

 private:
  static std::optional<FrameRef> closest(const std::vector<FrameRef>& sorted, FrameIndex t) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), t,
                               [](const FrameRef& r, FrameIndex v) { return r.frame < v; });
    const FrameRef* best = nullptr;
    if (it != sorted.end()) best = &*it;
    if (it != sorted.begin()) {
      // Earliest entry holding the closest earlier frame number.
      auto prev = std::prev(it);
      auto first = std::lower_bound(sorted.begin(), std::next(prev), prev->frame,
                                    [](const FrameRef& r, FrameIndex v) { return r.frame < v; });
      if (!best || t - prev->frame <= best->frame - t) best = &*first;
    }
    if (!best) return std::nullopt;
    return *best;
  }

  std::vector<std::optional<std::size_t>> assignment_;
  std::vector<std::vector<FrameRef>> confident_;
  std::vector<std::map<ObjectId, std::vector<FrameRef>>> by_object_;
  std::vector<FrameRef> left_;
};

inline std::vector<FrameRef> frame_refs(std::span<const ScoreFrame> frames) {
  std::vector<FrameRef> refs;
  refs.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) refs.push_back({i, frames[i].object, frames[i].frame});
  return refs;
}

// Activity a frame is confident for: the highest-scoring activity among those
// with score > threshold; nullopt when none qualifies.
inline std::optional<std::size_t> confident_activity(std::span<const double> scores,
                                                     std::span<const double> thresholds) {
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (scores[a] > thresholds[a] && (!best || scores[a] > scores[*best])) best = a;
  }
  return best;
}

inline ConfidentPartition detect_confident_frames(std::span<const ScoreFrame> frames,
                                                  const FusionParams& params) {
  const std::size_t k = params.activities.size();
  std::vector<std::optional<std::size_t>> assignment(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].scores.size() != k) throw ValidationError("score frame does not match fusion params");
    assignment[i] = confident_activity(frames[i].scores, params.thresholds);
  }
  const auto refs = frame_refs(frames);
  return ConfidentPartition::build(std::move(assignment), refs, k);
}

// Two best activities by fused score, ties to the earlier activity.
inline std::pair<std::size_t, std::size_t> top_two_candidates(std::span<const double> scores) {
  if (scores.size() < 2) throw ValidationError("confident-frame recognition needs at least two activities");
  std::size_t first = 0;
  for (std::size_t a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[first]) first = a;
  }
  std::size_t second = first == 0 ? 1 : 0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (a != first && scores[a] > scores[second]) second = a;
  }
  return {first, second};
}

inline std::optional<FrameRef> locate_reference_frame(const FrameRef& left, std::size_t activity,
                                                       const ConfidentPartition& partition) {
  return partition.nearest(left, activity);
}

// ---------------------------------------------------------------------------
// Recognition

enum class Provenance { Confident, Resolved, Fallback };

inline std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Confident: return "confident";
    case Provenance::Resolved: return "resolved";
    case Provenance::Fallback: return "fallback";
  }
  return "unknown";
}

struct FrameDecision {
  FrameIndex frame = 0;
  ObjectId object;
  std::size_t label = 0;
  Provenance provenance = Provenance::Confident;
  std::optional<std::size_t> candi1, candi2;
  std::optional<double> distance1, distance2;
  std::optional<FrameRef> reference1, reference2;
};

struct CfrOptions {
  // Per activity: how far (in D_w) a lone candi2 reference may be and still
  // win. Empty means no limit.
  std::vector<double> acceptance_radius;
};

// Runs steps (a)-(d) over aligned score and feature sequences. Frames may come
// from several objects; the sequence order is the output order.
inline std::vector<FrameDecision> cfr_recognize(std::span<const ScoreFrame> scores,
                                                std::span<const SimilarityFeatureFrame> features,
                                                const FusionParams& fusion, const SimilaritySchema& schema,
                                                const MdpfParams& mdpf, const CfrOptions& options = {}) {
  if (scores.size() != features.size()) throw ValidationError("scores and features are not aligned");
  validate(mdpf, schema);
  const auto partition = detect_confident_frames(scores, fusion);
  const auto radius = [&](std::size_t a) {
    return options.acceptance_radius.empty() ? std::numeric_limits<double>::infinity()
                                             : options.acceptance_radius.at(a);
  };

  std::vector<FrameDecision> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    FrameDecision& d = out[i];
    d.frame = scores[i].frame;
    d.object = scores[i].object;
    if (const auto& a = partition.assignment(i)) {
      d.label = *a;
      d.provenance = Provenance::Confident;
      continue;
    }
    const auto [c1, c2] = top_two_candidates(scores[i].scores);
    d.candi1 = c1;
    d.candi2 = c2;
    const FrameRef self{i, scores[i].object, scores[i].frame};
    d.reference1 = locate_reference_frame(self, c1, partition);
    d.reference2 = locate_reference_frame(self, c2, partition);
    if (d.reference1) d.distance1 = mdpf_distance(features[d.reference1->index], features[i], schema, mdpf);
    if (d.reference2) d.distance2 = mdpf_distance(features[d.reference2->index], features[i], schema, mdpf);

    if (d.reference1 && d.reference2) {
      d.provenance = Provenance::Resolved;
      d.label = *d.distance2 < *d.distance1 ? c2 : c1;
    } else if (d.reference2 && *d.distance2 <= radius(c2)) {
      d.provenance = Provenance::Resolved;
      d.label = c2;
    } else {
      d.provenance = Provenance::Fallback;
      d.label = c1;
    }
  }
  return out;
}

// Median D_w between confident frames of the same activity on different
// objects, per activity. `groups[a]` lists feature rows of activity a. At
// most `max_pairs` evenly strided pairs are evaluated; activities without a
// cross-object pair get an unlimited radius.
inline std::vector<double> calibrate_acceptance_radii(std::span<const SimilarityFeatureFrame> features,
                                                      const std::vector<std::vector<std::size_t>>& groups,
                                                      const SimilaritySchema& schema, const MdpfParams& mdpf,
                                                      std::size_t max_pairs = 4000) {
  std::vector<double> out;
  for (const auto& members : groups) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    const std::size_t m = members.size();
    const std::size_t total = m * (m - (m > 0 ? 1 : 0)) / 2;
    const std::size_t stride = std::max<std::size_t>(1, total / std::max<std::size_t>(1, max_pairs));
    std::size_t counter = 0;
    std::vector<double> dists;
    for (std::size_t a = 0; a < m && dists.size() < max_pairs; ++a) {
      for (std::size_t b = a + 1; b < m && dists.size() < max_pairs; ++b) {
        if (counter++ % stride != 0) continue;
        const auto& x = features[members[a]];
        const auto& y = features[members[b]];
        if (x.object == y.object) continue;
        dists.push_back(mdpf_distance(x, y, schema, mdpf));
      }
    }
    if (dists.empty()) {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    out.push_back(*mid);
  }
  return out;
}

}  // namespace actrec
