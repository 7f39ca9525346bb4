#pragma once

// Score fusion across category classifiers: weighted average (also the
// confident-frame score), weighted multiplication and early integration.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "actrec/error.hpp"
#include "actrec/gmm.hpp"

namespace actrec {

// Per-activity fusion parameters over an ordered list of categories.
// wa_weights[k][i] / wm_weights[k][i]: weight of category i for activity k,
// each row summing to one. thresholds[k]: confident-frame threshold.
struct FusionParams {
  std::vector<ActivityId> activities;
  std::vector<std::string> categories;
  std::vector<std::vector<double>> wa_weights;
  std::vector<double> thresholds;
  std::vector<std::vector<double>> wm_weights;

  bool operator==(const FusionParams&) const = default;
};

inline void validate(const FusionParams& p) {
  const std::size_t k = p.activities.size();
  const std::size_t c = p.categories.size();
  if (k == 0 || c == 0) throw ValidationError("fusion params need activities and categories");
  if (p.wa_weights.size() != k || p.wm_weights.size() != k || p.thresholds.size() != k) {
    throw ValidationError("fusion params: one row per activity required");
  }
  auto check_row = [&](const std::vector<double>& row, const std::string& what, std::size_t a) {
    if (row.size() != c) throw ValidationError(what + ": one weight per category required");
    double sum = 0.0;
    for (double w : row) {
      if (!(w >= 0.0 && w <= 1.0)) throw ValidationError(what + ": weights must lie in [0, 1]");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError(what + " for '" + p.activities[a] + "' must sum to 1");
    }
  };
  for (std::size_t a = 0; a < k; ++a) {
    check_row(p.wa_weights[a], "WA weights", a);
    check_row(p.wm_weights[a], "WM weights", a);
    // Zero is accepted as the degenerate sweep endpoint (every frame confident).
    if (!(p.thresholds[a] >= 0.0) || !std::isfinite(p.thresholds[a])) {
      throw ValidationError("threshold for '" + p.activities[a] + "' must be >= 0");
    }
  }
}

// Uniform weights over categories and a common threshold.
inline FusionParams uniform_fusion_params(std::vector<ActivityId> activities,
                                          std::vector<std::string> categories, double threshold = 0.7) {
  FusionParams p;
  p.activities = std::move(activities);
  p.categories = std::move(categories);
  const double w = 1.0 / static_cast<double>(p.categories.size());
  p.wa_weights.assign(p.activities.size(), std::vector<double>(p.categories.size(), w));
  p.wm_weights = p.wa_weights;
  p.thresholds.assign(p.activities.size(), threshold);
  return p;
}

// Weights (w, 1-w, ...) for the two-category form used in sweeps: the first
// category gets w and the rest share 1-w evenly.
inline std::vector<double> leading_weight_row(double w, std::size_t categories) {
  std::vector<double> row(categories, 0.0);
  if (categories == 1) {
    row[0] = 1.0;
    return row;
  }
  row[0] = w;
  for (std::size_t i = 1; i < categories; ++i) row[i] = (1.0 - w) / static_cast<double>(categories - 1);
  return row;
}

// Fused per-activity scores of one frame, plus the category posteriors they
// came from. Activities in FusionParams order.
struct ScoreFrame {
  FrameIndex frame = 0;
  ObjectId object;
  std::vector<double> scores;
  std::vector<std::vector<double>> per_cfv_posteriors;  // [category][activity]
};

// score_k = sum_i w_{k,i} P(A_k | F_i). posteriors[i] is the posterior vector
// of category i in FusionParams order.
inline std::vector<double> wa_scores(std::span<const std::vector<double>> posteriors,
                                     const FusionParams& params) {
  const std::size_t k = params.activities.size();
  if (posteriors.size() != params.categories.size()) {
    throw ValidationError("WA: expected " + std::to_string(params.categories.size()) +
                          " category posteriors, got " + std::to_string(posteriors.size()));
  }
  std::vector<double> scores(k, 0.0);
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    if (posteriors[i].size() != k) {
      throw ValidationError("WA: posterior for category '" + params.categories[i] + "' is missing activities");
    }
    for (std::size_t a = 0; a < k; ++a) scores[a] += params.wa_weights[a][i] * posteriors[i][a];
  }
  return scores;
}

inline ScoreFrame make_score_frame(FrameIndex frame, ObjectId object,
                                   std::vector<std::vector<double>> posteriors, const FusionParams& params) {
  ScoreFrame out;
  out.frame = frame;
  out.object = std::move(object);
  out.scores = wa_scores(posteriors, params);
  out.per_cfv_posteriors = std::move(posteriors);
  return out;
}

// Argmax of fused scores; an exact tie goes to the earlier activity.
inline std::size_t classify_wa(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("no activities to classify");
  return argmax_first(scores);
}

// argmax_k sum_i w_{k,i} log p(F_i | A_k) [+ log P(A_k)]. log_lik[i][k].
inline std::size_t classify_wm(std::span<const std::vector<double>> log_lik, const FusionParams& params,
                               std::span<const double> priors, bool use_priors = true) {
  const std::size_t k = params.activities.size();
  if (log_lik.size() != params.categories.size()) {
    throw ValidationError("WM: expected " + std::to_string(params.categories.size()) + " categories");
  }
  std::vector<double> total(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < log_lik.size(); ++i) {
      if (log_lik[i].size() != k) throw ValidationError("WM: likelihoods missing activities");
      const double w = params.wm_weights[a][i];
      if (w == 0.0) continue;  // 0 * -inf contributes nothing
      s += w * log_lik[i][a];
    }
    if (use_priors) {
      s += priors[a] > 0.0 ? std::log(priors[a]) : -std::numeric_limits<double>::infinity();
    }
    total[a] = std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
  }
  return argmax_first(total);
}

// Early integration: one joint model per activity over the concatenated
// category features, classified by MAP.
struct JointModelBank {
  std::vector<ActivityId> activities;
  std::vector<std::string> features;  // concatenation order
  std::vector<GmmModel> models;       // one per activity
  std::vector<double> priors;
};

inline std::size_t classify_ei(const JointModelBank& bank, std::span<const double> x) {
  if (bank.models.empty()) throw ValidationError("EI: empty model bank");
  std::vector<double> ll;
  for (const auto& m : bank.models) {
    if (m.dim() != x.size()) throw ValidationError("EI: sample dimension does not match joint model");
    ll.push_back(m.log_likelihood(x));
  }
  return argmax_first(posterior_from_log_likelihoods(ll, bank.priors).probs);
}

}  // namespace actrec
