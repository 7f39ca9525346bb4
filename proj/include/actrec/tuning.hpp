#pragma once

// Fusion parameter selection by k-fold cross-validation over clips, the rough
// parameter preset and one-parameter robustness sweeps.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "actrec/error.hpp"
#include "actrec/pipeline.hpp"
#include "actrec/util.hpp"

namespace actrec {

enum class SearchStrategy { Full, CoordinateWise };

inline std::string_view strategy_name(SearchStrategy s) {
  return s == SearchStrategy::Full ? "full" : "coordinate-wise";
}

inline SearchStrategy parse_strategy(std::string_view name) {
  if (name == "full") return SearchStrategy::Full;
  if (name == "coordinate-wise" || name == "coordinate") return SearchStrategy::CoordinateWise;
  throw ValidationError("unknown search strategy '" + std::string(name) + "'");
}

inline std::vector<double> stepped_values(double from, double to, double step) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(std::round((from + static_cast<double>(i) * step) * 1e9) / 1e9);
  return out;
}

struct ParamGrid {
  std::vector<double> weights = stepped_values(0.0, 1.0, 0.1);
  std::vector<double> thresholds = stepped_values(0.5, 0.9, 0.05);
  SearchStrategy strategy = SearchStrategy::CoordinateWise;
  std::size_t max_full_candidates = 100000;

  void validate() const {
    if (weights.empty() || thresholds.empty()) throw ValidationError("parameter grid lists must be nonempty");
    for (double w : weights) {
      if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("grid weights must lie in [0, 1]");
    }
    for (double t : thresholds) {
      if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("grid thresholds must be > 0");
    }
  }
};

// Every weight row over `categories` whose leading entries come from the grid
// and whose last entry completes the sum to one.
inline std::vector<std::vector<double>> weight_rows(std::span<const double> grid, std::size_t categories) {
  std::vector<std::vector<double>> out;
  if (categories == 1) return {{1.0}};
  std::vector<double> row(categories, 0.0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t pos, double sum) {
    if (pos + 1 == categories) {
      const double last = 1.0 - sum;
      if (last < -1e-12) return;
      row[pos] = std::max(0.0, last);
      out.push_back(row);
      return;
    }
    for (double w : grid) {
      if (sum + w > 1.0 + 1e-12) continue;
      row[pos] = w;
      rec(pos + 1, sum + w);
    }
  };
  rec(0, 0.0);
  return out;
}

inline FusionParams rough_params(const std::vector<ActivityId>& activities, const std::vector<std::string>& categories) {
  return uniform_fusion_params(activities, categories, 0.7);
}

inline std::vector<std::size_t> predict(Method method, const ScoredFrames& scored, const FeatureTable& table,
                                        const FusionParams& params, const CfrSetup* setup) {
  switch (method) {
    case Method::Wa: return recognize_wa(scored, params);
    case Method::Wm: return recognize_wm(scored, params);
    case Method::Cfr:
      if (!setup) throw ValidationError("CFR prediction needs a similarity setup");
      return decision_labels(recognize_cfr(scored, table, params, *setup));
    case Method::Ei: break;
  }
  throw ValidationError("method '" + std::string(method_name(method)) + "' has no tunable fusion parameters");
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvFold {
  std::vector<std::size_t> train_rows;
  ScoredFrames scored;  // validation rows
  CfrSetup setup;
  std::vector<std::size_t> truth;
};

struct CvContext {
  const FeatureTable* table = nullptr;
  std::vector<ActivityId> activities;
  std::vector<std::string> categories;
  std::vector<CvFold> folds;
};

// Trains one bank per fold and scores its validation clips once; candidate
// parameters are then evaluated without retraining.
inline CvContext prepare_cv(const FeatureTable& table, std::span<const std::size_t> rows, const TrainingConfig& cfg,
                            std::size_t n_folds, std::uint64_t seed, std::size_t workers = 1,
                            std::optional<MdpfParams> mdpf = std::nullopt) {
  CvContext ctx;
  ctx.table = &table;
  ctx.activities = table.activities;
  for (const auto& c : cfg.schema.categories) ctx.categories.push_back(c.name);
  const auto parts = split_rows_by_clip(table, rows, n_folds, seed);
  ctx.folds.resize(n_folds);
  parallel_for(n_folds, workers, [&](std::size_t f) {
    auto& fold = ctx.folds[f];
    fold.train_rows = rows_except(parts, f);
    const auto bank = train_model_bank(table, fold.train_rows, cfg, 1);
    fold.scored = score_frames(bank, table, parts[f], 1);
    fold.setup = make_cfr_setup(table, fold.train_rows, cfg.schema, mdpf);
    fold.truth = truth_labels(table, parts[f]);
  });
  return ctx;
}

inline double cv_objective(const CvContext& ctx, Method method, const FusionParams& params) {
  double sum = 0.0;
  for (const auto& fold : ctx.folds) {
    const auto pred = predict(method, fold.scored, *ctx.table, params, &fold.setup);
    sum += frame_error_report(pred, fold.truth, ctx.activities).tfer;
  }
  return sum / static_cast<double>(ctx.folds.size());
}

struct CvResult {
  FusionParams params;
  double mean_tfer = 0.0;
  std::size_t evaluations = 0;
  SearchStrategy strategy = SearchStrategy::CoordinateWise;
};

namespace detail {

// One activity's options: (weight row, threshold). Thresholds only vary for CFR.
struct ActivityOption {
  std::vector<double> weights;
  double threshold = 0.7;
};

inline std::vector<ActivityOption> activity_options(const ParamGrid& grid, Method method, std::size_t categories) {
  std::vector<ActivityOption> out;
  const auto rows = weight_rows(grid.weights, categories);
  for (const auto& r : rows) {
    if (method == Method::Cfr) {
      for (double t : grid.thresholds) out.push_back({r, t});
    } else {
      out.push_back({r, 0.7});
    }
  }
  return out;
}

inline void apply_option(FusionParams& p, Method method, std::size_t activity, const ActivityOption& o) {
  if (method == Method::Wm) {
    p.wm_weights[activity] = o.weights;
  } else {
    p.wa_weights[activity] = o.weights;
  }
  if (method == Method::Cfr) p.thresholds[activity] = o.threshold;
}

// Objective for each candidate, evaluated in parallel; lowest wins, the
// earliest candidate on ties.
inline std::size_t best_candidate(std::size_t count, std::size_t workers,
                                  const std::function<double(std::size_t)>& objective, double& best_value) {
  std::vector<double> values(count);
  parallel_for(count, workers, [&](std::size_t i) { values[i] = objective(i); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < count; ++i) {
    if (values[i] < values[best]) best = i;
  }
  best_value = values[best];
  return best;
}

}  // namespace detail

inline CvResult search_params(const CvContext& ctx, const ParamGrid& grid, Method method, std::size_t workers = 1) {
  grid.validate();
  if (method == Method::Ei) throw ValidationError("EI has no fusion parameters to cross-validate");
  const std::size_t k = ctx.activities.size();
  const auto options = detail::activity_options(grid, method, ctx.categories.size());
  CvResult result;
  result.strategy = grid.strategy;
  result.params = rough_params(ctx.activities, ctx.categories);

  if (grid.strategy == SearchStrategy::Full) {
    double total = 1.0;
    for (std::size_t a = 0; a < k; ++a) total *= static_cast<double>(options.size());
    if (total > static_cast<double>(grid.max_full_candidates)) {
      throw ValidationError("full grid has " + format_double(total) + " candidates (limit " +
                            std::to_string(grid.max_full_candidates) + "); use the coordinate-wise strategy");
    }
    const auto count = static_cast<std::size_t>(total);
    auto candidate = [&](std::size_t idx) {
      FusionParams p = result.params;
      for (std::size_t a = 0; a < k; ++a) {
        detail::apply_option(p, method, a, options[idx % options.size()]);
        idx /= options.size();
      }
      return p;
    };
    double best_value = 0.0;
    const auto best = detail::best_candidate(
        count, workers, [&](std::size_t i) { return cv_objective(ctx, method, candidate(i)); }, best_value);
    result.params = candidate(best);
    result.mean_tfer = best_value;
    result.evaluations = count;
    return result;
  }

  for (std::size_t a = 0; a < k; ++a) {
    double best_value = 0.0;
    const auto best = detail::best_candidate(
        options.size(), workers,
        [&](std::size_t i) {
          FusionParams p = result.params;
          detail::apply_option(p, method, a, options[i]);
          return cv_objective(ctx, method, p);
        },
        best_value);
    detail::apply_option(result.params, method, a, options[best]);
    result.mean_tfer = best_value;
    result.evaluations += options.size();
  }
  return result;
}

inline CvResult cross_validate(const FeatureTable& table, std::span<const std::size_t> rows,
                               const TrainingConfig& cfg, const ParamGrid& grid, Method method,
                               std::size_t n_folds = 5, std::uint64_t seed = 0, std::size_t workers = 1,
                               std::optional<MdpfParams> mdpf = std::nullopt) {
  grid.validate();
  const auto ctx = prepare_cv(table, rows, cfg, n_folds, seed, workers, mdpf);
  return search_params(ctx, grid, method, workers);
}

inline FusionParams cross_validate_params(const FeatureTable& table, std::span<const std::size_t> rows,
                                          const TrainingConfig& cfg, const ParamGrid& grid, Method method,
                                          std::size_t n_folds = 5, std::uint64_t seed = 0,
                                          std::size_t workers = 1) {
  return cross_validate(table, rows, cfg, grid, method, n_folds, seed, workers).params;
}

// ---------------------------------------------------------------------------
// Robustness sweeps

enum class SweepAxis { Weight, Threshold };

inline SweepAxis parse_axis(std::string_view name) {
  if (name == "weight" || name == "w") return SweepAxis::Weight;
  if (name == "threshold" || name == "th") return SweepAxis::Threshold;
  throw ValidationError("unknown sweep axis '" + std::string(name) + "' (expected weight or threshold)");
}

struct SweepPoint {
  double value = 0.0;
  FrameErrorReport report;
};

// Varies one activity's leading weight or threshold, everything else fixed.
// Points are evaluated independently and returned in `values` order.
inline std::vector<SweepPoint> robustness_sweep(const FeatureTable& table, const ScoredFrames& scored,
                                                const CfrSetup* setup, Method method, SweepAxis axis,
                                                std::size_t activity, std::span<const double> values,
                                                const FusionParams& fixed, std::size_t workers = 1) {
  validate(fixed);
  if (activity >= fixed.activities.size()) throw ValidationError("sweep activity out of range");
  const auto truth = truth_labels(table, scored.rows);
  std::vector<SweepPoint> out(values.size());
  parallel_for(values.size(), workers, [&](std::size_t i) {
    FusionParams p = fixed;
    const double v = values[i];
    if (axis == SweepAxis::Weight) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("sweep weight must lie in [0, 1]");
      const auto row = leading_weight_row(v, p.categories.size());
      if (method == Method::Wm) {
        p.wm_weights[activity] = row;
      } else {
        p.wa_weights[activity] = row;
      }
    } else {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("sweep threshold must be >= 0");
      p.thresholds[activity] = v;
    }
    out[i].value = v;
    out[i].report = frame_error_report(predict(method, scored, table, p, setup), truth, table.activities);
  });
  return out;
}

}  // namespace actrec
