#pragma once

// End-to-end plumbing over a feature table: train a model bank (including LTS
// adaptation and incremental extension), score frames, recognize with each
// fusion method and evaluate against ground truth.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "actrec/cfr.hpp"
#include "actrec/cfv.hpp"
#include "actrec/dataset.hpp"
#include "actrec/error.hpp"
#include "actrec/eval.hpp"
#include "actrec/features.hpp"
#include "actrec/fusion.hpp"
#include "actrec/gmm.hpp"
#include "actrec/util.hpp"

namespace actrec {

inline constexpr std::size_t kNoClip = std::numeric_limits<std::size_t>::max();

// Features of every frame of a track set, with ground truth and clip ids.
struct FeatureTable {
  std::vector<ActivityId> activities;
  std::vector<SimilarityFeatureFrame> frames;
  std::vector<std::optional<std::size_t>> labels;
  std::vector<std::size_t> clip_of_frame;  // kNoClip for unlabeled frames
  std::vector<Clip> clips;

  std::size_t size() const { return frames.size(); }

  std::vector<std::size_t> labeled_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i]) rows.push_back(i);
    }
    return rows;
  }
};

inline FeatureTable build_feature_table(const LabeledTrackSet& set, int window_k) {
  validate(set);
  FeatureTable table;
  table.activities = set.activities;
  table.frames = extract_all_features(set, window_k);
  table.clips = extract_clips(set);

  std::map<ActivityId, std::size_t> index;
  for (std::size_t a = 0; a < set.activities.size(); ++a) index[set.activities[a]] = a;
  std::vector<std::size_t> track_offset;
  std::size_t offset = 0;
  for (const auto& track : set.tracks) {
    track_offset.push_back(offset);
    for (const auto& f : track.frames) {
      table.labels.push_back(f.label ? std::optional<std::size_t>(index.at(*f.label)) : std::nullopt);
    }
    offset += track.frames.size();
  }
  table.clip_of_frame.assign(table.frames.size(), kNoClip);
  for (std::size_t c = 0; c < table.clips.size(); ++c) {
    const auto& clip = table.clips[c];
    for (std::size_t p = clip.begin; p < clip.end; ++p) table.clip_of_frame[track_offset[clip.track] + p] = c;
  }
  return table;
}

// Rows split by clip folds: result[f] = rows whose clip landed in fold f.
inline std::vector<std::vector<std::size_t>> split_rows_by_clip(const FeatureTable& table,
                                                                std::span<const std::size_t> rows,
                                                                std::size_t n_folds, std::uint64_t seed) {
  std::vector<std::size_t> clip_ids;
  std::set<std::size_t> seen;
  for (std::size_t r : rows) {
    const std::size_t c = table.clip_of_frame.at(r);
    if (c == kNoClip) throw ValidationError("fold splitting requires labeled frames");
    if (seen.insert(c).second) clip_ids.push_back(c);
  }
  std::vector<Clip> clips;
  for (std::size_t c : clip_ids) clips.push_back(table.clips[c]);
  const auto fold = assign_clip_folds(clips, table.activities, n_folds, seed);
  std::map<std::size_t, std::size_t> fold_of_clip;
  for (std::size_t i = 0; i < clip_ids.size(); ++i) fold_of_clip[clip_ids[i]] = fold[i];
  std::vector<std::vector<std::size_t>> out(n_folds);
  for (std::size_t r : rows) out[fold_of_clip[table.clip_of_frame[r]]].push_back(r);
  return out;
}

inline std::vector<std::size_t> rows_except(const std::vector<std::vector<std::size_t>>& folds, std::size_t skip) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != skip) out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline SampleMatrix gather_samples(const FeatureTable& table, std::span<const std::size_t> rows,
                                   std::span<const std::size_t> features) {
  SampleMatrix m(features.size());
  std::vector<double> x(features.size());
  for (std::size_t r : rows) {
    for (std::size_t k = 0; k < features.size(); ++k) x[k] = table.frames[r].values[features[k]];
    m.push_back(x);
  }
  return m;
}

inline FeatureStats table_feature_stats(const FeatureTable& table, std::span<const std::size_t> rows,
                                        double floor_factor = 1e-6) {
  std::vector<SimilarityFeatureFrame> frames;
  std::vector<ActivityId> labels;
  for (std::size_t r : rows) {
    if (!table.labels[r]) continue;
    frames.push_back(table.frames[r]);
    labels.push_back(table.activities[*table.labels[r]]);
  }
  return compute_feature_stats(frames, labels, table.activities, floor_factor);
}

// ---------------------------------------------------------------------------
// Training

struct LtsDeclaration {
  ActivityId activity;
  std::map<std::string, ActivityId> donors;  // per category; missing = automatic
  double alpha = 0.5;
};

struct TrainingConfig {
  CfvSchema schema = default_schema();
  std::size_t components = 3;
  bool select_components_by_bic = false;
  EmConfig em;
  bool uniform_priors = false;
  std::vector<LtsDeclaration> lts;
};

inline std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t model_seed(const EmConfig& em, const ActivityId& activity, const std::string& category) {
  return em.seed ^ stable_hash(activity + "/" + category);
}

namespace detail {

inline std::vector<std::vector<std::size_t>> rows_by_activity(const FeatureTable& table,
                                                              std::span<const std::size_t> rows) {
  std::vector<std::vector<std::size_t>> out(table.activities.size());
  for (std::size_t r : rows) {
    if (table.labels[r]) out[*table.labels[r]].push_back(r);
  }
  return out;
}

inline GmmModel fit_category_model(const FeatureTable& table, std::span<const std::size_t> rows,
                                   const CfvSchema& schema, std::size_t category, const TrainingConfig& cfg,
                                   const ActivityId& activity) {
  const auto features = schema.feature_indices(category);
  const auto samples = gather_samples(table, rows, features);
  const auto seed = model_seed(cfg.em, activity, schema.categories[category].name);
  if (samples.rows() == 0) {
    throw InsufficientDataError("activity '" + activity + "' has no training frames; declare it as LTS");
  }
  if (cfg.select_components_by_bic) return fit_gmm_bic(samples, cfg.components, cfg.em, seed);
  if (samples.rows() < cfg.components) {
    throw InsufficientDataError("activity '" + activity + "' has " + std::to_string(samples.rows()) +
                                " training frames for " + std::to_string(cfg.components) +
                                " components; declare it as LTS");
  }
  return fit_gmm(samples, cfg.components, cfg.em, seed);
}

inline std::map<ActivityId, double> compute_priors(const FeatureTable& table,
                                                   const std::vector<std::vector<std::size_t>>& by_activity,
                                                   bool uniform) {
  std::map<ActivityId, double> priors;
  std::size_t total = 0;
  for (const auto& rows : by_activity) total += rows.size();
  for (std::size_t a = 0; a < table.activities.size(); ++a) {
    priors[table.activities[a]] = uniform || total == 0
                                      ? 1.0 / static_cast<double>(table.activities.size())
                                      : static_cast<double>(by_activity[a].size()) / static_cast<double>(total);
  }
  return priors;
}

}  // namespace detail

// Adapts every category model of one LTS activity from a donor.
inline void adapt_lts_activity(ModelBank& bank, const FeatureTable& table, std::span<const std::size_t> lts_rows,
                               const LtsDeclaration& lts, const EmConfig& em,
                               const std::vector<ActivityId>& donor_pool) {
  for (std::size_t c = 0; c < bank.schema.categories.size(); ++c) {
    const auto& cat = bank.schema.categories[c].name;
    const auto samples = gather_samples(table, lts_rows, bank.schema.feature_indices(c));
    std::optional<ActivityId> forced;
    if (auto it = lts.donors.find(cat); it != lts.donors.end()) forced = it->second;
    const auto donor = select_donor(bank, cat, samples, donor_pool, forced);
    bank.models[ModelKey{lts.activity, cat}] =
        map_adapt(bank.model(donor.chosen, cat), samples, em, AdaptConfig{lts.alpha});
  }
}

// Adds a new LTS activity to a trained bank. Its prior starts at the smallest
// existing prior and all priors are then renormalized.
inline void add_lts_activity(ModelBank& bank, const FeatureTable& table, std::span<const std::size_t> lts_rows,
                             const LtsDeclaration& lts, const EmConfig& em) {
  if (std::find(bank.activities.begin(), bank.activities.end(), lts.activity) != bank.activities.end()) {
    throw ValidationError("bank already has activity '" + lts.activity + "'");
  }
  const auto pool = bank.activities;
  adapt_lts_activity(bank, table, lts_rows, lts, em, pool);
  double smallest = 1.0;
  for (const auto& [name, p] : bank.priors) smallest = std::min(smallest, p);
  bank.activities.push_back(lts.activity);
  bank.priors[lts.activity] = smallest;
  double total = 0.0;
  for (const auto& [name, p] : bank.priors) total += p;
  for (auto& [name, p] : bank.priors) p /= total;
  validate(bank);
}

// One GMM per (activity, category). LTS activities are derived from donors
// after the regular activities are trained.
inline ModelBank train_model_bank(const FeatureTable& table, std::span<const std::size_t> rows,
                                  const TrainingConfig& cfg, std::size_t workers = 1) {
  validate(cfg.schema);
  ModelBank bank;
  bank.schema = cfg.schema;
  bank.activities = table.activities;
  const auto by_activity = detail::rows_by_activity(table, rows);
  bank.priors = detail::compute_priors(table, by_activity, cfg.uniform_priors);

  std::set<ActivityId> lts_set;
  for (const auto& l : cfg.lts) {
    if (std::find(table.activities.begin(), table.activities.end(), l.activity) == table.activities.end()) {
      throw LookupError("LTS activity '" + l.activity + "' is not a known activity");
    }
    lts_set.insert(l.activity);
  }
  std::vector<std::pair<std::size_t, std::size_t>> jobs;  // (activity, category)
  for (std::size_t a = 0; a < table.activities.size(); ++a) {
    if (lts_set.count(table.activities[a])) continue;
    for (std::size_t c = 0; c < cfg.schema.categories.size(); ++c) jobs.emplace_back(a, c);
  }
  std::vector<GmmModel> fitted(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const auto [a, c] = jobs[j];
    fitted[j] = detail::fit_category_model(table, by_activity[a], cfg.schema, c, cfg, table.activities[a]);
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    bank.models[ModelKey{table.activities[jobs[j].first], cfg.schema.categories[jobs[j].second].name}] =
        std::move(fitted[j]);
  }
  std::vector<ActivityId> donors;
  for (const auto& a : table.activities) {
    if (!lts_set.count(a)) donors.push_back(a);
  }
  for (const auto& l : cfg.lts) {
    const std::size_t a = bank.activity_index(l.activity);
    adapt_lts_activity(bank, table, by_activity[a], l, cfg.em, donors);
  }
  return bank;
}

// Adds new activities and/or categories to an existing bank. Models already
// present in `base` are copied unchanged; only missing (activity, category)
// pairs are trained. Priors are recomputed over `rows`.
inline ModelBank extend_model_bank(const ModelBank& base, const FeatureTable& table,
                                   std::span<const std::size_t> rows, const TrainingConfig& cfg,
                                   std::size_t workers = 1) {
  validate(cfg.schema);
  for (std::size_t c = 0; c < base.schema.categories.size(); ++c) {
    if (c >= cfg.schema.categories.size() || !(cfg.schema.categories[c] == base.schema.categories[c])) {
      throw ValidationError("extended schema must keep the existing categories unchanged and in order");
    }
  }
  ModelBank bank;
  bank.schema = cfg.schema;
  bank.activities = base.activities;
  for (const auto& a : table.activities) {
    if (std::find(bank.activities.begin(), bank.activities.end(), a) == bank.activities.end()) {
      bank.activities.push_back(a);
    }
  }
  // Priors over the union of activities, counted from the training rows.
  std::map<ActivityId, std::size_t> counts;
  std::size_t total = 0;
  for (std::size_t r : rows) {
    if (!table.labels[r]) continue;
    ++counts[table.activities[*table.labels[r]]];
    ++total;
  }
  for (const auto& a : bank.activities) {
    bank.priors[a] = cfg.uniform_priors || total == 0
                         ? 1.0 / static_cast<double>(bank.activities.size())
                         : static_cast<double>(counts[a]) / static_cast<double>(total);
  }

  const auto by_activity = detail::rows_by_activity(table, rows);
  std::vector<ModelKey> jobs;
  for (const auto& a : bank.activities) {
    for (const auto& cat : bank.schema.categories) {
      if (auto it = base.models.find(ModelKey{a, cat.name}); it != base.models.end()) {
        bank.models[it->first] = it->second;
      } else {
        jobs.push_back(ModelKey{a, cat.name});
      }
    }
  }
  std::vector<GmmModel> fitted(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const auto& key = jobs[j];
    auto it = std::find(table.activities.begin(), table.activities.end(), key.activity);
    if (it == table.activities.end()) {
      throw InsufficientDataError("no training data for activity '" + key.activity + "' in new category '" +
                                  key.category + "'");
    }
    const auto a = static_cast<std::size_t>(it - table.activities.begin());
    fitted[j] = detail::fit_category_model(table, by_activity[a], bank.schema,
                                           bank.schema.category_index(key.category), cfg, key.activity);
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) bank.models[jobs[j]] = std::move(fitted[j]);
  return bank;
}

// Early-integration joint models over all schema features.
inline JointModelBank train_joint_bank(const FeatureTable& table, std::span<const std::size_t> rows,
                                       const TrainingConfig& cfg, std::size_t workers = 1) {
  JointModelBank bank;
  bank.activities = table.activities;
  bank.features = cfg.schema.all_features();
  std::vector<std::size_t> features;
  for (const auto& f : bank.features) features.push_back(feature_index(f));
  const auto by_activity = detail::rows_by_activity(table, rows);
  const auto priors = detail::compute_priors(table, by_activity, cfg.uniform_priors);
  for (const auto& a : bank.activities) bank.priors.push_back(priors.at(a));
  bank.models.resize(table.activities.size());
  parallel_for(table.activities.size(), workers, [&](std::size_t a) {
    const auto samples = gather_samples(table, by_activity[a], features);
    if (samples.rows() < cfg.components) {
      throw InsufficientDataError("activity '" + table.activities[a] + "' has too few frames for a joint model");
    }
    bank.models[a] = fit_gmm(samples, cfg.components, cfg.em, model_seed(cfg.em, table.activities[a], "__joint__"));
  });
  return bank;
}

// ---------------------------------------------------------------------------
// Scoring

// Per-row, per-category log-likelihoods and posteriors for a set of rows.
struct ScoredFrames {
  std::vector<std::size_t> rows;
  std::size_t activities = 0;
  std::size_t categories = 0;
  std::vector<double> log_lik;    // [row][category][activity]
  std::vector<double> posterior;  // [row][category][activity]
  std::vector<double> priors;

  std::span<const double> posterior_of(std::size_t i, std::size_t c) const {
    return {posterior.data() + (i * categories + c) * activities, activities};
  }
  std::span<const double> log_lik_of(std::size_t i, std::size_t c) const {
    return {log_lik.data() + (i * categories + c) * activities, activities};
  }
};

inline ScoredFrames score_frames(const ModelBank& bank, const FeatureTable& table, std::span<const std::size_t> rows,
                                 std::size_t workers = 1) {
  ScoredFrames s;
  s.rows.assign(rows.begin(), rows.end());
  s.activities = bank.activities.size();
  s.categories = bank.schema.categories.size();
  s.priors = bank.prior_vector();
  s.log_lik.assign(rows.size() * s.categories * s.activities, 0.0);
  s.posterior.assign(s.log_lik.size(), 0.0);
  std::vector<std::vector<std::size_t>> features;
  std::vector<std::vector<const GmmModel*>> models(s.categories);
  for (std::size_t c = 0; c < s.categories; ++c) {
    features.push_back(bank.schema.feature_indices(c));
    for (const auto& a : bank.activities) models[c].push_back(&bank.model(a, bank.schema.categories[c].name));
  }
  const std::size_t chunk = 512;
  const std::size_t chunks = (rows.size() + chunk - 1) / chunk;
  parallel_for(chunks, workers, [&](std::size_t b) {
    std::vector<double> x;
    for (std::size_t i = b * chunk; i < std::min(rows.size(), (b + 1) * chunk); ++i) {
      const auto& values = table.frames[rows[i]].values;
      for (std::size_t c = 0; c < s.categories; ++c) {
        x.clear();
        for (std::size_t f : features[c]) x.push_back(values[f]);
        double* ll = s.log_lik.data() + (i * s.categories + c) * s.activities;
        for (std::size_t a = 0; a < s.activities; ++a) ll[a] = models[c][a]->log_likelihood(x);
        const auto post = posterior_from_log_likelihoods(std::span<const double>(ll, s.activities), s.priors);
        std::copy(post.probs.begin(), post.probs.end(), s.posterior.data() + (i * s.categories + c) * s.activities);
      }
    }
  });
  return s;
}

inline void check_alignment(const ScoredFrames& scored, const FusionParams& params) {
  if (params.activities.size() != scored.activities || params.categories.size() != scored.categories) {
    throw ValidationError("fusion params do not match the model bank");
  }
}

inline std::vector<ScoreFrame> fuse_scores(const ScoredFrames& scored, const FeatureTable& table,
                                           const FusionParams& params) {
  check_alignment(scored, params);
  std::vector<ScoreFrame> out(scored.rows.size());
  for (std::size_t i = 0; i < scored.rows.size(); ++i) {
    auto& sf = out[i];
    sf.frame = table.frames[scored.rows[i]].frame;
    sf.object = table.frames[scored.rows[i]].object;
    sf.per_cfv_posteriors.resize(scored.categories);
    for (std::size_t c = 0; c < scored.categories; ++c) {
      auto p = scored.posterior_of(i, c);
      sf.per_cfv_posteriors[c].assign(p.begin(), p.end());
    }
    sf.scores = wa_scores(sf.per_cfv_posteriors, params);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recognition

enum class Method { Wa, Wm, Ei, Cfr };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::Wa: return "wa";
    case Method::Wm: return "wm";
    case Method::Ei: return "ei";
    case Method::Cfr: return "cfr";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  if (name == "wa") return Method::Wa;
  if (name == "wm") return Method::Wm;
  if (name == "ei") return Method::Ei;
  if (name == "cfr") return Method::Cfr;
  throw ValidationError("unknown fusion method '" + std::string(name) + "' (expected wa, wm, ei or cfr)");
}

inline std::vector<std::size_t> recognize_wa(const ScoredFrames& scored, const FusionParams& params) {
  check_alignment(scored, params);
  std::vector<std::size_t> out(scored.rows.size());
  std::vector<double> scores(scored.activities);
  for (std::size_t i = 0; i < scored.rows.size(); ++i) {
    std::fill(scores.begin(), scores.end(), 0.0);
    for (std::size_t c = 0; c < scored.categories; ++c) {
      auto p = scored.posterior_of(i, c);
      for (std::size_t a = 0; a < scored.activities; ++a) scores[a] += params.wa_weights[a][c] * p[a];
    }
    out[i] = classify_wa(scores);
  }
  return out;
}

inline std::vector<std::size_t> recognize_wm(const ScoredFrames& scored, const FusionParams& params,
                                             bool use_priors = true) {
  check_alignment(scored, params);
  std::vector<std::size_t> out(scored.rows.size());
  std::vector<std::vector<double>> ll(scored.categories);
  for (std::size_t i = 0; i < scored.rows.size(); ++i) {
    for (std::size_t c = 0; c < scored.categories; ++c) {
      auto p = scored.log_lik_of(i, c);
      ll[c].assign(p.begin(), p.end());
    }
    out[i] = classify_wm(ll, params, scored.priors, use_priors);
  }
  return out;
}

// Per-category MAP classifier.
inline std::vector<std::size_t> recognize_single_category(const ScoredFrames& scored, std::size_t category) {
  std::vector<std::size_t> out(scored.rows.size());
  for (std::size_t i = 0; i < scored.rows.size(); ++i) out[i] = argmax_first(scored.posterior_of(i, category));
  return out;
}

inline std::vector<std::size_t> recognize_ei(const JointModelBank& bank, const FeatureTable& table,
                                             std::span<const std::size_t> rows) {
  std::vector<std::size_t> features;
  for (const auto& f : bank.features) features.push_back(feature_index(f));
  std::vector<std::size_t> out(rows.size());
  std::vector<double> x(features.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < features.size(); ++k) x[k] = table.frames[rows[i]].values[features[k]];
    out[i] = classify_ei(bank, x);
  }
  return out;
}

// Everything CFR needs besides fused scores.
struct CfrSetup {
  SimilaritySchema schema;
  MdpfParams mdpf;
  CfrOptions options;
};

// Similarity schema and M-DPF weights from training statistics; acceptance
// radii from training frames grouped by their ground-truth activity.
inline CfrSetup make_cfr_setup(const FeatureTable& table, std::span<const std::size_t> train_rows,
                               const CfvSchema& schema, std::optional<MdpfParams> overrides = std::nullopt) {
  CfrSetup setup;
  setup.schema = similarity_schema(schema);
  const auto stats = table_feature_stats(table, train_rows);
  setup.mdpf = default_mdpf_params(stats, setup.schema);
  if (overrides) {
    setup.mdpf.r = overrides->r;
    setup.mdpf.n = overrides->n;
    if (!overrides->category_weights.empty()) setup.mdpf.category_weights = overrides->category_weights;
  }
  validate(setup.mdpf, setup.schema);
  std::vector<std::vector<std::size_t>> groups(table.activities.size());
  for (std::size_t r : train_rows) {
    if (table.labels[r]) groups[*table.labels[r]].push_back(r);
  }
  setup.options.acceptance_radius =
      calibrate_acceptance_radii(table.frames, groups, setup.schema, setup.mdpf);
  return setup;
}

inline std::vector<FrameDecision> recognize_cfr(const ScoredFrames& scored, const FeatureTable& table,
                                                const FusionParams& params, const CfrSetup& setup) {
  const auto scores = fuse_scores(scored, table, params);
  std::vector<SimilarityFeatureFrame> features;
  features.reserve(scored.rows.size());
  for (std::size_t r : scored.rows) features.push_back(table.frames[r]);
  return cfr_recognize(scores, features, params, setup.schema, setup.mdpf, setup.options);
}

inline std::vector<std::size_t> decision_labels(std::span<const FrameDecision> decisions) {
  std::vector<std::size_t> out;
  out.reserve(decisions.size());
  for (const auto& d : decisions) out.push_back(d.label);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

inline std::vector<std::size_t> truth_labels(const FeatureTable& table, std::span<const std::size_t> rows) {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    if (!table.labels[r]) throw ValidationError("evaluation requires fully labeled frames");
    out.push_back(*table.labels[r]);
  }
  return out;
}

// Splits rows into label sequences at object changes and frame gaps.
inline std::vector<LabelSequence> label_sequences(const FeatureTable& table, std::span<const std::size_t> rows,
                                                  std::span<const std::size_t> labels) {
  std::vector<LabelSequence> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = table.frames[rows[i]];
    const bool start = i == 0 || table.frames[rows[i - 1]].object != f.object ||
                       table.frames[rows[i - 1]].frame + 1 != f.frame;
    if (start) out.push_back(LabelSequence{f.object, {}});
    out.back().labels.push_back(labels[i]);
  }
  return out;
}

struct MethodReport {
  FrameErrorReport frames;
  AerReport clips;
};

inline MethodReport evaluate_predictions(const FeatureTable& table, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> pred) {
  const auto truth = truth_labels(table, rows);
  MethodReport r;
  r.frames = frame_error_report(pred, truth, table.activities);
  const auto t = label_sequences(table, rows, truth);
  const auto p = label_sequences(table, rows, pred);
  r.clips = activity_error_report(p, t, table.activities);
  return r;
}

}  // namespace actrec
