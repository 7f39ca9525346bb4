#include <gtest/gtest.h>

#include "actrec/tuning.hpp"
#include "test_support.hpp"

using namespace actrec;

namespace {

// Shape changes separate the activities; motion is identical for all of them.
SyntheticConfig signal_noise_config() {
  SyntheticConfig c;
  c.activities = {
      {"a", {1.5, 0.5}, {0.3, 0.1}, {0.010, 0.004}, {0.010, 0.004}, 1.0},
      {"b", {1.5, 0.5}, {0.3, 0.1}, {0.030, 0.006}, {0.020, 0.006}, 1.0},
      {"c", {1.5, 0.5}, {0.3, 0.1}, {0.060, 0.010}, {0.035, 0.008}, 1.0},
  };
  c.individual_offset_scale = 0.6;
  c.within_clip_drift = 0.2;
  c.frame_noise_scale = 2.5;
  c.clip_length_range = {40, 80};
  c.clips_per_activity = 10;
  return c;
}

struct Fixture {
  FeatureTable table;
  std::vector<std::size_t> rows;
  TrainingConfig cfg;
};

Fixture make_fixture(const SyntheticConfig& sc, std::uint64_t seed) {
  Fixture f;
  f.table = build_feature_table(generate_synthetic_tracks(sc, seed), 4);
  f.rows = f.table.labeled_rows();
  f.cfg.components = 2;
  f.cfg.em.seed = seed;
  return f;
}

}  // namespace

TEST(ParamGridTest, DefaultsAndWeightRows) {
  const ParamGrid g;
  EXPECT_EQ(g.weights.size(), 11u);
  EXPECT_EQ(g.thresholds.size(), 9u);
  EXPECT_DOUBLE_EQ(g.thresholds.front(), 0.5);
  EXPECT_DOUBLE_EQ(g.thresholds.back(), 0.9);
  EXPECT_EQ(weight_rows(g.weights, 2).size(), 11u);
  EXPECT_EQ(weight_rows(g.weights, 3).size(), 66u);
  for (const auto& row : weight_rows(g.weights, 3)) {
    double s = 0;
    for (double w : row) s += w;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  ParamGrid bad;
  bad.thresholds = {0.0};
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(RoughParams, UniformWeightsAndSevenTenths) {
  const auto p = rough_params({"a", "b"}, {"x", "y", "z"});
  EXPECT_DOUBLE_EQ(p.wa_weights[1][2], 1.0 / 3.0);
  EXPECT_EQ(p.thresholds, (std::vector<double>{0.7, 0.7}));
}

TEST(CrossValidation, SinglePointGridReturnsThatPoint) {
  auto f = make_fixture(fixtures::small_synthetic(6), 3);
  ParamGrid g;
  g.weights = {0.3};
  g.thresholds = {0.65};
  g.strategy = SearchStrategy::Full;
  const auto p = cross_validate_params(f.table, f.rows, f.cfg, g, Method::Cfr, 2, 7);
  for (std::size_t a = 0; a < p.activities.size(); ++a) {
    EXPECT_DOUBLE_EQ(p.wa_weights[a][0], 0.3);
    EXPECT_DOUBLE_EQ(p.wa_weights[a][1], 0.7);
    EXPECT_DOUBLE_EQ(p.thresholds[a], 0.65);
  }
}

TEST(CrossValidation, SignalCategoryGetsTheWeight) {
  auto f = make_fixture(signal_noise_config(), 11);
  const auto ctx = prepare_cv(f.table, f.rows, f.cfg, 5, 2);
  ParamGrid g;
  g.weights = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  g.strategy = SearchStrategy::Full;
  const auto result = search_params(ctx, g, Method::Wa);
  for (const auto& row : result.params.wa_weights) EXPECT_GE(row[0], 0.8 - 1e-12);
  // Exhaustive re-evaluation of every joint candidate: nothing beats the pick.
  double best = std::numeric_limits<double>::infinity();
  for (double w0 : g.weights) {
    for (double w1 : g.weights) {
      for (double w2 : g.weights) {
        auto p = rough_params(ctx.activities, ctx.categories);
        p.wa_weights = {{w0, 1 - w0}, {w1, 1 - w1}, {w2, 1 - w2}};
        best = std::min(best, cv_objective(ctx, Method::Wa, p));
      }
    }
  }
  EXPECT_DOUBLE_EQ(result.mean_tfer, best);
  EXPECT_DOUBLE_EQ(cv_objective(ctx, Method::Wa, result.params), best);
}

TEST(CrossValidation, DeterministicAcrossRunsAndWorkers) {
  auto f = make_fixture(fixtures::small_synthetic(6), 5);
  ParamGrid g;
  g.weights = {0.2, 0.5, 0.8};
  g.thresholds = {0.6, 0.8};
  const auto a = cross_validate(f.table, f.rows, f.cfg, g, Method::Cfr, 3, 9, 1);
  const auto b = cross_validate(f.table, f.rows, f.cfg, g, Method::Cfr, 3, 9, 3);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.mean_tfer, b.mean_tfer);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(CrossValidation, FullGridLimitEnforced) {
  auto f = make_fixture(fixtures::small_synthetic(6), 5);
  const auto ctx = prepare_cv(f.table, f.rows, f.cfg, 2, 1);
  ParamGrid g;
  g.strategy = SearchStrategy::Full;
  g.max_full_candidates = 10;
  EXPECT_THROW(search_params(ctx, g, Method::Cfr), ValidationError);
  EXPECT_THROW(search_params(ctx, ParamGrid{}, Method::Ei), ValidationError);
}

namespace {

struct Trained {
  Fixture f;
  std::vector<std::size_t> train, test;
  ScoredFrames scored;
  CfrSetup setup;
};

Trained train_split(std::uint64_t seed) {
  Trained t{make_fixture(fixtures::small_synthetic(8), seed), {}, {}, {}, {}};
  const auto parts = split_rows_by_clip(t.f.table, t.f.rows, 2, seed);
  t.train = parts[0];
  t.test = parts[1];
  const auto bank = train_model_bank(t.f.table, t.train, t.f.cfg);
  t.scored = score_frames(bank, t.f.table, t.test);
  t.setup = make_cfr_setup(t.f.table, t.train, t.f.cfg.schema);
  return t;
}

}  // namespace

TEST(Sweep, SingleValueMatchesDirectEvaluation) {
  const auto t = train_split(4);
  const auto fixed = rough_params(t.f.table.activities, {"body_movement", "body_translation"});
  const std::vector<double> values{0.3};
  const auto curve = robustness_sweep(t.f.table, t.scored, &t.setup, Method::Cfr, SweepAxis::Weight, 2, values, fixed);
  ASSERT_EQ(curve.size(), 1u);
  auto direct = fixed;
  direct.wa_weights[2] = {0.3, 0.7};
  const auto pred = predict(Method::Cfr, t.scored, t.f.table, direct, &t.setup);
  const auto report = frame_error_report(pred, truth_labels(t.f.table, t.scored.rows), t.f.table.activities);
  EXPECT_EQ(curve[0].report.tfer, report.tfer);
  for (std::size_t a = 0; a < report.activities.size(); ++a) {
    EXPECT_EQ(curve[0].report.activities[a].miss_rate, report.activities[a].miss_rate);
    EXPECT_EQ(curve[0].report.activities[a].fa_rate, report.activities[a].fa_rate);
  }
}

TEST(Sweep, ZeroThresholdPointMatchesWa) {
  const auto t = train_split(6);
  auto fixed = rough_params(t.f.table.activities, {"body_movement", "body_translation"});
  for (auto& th : fixed.thresholds) th = 0.0;
  const std::vector<double> values{0.0, 0.5, 0.7};
  const auto curve =
      robustness_sweep(t.f.table, t.scored, &t.setup, Method::Cfr, SweepAxis::Threshold, 2, values, fixed, 2);
  const auto wa = frame_error_report(recognize_wa(t.scored, fixed), truth_labels(t.f.table, t.scored.rows),
                                     t.f.table.activities);
  EXPECT_EQ(curve[0].value, 0.0);
  EXPECT_EQ(curve[0].report.tfer, wa.tfer);
  for (std::size_t a = 0; a < wa.activities.size(); ++a) {
    EXPECT_EQ(curve[0].report.activities[a].miss_rate, wa.activities[a].miss_rate);
  }
  EXPECT_EQ(curve[2].value, 0.7);
}

TEST(Sweep, InvalidValuesRejected) {
  const auto t = train_split(6);
  const auto fixed = rough_params(t.f.table.activities, {"body_movement", "body_translation"});
  const std::vector<double> bad{1.5};
  EXPECT_THROW(robustness_sweep(t.f.table, t.scored, &t.setup, Method::Wa, SweepAxis::Weight, 0, bad, fixed),
               ValidationError);
  EXPECT_THROW(parse_axis("speed"), ValidationError);
}

TEST(Pipeline, TrainingIsDeterministicAcrossWorkers) {
  auto f = make_fixture(fixtures::small_synthetic(6), 8);
  const auto a = train_model_bank(f.table, f.rows, f.cfg, 1);
  const auto b = train_model_bank(f.table, f.rows, f.cfg, 3);
  EXPECT_EQ(a.models, b.models);
  EXPECT_EQ(a.priors, b.priors);
  double total = 0;
  for (const auto& [name, p] : a.priors) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Pipeline, LtsActivityAdaptedFromDonor) {
  auto f = make_fixture(fixtures::small_synthetic(6), 8);
  f.cfg.lts.push_back(LtsDeclaration{"running", {{"body_movement", "walking"}, {"body_translation", "walking"}}, 1.0});
  const auto bank = train_model_bank(f.table, f.rows, f.cfg);
  // alpha = 1 keeps the donor model exactly.
  EXPECT_EQ(bank.model("running", "body_movement"), bank.model("walking", "body_movement"));
  EXPECT_EQ(bank.model("running", "body_translation"), bank.model("walking", "body_translation"));
}

TEST(Pipeline, ExtensionKeepsExistingModels) {
  auto f = make_fixture(fixtures::small_synthetic(6), 8);
  const auto base = train_model_bank(f.table, f.rows, f.cfg);
  TrainingConfig ext = f.cfg;
  ext.schema = extend_schema(f.cfg.schema, body_ratio_category());
  const auto bank = extend_model_bank(base, f.table, f.rows, ext);
  for (const auto& [key, model] : base.models) EXPECT_EQ(bank.models.at(key), model);
  EXPECT_EQ(bank.models.size(), base.models.size() + f.table.activities.size());
  TrainingConfig reordered = f.cfg;
  std::swap(reordered.schema.categories[0], reordered.schema.categories[1]);
  EXPECT_THROW(extend_model_bank(base, f.table, f.rows, reordered), ValidationError);
}

TEST(Pipeline, SingleCategoryMethodsAgree) {
  auto f = make_fixture(fixtures::small_synthetic(6), 12);
  f.cfg.schema = CfvSchema{{{"only", {"f_avg_spd", "f_c_mb_wd"}}}, 1};
  const auto bank = train_model_bank(f.table, f.rows, f.cfg);
  const auto scored = score_frames(bank, f.table, f.rows);
  const auto p = rough_params(f.table.activities, {"only"});
  const auto map = recognize_single_category(scored, 0);
  EXPECT_EQ(recognize_wa(scored, p), map);
  EXPECT_EQ(recognize_wm(scored, p), map);
}
