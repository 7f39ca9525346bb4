// actrec command-line front end. Each subcommand wraps library operations;
// `run` executes a whole experiment from a JSON config.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "actrec/experiment.hpp"

namespace fs = std::filesystem;
using namespace actrec;

namespace {

LabeledTrackSet read_tracks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot open '" + path + "'");
  return parse_canonical_csv(in);
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_text_file(path, content);
  }
}

std::vector<std::string> category_names(const CfvSchema& s) {
  std::vector<std::string> out;
  for (const auto& c : s.categories) out.push_back(c.name);
  return out;
}

CfvSchema schema_or_default(const std::string& path) {
  return path.empty() ? default_schema() : schema_from_json(read_json_file(path));
}

FusionParams params_or_rough(const std::string& path, const FeatureTable& table, const CfvSchema& schema) {
  if (path.empty() || path == "rough") return rough_params(table.activities, category_names(schema));
  auto p = fusion_params_from_json(read_json_file(path));
  if (p.activities != table.activities) throw ValidationError("fusion parameters list different activities");
  return p;
}

// Parses "activity[:donor[:alpha]]".
LtsDeclaration parse_lts(const std::string& text) {
  LtsDeclaration d;
  std::stringstream ss(text);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.empty() || parts.size() > 3) throw ValidationError("--lts expects activity[:donor[:alpha]]");
  d.activity = parts[0];
  if (parts.size() > 1 && !parts[1].empty() && parts[1] != "auto") d.donors["*"] = parts[1];
  if (parts.size() > 2) d.alpha = parse_double(parts[2], "--lts alpha");
  return d;
}

std::vector<std::size_t> all_rows(const FeatureTable& t) {
  std::vector<std::size_t> r(t.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Activity recognition with confident-frame fusion"};
  app.require_subcommand(1);
  std::size_t workers = default_worker_count();
  app.add_option("--workers", workers, "Worker threads (results do not depend on this)")->check(CLI::PositiveNumber);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Convert track annotations to canonical CSV");
  std::string in_format = "caviar-xml";
  std::vector<std::string> ingest_inputs;
  std::string labels_path, ingest_out;
  ingest->add_option("--format", in_format, "caviar-xml or canonical-csv")->check(CLI::IsMember({"caviar-xml", "canonical-csv"}));
  ingest->add_option("inputs", ingest_inputs, "Input files")->required()->check(CLI::ExistingFile);
  ingest->add_option("--labels", labels_path, "JSON label mapping {movement:{}, situation:{}}")->check(CLI::ExistingFile);
  ingest->add_option("-o,--output", ingest_out, "Output CSV (default stdout)");

  // features
  auto* features = app.add_subcommand("features", "Per-frame feature dump");
  std::string feat_in, feat_out;
  int window_k = 4;
  features->add_option("input", feat_in, "Canonical CSV")->required()->check(CLI::ExistingFile);
  features->add_option("-k,--window", window_k, "Half window k")->check(CLI::PositiveNumber);
  features->add_option("-o,--output", feat_out, "Output CSV (default stdout)");

  // schema
  auto* schema_cmd = app.add_subcommand("schema", "Group features into CFV categories");
  std::string schema_in, schema_out;
  std::optional<double> tau;
  std::optional<std::size_t> clusters;
  bool show_matrix = false;
  schema_cmd->add_option("input", schema_in, "Labeled canonical CSV")->required()->check(CLI::ExistingFile);
  schema_cmd->add_option("--tau", tau, "Complete-linkage distance threshold");
  schema_cmd->add_option("--clusters", clusters, "Target number of categories");
  schema_cmd->add_flag("--matrix", show_matrix, "Print the feature distance matrix to stderr");
  schema_cmd->add_option("-k,--window", window_k, "Half window k")->check(CLI::PositiveNumber);
  schema_cmd->add_option("-o,--output", schema_out, "Output schema JSON (default stdout)");

  // train
  auto* train = app.add_subcommand("train", "Train a model bank");
  std::string train_in, train_schema, train_out, base_bank;
  std::size_t components = 3;
  bool bic = false, uniform = false;
  std::uint64_t seed = 0;
  std::vector<std::string> lts_specs;
  train->add_option("input", train_in, "Labeled canonical CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--schema", train_schema, "Schema JSON (default: bt/bm)")->check(CLI::ExistingFile);
  train->add_option("-M,--components", components, "Mixture components")->check(CLI::PositiveNumber);
  train->add_flag("--bic", bic, "Choose components up to M by BIC");
  train->add_flag("--uniform-priors", uniform, "Uniform activity priors");
  train->add_option("--seed", seed, "EM seed");
  train->add_option("--lts", lts_specs, "LTS activity as activity[:donor[:alpha]]");
  train->add_option("--base", base_bank, "Existing bank to extend; its models are kept as-is")->check(CLI::ExistingFile);
  train->add_option("-k,--window", window_k, "Half window k")->check(CLI::PositiveNumber);
  train->add_option("-o,--output", train_out, "Output bank JSON")->required();

  // adapt
  auto* adapt = app.add_subcommand("adapt", "Add an LTS activity to a bank by MAP adaptation");
  std::string adapt_bank, adapt_in, adapt_activity, adapt_donor, adapt_out;
  double alpha = 0.5;
  adapt->add_option("--bank", adapt_bank, "Model bank JSON")->required()->check(CLI::ExistingFile);
  adapt->add_option("input", adapt_in, "Canonical CSV with the LTS frames")->required()->check(CLI::ExistingFile);
  adapt->add_option("--activity", adapt_activity, "LTS activity label")->required();
  adapt->add_option("--donor", adapt_donor, "Donor activity (default: most likely)");
  adapt->add_option("--alpha", alpha, "Adaptation weight")->check(CLI::Range(0.0, 1.0));
  adapt->add_option("-k,--window", window_k, "Half window k")->check(CLI::PositiveNumber);
  adapt->add_option("-o,--output", adapt_out, "Output bank JSON")->required();

  // recognize
  auto* recognize = app.add_subcommand("recognize", "Label frames with a trained bank");
  std::string rec_bank, rec_in, rec_method = "cfr", rec_params, rec_reference, rec_out;
  recognize->add_option("--bank", rec_bank, "Model bank JSON")->required()->check(CLI::ExistingFile);
  recognize->add_option("input", rec_in, "Canonical CSV to label")->required()->check(CLI::ExistingFile);
  recognize->add_option("--method", rec_method, "wa, wm or cfr")->check(CLI::IsMember({"wa", "wm", "cfr"}));
  recognize->add_option("--params", rec_params, "Fusion params JSON or 'rough'");
  recognize->add_option("--reference", rec_reference, "Labeled training CSV for CFR similarity statistics")
      ->check(CLI::ExistingFile);
  recognize->add_option("-k,--window", window_k, "Half window k")->check(CLI::PositiveNumber);
  recognize->add_option("-o,--output", rec_out, "Decision log CSV (default stdout)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a decision log against ground truth");
  std::string eval_dec, eval_truth, eval_out, eval_csv;
  evaluate->add_option("decisions", eval_dec, "Decision or label log CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--truth", eval_truth, "Labeled canonical CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("-o,--output", eval_out, "Report JSON (default stdout)");
  evaluate->add_option("--table", eval_csv, "Also write the report table CSV here");

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "Select fusion parameters by k-fold cross-validation");
  std::string cv_in, cv_schema, cv_method = "cfr", cv_strategy = "coordinate-wise", cv_out;
  std::size_t folds = 5;
  cv_cmd->add_option("input", cv_in, "Labeled canonical CSV")->required()->check(CLI::ExistingFile);
  cv_cmd->add_option("--schema", cv_schema, "Schema JSON")->check(CLI::ExistingFile);
  cv_cmd->add_option("--method", cv_method, "wa, wm or cfr")->check(CLI::IsMember({"wa", "wm", "cfr"}));
  cv_cmd->add_option("--folds", folds, "Fold count")->check(CLI::Range(2, 100));
  cv_cmd->add_option("--strategy", cv_strategy, "full or coordinate-wise")
      ->check(CLI::IsMember({"full", "coordinate-wise"}));
  cv_cmd->add_option("-M,--components", components, "Mixture components")->check(CLI::PositiveNumber);
  cv_cmd->add_option("--seed", seed, "Fold and EM seed");
  cv_cmd->add_option("-k,--window", window_k, "Half window k")->check(CLI::PositiveNumber);
  cv_cmd->add_option("-o,--output", cv_out, "Output params JSON (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Vary one activity's weight or threshold");
  std::string sw_train, sw_test, sw_bank, sw_method = "cfr", sw_axis = "weight", sw_activity, sw_params, sw_out;
  std::vector<double> sw_values;
  sweep->add_option("--bank", sw_bank, "Model bank JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--train", sw_train, "Labeled training CSV (CFR similarity statistics)")->check(CLI::ExistingFile);
  sweep->add_option("input", sw_test, "Labeled test CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--method", sw_method, "wa, wm or cfr")->check(CLI::IsMember({"wa", "wm", "cfr"}));
  sweep->add_option("--axis", sw_axis, "weight or threshold")->check(CLI::IsMember({"weight", "threshold"}));
  sweep->add_option("--activity", sw_activity, "Activity whose parameter varies")->required();
  sweep->add_option("--values", sw_values, "Sweep values (default 0.1..0.9 or 0.5..0.95)");
  sweep->add_option("--params", sw_params, "Fixed params JSON or 'rough'");
  sweep->add_option("-k,--window", window_k, "Half window k")->check(CLI::PositiveNumber);
  sweep->add_option("-o,--output", sw_out, "Curve CSV (default stdout)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark as canonical CSV");
  std::string synth_cfg, synth_out;
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--config", synth_cfg, "JSON overrides of the standard scenario")->check(CLI::ExistingFile);
  synth->add_option("-o,--output", synth_out, "Output CSV (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "Run a full experiment from a config file");
  std::string run_cfg, run_out;
  std::optional<std::uint64_t> run_seed;
  run->add_option("config", run_cfg, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", run_out, "Override the output directory");
  run->add_option("--seed", run_seed, "Override the seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      CaviarLabelMap labels = CaviarLabelMap::standard();
      if (!labels_path.empty()) labels = caviar_labels_from_json(read_json_file(labels_path));
      DatasetSpec spec;
      spec.format = in_format;
      for (const auto& p : ingest_inputs) spec.paths.emplace_back(p);
      spec.labels = labels;
      emit(ingest_out, to_canonical_csv(load_dataset(spec, 0)));
    } else if (*features) {
      const auto set = read_tracks(feat_in);
      const auto table = build_feature_table(set, window_k);
      std::vector<std::optional<ActivityId>> labels;
      for (const auto& l : table.labels) labels.push_back(l ? std::optional(table.activities[*l]) : std::nullopt);
      std::ostringstream out;
      write_feature_csv(out, table.frames, labels);
      emit(feat_out, out.str());
    } else if (*schema_cmd) {
      if (tau.has_value() == clusters.has_value()) throw ValidationError("give exactly one of --tau or --clusters");
      const auto table = build_feature_table(read_tracks(schema_in), window_k);
      const auto rows = table.labeled_rows();
      const auto matrix = feature_distance_matrix(table_feature_stats(table, rows), base_feature_ids());
      if (show_matrix) {
        for (std::size_t i = 0; i < matrix.size(); ++i) {
          std::cerr << matrix.features[i];
          for (std::size_t j = 0; j < matrix.size(); ++j) std::cerr << ',' << format_double(matrix(i, j));
          std::cerr << '\n';
        }
      }
      const auto schema = tau ? cluster_features_into_cfvs(matrix, ThresholdPolicy{*tau})
                              : cluster_features_into_cfvs(matrix, CountPolicy{*clusters});
      emit(schema_out, dump_document(schema_to_json(schema)));
    } else if (*train) {
      const auto set = read_tracks(train_in);
      TrainingConfig cfg;
      cfg.schema = schema_or_default(train_schema);
      cfg.components = components;
      cfg.select_components_by_bic = bic;
      cfg.uniform_priors = uniform;
      cfg.em.seed = seed;
      for (const auto& s : lts_specs) cfg.lts.push_back(parse_lts(s));
      cfg.lts = expand_lts(cfg.lts, cfg.schema);
      if (!base_bank.empty()) {
        const auto base = bank_from_json(read_json_file(base_bank));
        auto ordered = set;
        order_activities(ordered, base.activities);
        const auto table = build_feature_table(ordered, window_k);
        emit(train_out, dump_document(bank_to_json(extend_model_bank(base, table, table.labeled_rows(), cfg, workers))));
      } else {
        const auto table = build_feature_table(set, window_k);
        emit(train_out, dump_document(bank_to_json(train_model_bank(table, table.labeled_rows(), cfg, workers))));
      }
    } else if (*adapt) {
      auto bank = bank_from_json(read_json_file(adapt_bank));
      const auto table = build_feature_table(read_tracks(adapt_in), window_k);
      auto it = std::find(table.activities.begin(), table.activities.end(), adapt_activity);
      if (it == table.activities.end()) throw LookupError("no frames labeled '" + adapt_activity + "'");
      const auto a = static_cast<std::size_t>(it - table.activities.begin());
      std::vector<std::size_t> rows;
      for (std::size_t r = 0; r < table.size(); ++r) {
        if (table.labels[r] == a) rows.push_back(r);
      }
      LtsDeclaration lts{adapt_activity, {}, alpha};
      if (!adapt_donor.empty()) {
        for (const auto& c : bank.schema.categories) lts.donors[c.name] = adapt_donor;
      }
      add_lts_activity(bank, table, rows, lts, EmConfig{});
      emit(adapt_out, dump_document(bank_to_json(bank)));
    } else if (*recognize) {
      const auto bank = bank_from_json(read_json_file(rec_bank));
      auto set = read_tracks(rec_in);
      order_activities(set, bank.activities);
      const auto table = build_feature_table(set, window_k);
      if (table.activities != bank.activities) throw ValidationError("input labels an activity the bank lacks");
      const auto rows = all_rows(table);
      const auto scored = score_frames(bank, table, rows, workers);
      const auto params = params_or_rough(rec_params, table, bank.schema);
      const auto method = parse_method(rec_method);
      if (method == Method::Cfr) {
        if (rec_reference.empty()) throw ValidationError("CFR needs --reference labeled training data");
        auto ref = read_tracks(rec_reference);
        order_activities(ref, bank.activities);
        const auto ref_table = build_feature_table(ref, window_k);
        const auto setup = make_cfr_setup(ref_table, ref_table.labeled_rows(), bank.schema);
        emit(rec_out, decision_log_csv(recognize_cfr(scored, table, params, setup), table.activities));
      } else {
        emit(rec_out, label_log_csv(table, rows, predict(method, scored, table, params, nullptr)));
      }
    } else if (*evaluate) {
      auto truth_set = read_tracks(eval_truth);
      const auto table = build_feature_table(truth_set, 1);
      std::map<std::pair<ObjectId, FrameIndex>, std::size_t> row_of;
      for (std::size_t r = 0; r < table.size(); ++r) row_of[{table.frames[r].object, table.frames[r].frame}] = r;
      std::istringstream in(read_text_file(eval_dec));
      std::string line;
      std::getline(in, line);
      std::vector<std::pair<std::size_t, std::size_t>> matched;
      std::size_t line_no = 1;
      while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_fields(line);
        if (f.size() < 3) throw ParseError("decision log line " + std::to_string(line_no) + ": too few fields");
        const auto key = std::make_pair(std::string(f[0]), static_cast<FrameIndex>(parse_integer(f[1], "frame")));
        auto it = row_of.find(key);
        if (it == row_of.end()) throw LookupError("decision for unknown frame on line " + std::to_string(line_no));
        auto a = std::find(table.activities.begin(), table.activities.end(), std::string(f[2]));
        if (a == table.activities.end()) throw LookupError("unknown label '" + std::string(f[2]) + "'");
        matched.emplace_back(it->second, static_cast<std::size_t>(a - table.activities.begin()));
      }
      std::sort(matched.begin(), matched.end());
      std::vector<std::size_t> rows, pred;
      for (const auto& [r, p] : matched) {
        rows.push_back(r);
        pred.push_back(p);
      }
      const auto report = evaluate_predictions(table, rows, pred);
      emit(eval_out, dump_document(method_report_json("decisions", report)));
      if (!eval_csv.empty()) write_text_file(eval_csv, report_table_csv({{"decisions", report}}));
    } else if (*cv_cmd) {
      const auto table = build_feature_table(read_tracks(cv_in), window_k);
      TrainingConfig cfg;
      cfg.schema = schema_or_default(cv_schema);
      cfg.components = components;
      cfg.em.seed = seed;
      ParamGrid grid;
      grid.strategy = parse_strategy(cv_strategy);
      const auto result =
          cross_validate(table, table.labeled_rows(), cfg, grid, parse_method(cv_method), folds, seed, workers);
      std::cerr << "mean validation TFER " << format_double(result.mean_tfer) << " over " << result.evaluations
                << " candidates\n";
      emit(cv_out, dump_document(fusion_params_to_json(result.params)));
    } else if (*sweep) {
      const auto bank = bank_from_json(read_json_file(sw_bank));
      auto set = read_tracks(sw_test);
      order_activities(set, bank.activities);
      const auto table = build_feature_table(set, window_k);
      const auto rows = table.labeled_rows();
      const auto scored = score_frames(bank, table, rows, workers);
      const auto params = params_or_rough(sw_params, table, bank.schema);
      const auto method = parse_method(sw_method);
      const auto axis = parse_axis(sw_axis);
      if (sw_values.empty()) {
        sw_values = axis == SweepAxis::Weight ? stepped_values(0.1, 0.9, 0.1) : stepped_values(0.5, 0.95, 0.05);
      }
      std::optional<CfrSetup> setup;
      if (method == Method::Cfr) {
        if (sw_train.empty()) throw ValidationError("a CFR sweep needs --train labeled data");
        auto ref = read_tracks(sw_train);
        order_activities(ref, bank.activities);
        const auto ref_table = build_feature_table(ref, window_k);
        setup = make_cfr_setup(ref_table, ref_table.labeled_rows(), bank.schema);
      }
      const auto activity = bank.activity_index(sw_activity);
      const auto curve = robustness_sweep(table, scored, setup ? &*setup : nullptr, method, axis, activity, sw_values,
                                          params, workers);
      emit(sw_out, sweep_curve_csv(curve, activity));
    } else if (*synth) {
      auto cfg = standard_synthetic_config();
      if (!synth_cfg.empty()) cfg = synthetic_config_from_json(read_json_file(synth_cfg));
      emit(synth_out, to_canonical_csv(generate_synthetic_tracks(cfg, seed)));
    } else if (*run) {
      auto cfg = load_experiment_config(run_cfg);
      if (!run_out.empty()) cfg.output_dir = run_out;
      if (run_seed) cfg.seed = *run_seed;
      const auto report = run_experiment(cfg, workers);
      for (const auto& m : report.summary.at("methods")) {
        std::cout << m.at("method").get<std::string>() << " mean TFER "
                  << format_double(m.at("mean_tfer").get<double>()) << '\n';
      }
      std::cout << "outputs in " << report.output_dir.string() << '\n';
    }
  } catch (const StageError& e) {
    std::cerr << "error in stage '" << e.stage() << "': " << e.cause() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
