#pragma once

// Experiment configuration and the end-to-end runner behind the `run`
// subcommand: ingest, features, schema, train (with LTS adaptation),
// parameter selection, recognition and evaluation over repeated 50/50 clip
// holdouts. Outputs land in models/, decisions/ and reports/ under the output
// directory; reports/status.json records success or the failing stage.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "actrec/cfr.hpp"
#include "actrec/cfv.hpp"
#include "actrec/dataset.hpp"
#include "actrec/error.hpp"
#include "actrec/io.hpp"
#include "actrec/pipeline.hpp"
#include "actrec/tuning.hpp"

namespace actrec {

namespace fs = std::filesystem;

inline constexpr const char* kOutputDirEnv = "ACTREC_OUTPUT_DIR";

// An error tagged with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)), cause_(cause) {}
  const std::string& stage() const { return stage_; }
  const std::string& cause() const { return cause_; }

 private:
  std::string stage_;
  std::string cause_;
};

// ---------------------------------------------------------------------------
// Configuration

struct DatasetSpec {
  std::string format = "synthetic";  // synthetic | canonical-csv | caviar-xml
  std::vector<fs::path> paths;
  CaviarLabelMap labels = CaviarLabelMap::standard();
  std::vector<ActivityId> activities;  // optional declared order
  SyntheticConfig synthetic = standard_synthetic_config();
};

struct SchemaSpec {
  std::string policy = "default";  // default | cluster | explicit | file | base
  std::optional<double> tau;
  std::optional<std::size_t> clusters;
  std::vector<CfvCategory> categories;
  fs::path path;
  std::vector<CfvCategory> extra;  // appended after the policy's categories
};

struct ParamsSpec {
  std::string source = "cross-validate";  // cross-validate | rough | file
  fs::path path;
  std::size_t folds = 5;
  ParamGrid grid;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  int window_k = 4;
  SchemaSpec schema;
  TrainingConfig training;
  std::vector<Method> methods{Method::Wa, Method::Wm, Method::Ei, Method::Cfr};
  ParamsSpec params;
  std::optional<MdpfParams> mdpf;  // r, n and k_j; feature weights always 1/sigma
  std::map<ActivityId, std::size_t> training_frame_limits;
  std::size_t repeats = 1;
  fs::path base_model_bank;
  std::uint64_t seed = 0;
  fs::path output_dir = "actrec_out";
};

// Sub-seeds for each consumer of randomness, all derived from the one
// experiment seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0) {
  std::uint64_t z = seed ^ stable_hash(purpose) ^ (index * 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_opt(const Json& obj, const char* key, T& out, const std::string& where) {
  if (obj.contains(key)) out = get_field<T>(obj, key, where);
}

inline DriverProfile driver_from_json(const Json& j, const std::string& where) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw ParseError(where + ": expected [mean, sigma]");
  return DriverProfile{v[0], v[1]};
}

inline std::vector<CfvCategory> categories_from_json(const Json& arr, const std::string& where) {
  std::vector<CfvCategory> out;
  if (!arr.is_array()) throw ParseError(where + ": expected an array of categories");
  for (const auto& c : arr) {
    check_keys(c, {"name", "features"}, where);
    out.push_back(CfvCategory{get_field<std::string>(c, "name", where),
                              get_field<std::vector<std::string>>(c, "features", where)});
  }
  return out;
}

inline fs::path resolve_path(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

// Applies overrides to `base`. "activities" replaces the profile list,
// "only_activities" keeps a subset in the listed order.
inline SyntheticConfig synthetic_config_from_json(const Json& j, SyntheticConfig c = standard_synthetic_config()) {
  const std::string where = "dataset.synthetic";
  detail::check_keys(j,
                     {"preset", "activities", "only_activities", "individual_offset_scale", "offset_correlation",
                      "within_clip_drift", "drift_correlation", "frame_noise_scale", "clip_length_range",
                      "clips_per_activity", "clips_per_object", "base_width", "base_height", "scene_width",
                      "scene_height"},
                     where);
  if (j.contains("preset") && j.at("preset") != "standard") throw ParseError(where + ": unknown preset");
  if (j.contains("activities")) {
    c.activities.clear();
    for (const auto& a : j.at("activities")) {
      detail::check_keys(a, {"name", "speed", "heading_jitter", "width_change", "height_change", "frequency"},
                         where + ".activities");
      ActivityProfile p;
      p.name = detail::get_field<std::string>(a, "name", where);
      p.speed = detail::driver_from_json(a.at("speed"), where);
      p.heading_jitter = detail::driver_from_json(a.at("heading_jitter"), where);
      p.width_change = detail::driver_from_json(a.at("width_change"), where);
      p.height_change = detail::driver_from_json(a.at("height_change"), where);
      detail::read_opt(a, "frequency", p.frequency, where);
      c.activities.push_back(p);
    }
  }
  if (j.contains("only_activities")) {
    std::vector<ActivityProfile> kept;
    for (const auto& name : j.at("only_activities").get<std::vector<std::string>>()) {
      auto it = std::find_if(c.activities.begin(), c.activities.end(), [&](const auto& p) { return p.name == name; });
      if (it == c.activities.end()) throw ValidationError(where + ": unknown activity '" + name + "'");
      kept.push_back(*it);
    }
    c.activities = kept;
  }
  detail::read_opt(j, "individual_offset_scale", c.individual_offset_scale, where);
  detail::read_opt(j, "offset_correlation", c.offset_correlation, where);
  detail::read_opt(j, "within_clip_drift", c.within_clip_drift, where);
  detail::read_opt(j, "drift_correlation", c.drift_correlation, where);
  detail::read_opt(j, "frame_noise_scale", c.frame_noise_scale, where);
  detail::read_opt(j, "clip_length_range", c.clip_length_range, where);
  detail::read_opt(j, "clips_per_activity", c.clips_per_activity, where);
  detail::read_opt(j, "clips_per_object", c.clips_per_object, where);
  detail::read_opt(j, "base_width", c.base_width, where);
  detail::read_opt(j, "base_height", c.base_height, where);
  detail::read_opt(j, "scene_width", c.scene_width, where);
  detail::read_opt(j, "scene_height", c.scene_height, where);
  c.validate();
  return c;
}

// `base_dir` anchors relative paths (normally the config file's directory).
inline ExperimentConfig experiment_config_from_json(const Json& doc, const fs::path& base_dir = {}) {
  ExperimentConfig cfg;
  detail::check_keys(doc,
                     {"seed", "output_dir", "dataset", "window_k", "schema", "gmm", "uniform_priors", "methods",
                      "fusion_params", "mdpf", "lts", "training_frame_limits", "protocol", "base_model_bank"},
                     "config");
  detail::read_opt(doc, "seed", cfg.seed, "config");
  if (doc.contains("output_dir")) {
    cfg.output_dir = detail::resolve_path(base_dir, detail::get_field<std::string>(doc, "output_dir", "config"));
  }
  detail::read_opt(doc, "window_k", cfg.window_k, "config");
  if (cfg.window_k < 1) throw ValidationError("config: window_k must be >= 1");

  if (doc.contains("dataset")) {
    const auto& d = doc.at("dataset");
    detail::check_keys(d, {"format", "paths", "labels", "activities", "synthetic"}, "dataset");
    detail::read_opt(d, "format", cfg.dataset.format, "dataset");
    if (d.contains("paths")) {
      for (const auto& p : d.at("paths").get<std::vector<std::string>>()) {
        cfg.dataset.paths.push_back(detail::resolve_path(base_dir, p));
      }
    }
    if (d.contains("labels")) {
      detail::check_keys(d.at("labels"), {"movement", "situation"}, "dataset.labels");
      cfg.dataset.labels = caviar_labels_from_json(d.at("labels"));
    }
    detail::read_opt(d, "activities", cfg.dataset.activities, "dataset");
    if (d.contains("synthetic")) cfg.dataset.synthetic = synthetic_config_from_json(d.at("synthetic"));
  }
  const auto& fmt = cfg.dataset.format;
  if (fmt != "synthetic" && fmt != "canonical-csv" && fmt != "caviar-xml") {
    throw ValidationError("dataset: unknown format '" + fmt + "'");
  }
  if (fmt != "synthetic" && cfg.dataset.paths.empty()) throw ValidationError("dataset: no input paths");

  if (doc.contains("schema")) {
    const auto& s = doc.at("schema");
    detail::check_keys(s, {"policy", "tau", "clusters", "categories", "path", "extra_categories"}, "schema");
    detail::read_opt(s, "policy", cfg.schema.policy, "schema");
    if (s.contains("tau")) cfg.schema.tau = detail::get_field<double>(s, "tau", "schema");
    if (s.contains("clusters")) cfg.schema.clusters = detail::get_field<std::size_t>(s, "clusters", "schema");
    if (s.contains("categories")) cfg.schema.categories = detail::categories_from_json(s.at("categories"), "schema");
    if (s.contains("path")) cfg.schema.path = detail::resolve_path(base_dir, s.at("path").get<std::string>());
    if (s.contains("extra_categories")) {
      cfg.schema.extra = detail::categories_from_json(s.at("extra_categories"), "schema.extra_categories");
    }
  }
  const auto& pol = cfg.schema.policy;
  if (pol == "cluster" && cfg.schema.tau.has_value() == cfg.schema.clusters.has_value()) {
    throw ValidationError("schema: the cluster policy needs exactly one of tau or clusters");
  }
  if (pol == "explicit" && cfg.schema.categories.empty()) throw ValidationError("schema: no explicit categories");
  if (pol == "file" && cfg.schema.path.empty()) throw ValidationError("schema: the file policy needs a path");
  if (pol != "default" && pol != "cluster" && pol != "explicit" && pol != "file" && pol != "base") {
    throw ValidationError("schema: unknown policy '" + pol + "'");
  }

  if (doc.contains("gmm")) {
    const auto& g = doc.at("gmm");
    detail::check_keys(g, {"components", "select_by_bic", "max_iterations", "rel_tolerance", "variance_floor_factor",
                           "init"},
                       "gmm");
    detail::read_opt(g, "components", cfg.training.components, "gmm");
    detail::read_opt(g, "select_by_bic", cfg.training.select_components_by_bic, "gmm");
    detail::read_opt(g, "max_iterations", cfg.training.em.max_iterations, "gmm");
    detail::read_opt(g, "rel_tolerance", cfg.training.em.rel_tolerance, "gmm");
    detail::read_opt(g, "variance_floor_factor", cfg.training.em.variance_floor_factor, "gmm");
    if (g.contains("init")) {
      const auto init = g.at("init").get<std::string>();
      if (init == "kmeans") {
        cfg.training.em.init = EmInit::KMeansSeeding;
      } else if (init == "random") {
        cfg.training.em.init = EmInit::RandomResponsibility;
      } else {
        throw ValidationError("gmm: unknown init '" + init + "'");
      }
    }
  }
  if (cfg.training.components < 1) throw ValidationError("gmm: components must be >= 1");
  cfg.training.em.validate();
  detail::read_opt(doc, "uniform_priors", cfg.training.uniform_priors, "config");

  if (doc.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : doc.at("methods").get<std::vector<std::string>>()) cfg.methods.push_back(parse_method(m));
    if (cfg.methods.empty()) throw ValidationError("config: methods must not be empty");
  }

  if (doc.contains("fusion_params")) {
    const auto& f = doc.at("fusion_params");
    detail::check_keys(f, {"source", "path", "folds", "strategy", "weights", "thresholds", "max_full_candidates"},
                       "fusion_params");
    detail::read_opt(f, "source", cfg.params.source, "fusion_params");
    if (f.contains("path")) cfg.params.path = detail::resolve_path(base_dir, f.at("path").get<std::string>());
    detail::read_opt(f, "folds", cfg.params.folds, "fusion_params");
    if (f.contains("strategy")) cfg.params.grid.strategy = parse_strategy(f.at("strategy").get<std::string>());
    detail::read_opt(f, "weights", cfg.params.grid.weights, "fusion_params");
    detail::read_opt(f, "thresholds", cfg.params.grid.thresholds, "fusion_params");
    detail::read_opt(f, "max_full_candidates", cfg.params.grid.max_full_candidates, "fusion_params");
  }
  const auto& src = cfg.params.source;
  if (src != "cross-validate" && src != "rough" && src != "file") {
    throw ValidationError("fusion_params: unknown source '" + src + "'");
  }
  if (src == "file" && cfg.params.path.empty()) throw ValidationError("fusion_params: the file source needs a path");
  if (src == "cross-validate" && cfg.params.folds < 2) throw ValidationError("fusion_params: folds must be >= 2");
  cfg.params.grid.validate();

  if (doc.contains("mdpf")) {
    const auto& m = doc.at("mdpf");
    detail::check_keys(m, {"r", "n", "category_weights"}, "mdpf");
    MdpfParams p;
    detail::read_opt(m, "r", p.r, "mdpf");
    detail::read_opt(m, "n", p.n, "mdpf");
    detail::read_opt(m, "category_weights", p.category_weights, "mdpf");
    if (!(p.r >= 1.0)) throw ValidationError("mdpf: r must be >= 1");
    cfg.mdpf = p;
  }

  if (doc.contains("lts")) {
    for (const auto& l : doc.at("lts")) {
      detail::check_keys(l, {"activity", "donor", "donors", "alpha"}, "lts");
      LtsDeclaration d;
      d.activity = detail::get_field<std::string>(l, "activity", "lts");
      detail::read_opt(l, "alpha", d.alpha, "lts");
      if (!(d.alpha >= 0.0 && d.alpha <= 1.0)) throw ValidationError("lts: alpha must lie in [0, 1]");
      if (l.contains("donor") && l.at("donor") != "auto") {
        // One donor for every category; resolved once the schema is known.
        d.donors["*"] = l.at("donor").get<std::string>();
      }
      if (l.contains("donors")) {
        for (const auto& [cat, donor] : l.at("donors").items()) d.donors[cat] = donor.get<std::string>();
      }
      cfg.training.lts.push_back(d);
    }
  }
  detail::read_opt(doc, "training_frame_limits", cfg.training_frame_limits, "config");

  if (doc.contains("protocol")) {
    const auto& p = doc.at("protocol");
    detail::check_keys(p, {"repeats"}, "protocol");
    detail::read_opt(p, "repeats", cfg.repeats, "protocol");
    if (cfg.repeats < 1) throw ValidationError("protocol: repeats must be >= 1");
  }
  if (doc.contains("base_model_bank")) {
    cfg.base_model_bank = detail::resolve_path(base_dir, doc.at("base_model_bank").get<std::string>());
  }

  // Referenced files must exist now, not halfway through a run.
  auto require = [](const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) throw LookupError(what + " '" + p.string() + "' does not exist");
  };
  for (const auto& p : cfg.dataset.paths) require(p, "dataset file");
  if (!cfg.schema.path.empty()) require(cfg.schema.path, "schema file");
  if (!cfg.params.path.empty()) require(cfg.params.path, "fusion parameter file");
  if (!cfg.base_model_bank.empty()) require(cfg.base_model_bank, "base model bank");
  if (pol == "base" && cfg.base_model_bank.empty()) throw ValidationError("schema: the base policy needs base_model_bank");

  // LTS activities must be reachable through the label mapping.
  std::set<ActivityId> known(cfg.dataset.activities.begin(), cfg.dataset.activities.end());
  if (fmt == "synthetic") {
    for (const auto& p : cfg.dataset.synthetic.activities) known.insert(p.name);
  } else if (fmt == "caviar-xml") {
    for (const auto& [k, v] : cfg.dataset.labels.movement) known.insert(v);
    for (const auto& [k, v] : cfg.dataset.labels.situation) known.insert(v);
  }
  for (const auto& l : cfg.training.lts) {
    if (!known.empty() && !known.count(l.activity)) {
      throw ValidationError("lts activity '" + l.activity + "' is not in the label mapping");
    }
  }
  return cfg;
}

// ACTREC_OUTPUT_DIR, when set, replaces the configured output directory.
inline ExperimentConfig load_experiment_config(const fs::path& path) {
  auto cfg = experiment_config_from_json(read_json_file(path), path.parent_path());
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) cfg.output_dir = env;
  return cfg;
}

// ---------------------------------------------------------------------------
// Stages

inline LabeledTrackSet load_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  LabeledTrackSet set;
  if (spec.format == "synthetic") {
    set = generate_synthetic_tracks(spec.synthetic, seed);
  } else {
    std::vector<TrackedFrame> frames;
    std::vector<ActivityId> declared = spec.activities;
    for (std::size_t i = 0; i < spec.paths.size(); ++i) {
      std::ifstream in(spec.paths[i], std::ios::binary);
      if (!in) throw LookupError("cannot open '" + spec.paths[i].string() + "'");
      auto part = spec.format == "canonical-csv" ? parse_canonical_csv(in) : parse_caviar_xml(in, spec.labels);
      for (const auto& a : part.activities) {
        if (std::find(declared.begin(), declared.end(), a) == declared.end()) declared.push_back(a);
      }
      // Several files may reuse object ids; keep them apart.
      for (auto& t : part.tracks) {
        for (auto& f : t.frames) {
          if (spec.paths.size() > 1) f.object = std::to_string(i + 1) + ":" + f.object;
          frames.push_back(std::move(f));
        }
      }
    }
    set = assemble_track_set(std::move(frames), declared);
  }
  if (!spec.activities.empty()) {
    for (const auto& a : set.activities) {
      if (std::find(spec.activities.begin(), spec.activities.end(), a) == spec.activities.end()) {
        throw ValidationError("label '" + a + "' is not among the declared activities");
      }
    }
    set.activities = spec.activities;
  }
  validate(set);
  return set;
}

// Moves `first` to the front of the activity list, keeping the rest in order.
inline void order_activities(LabeledTrackSet& set, const std::vector<ActivityId>& first) {
  std::vector<ActivityId> out = first;
  for (const auto& a : set.activities) {
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  set.activities = out;
}

inline CfvSchema resolve_schema(const SchemaSpec& spec, const FeatureTable& table,
                                std::span<const std::size_t> train_rows, const ModelBank* base) {
  CfvSchema schema;
  if (spec.policy == "default") {
    schema = default_schema();
  } else if (spec.policy == "explicit") {
    schema.categories = spec.categories;
  } else if (spec.policy == "file") {
    schema = schema_from_json(read_json_file(spec.path));
  } else if (spec.policy == "base") {
    schema = base->schema;
  } else {
    const auto stats = table_feature_stats(table, train_rows);
    const auto matrix = feature_distance_matrix(stats, base_feature_ids());
    schema = spec.tau ? cluster_features_into_cfvs(matrix, ThresholdPolicy{*spec.tau})
                      : cluster_features_into_cfvs(matrix, CountPolicy{*spec.clusters});
  }
  for (const auto& c : spec.extra) schema = extend_schema(schema, c);
  validate(schema);
  return schema;
}

// Keeps the first `limit` training rows of each capped activity.
inline std::vector<std::size_t> apply_frame_limits(const FeatureTable& table, std::span<const std::size_t> rows,
                                                   const std::map<ActivityId, std::size_t>& limits) {
  std::map<std::size_t, std::size_t> cap;
  for (const auto& [a, n] : limits) {
    auto it = std::find(table.activities.begin(), table.activities.end(), a);
    if (it == table.activities.end()) throw LookupError("frame limit for unknown activity '" + a + "'");
    cap[static_cast<std::size_t>(it - table.activities.begin())] = n;
  }
  std::map<std::size_t, std::size_t> used;
  std::vector<std::size_t> out;
  for (std::size_t r : rows) {
    if (table.labels[r]) {
      const auto a = *table.labels[r];
      if (auto it = cap.find(a); it != cap.end() && used[a]++ >= it->second) continue;
    }
    out.push_back(r);
  }
  return out;
}

// Expands a "*" donor entry to every category of `schema`.
inline std::vector<LtsDeclaration> expand_lts(const std::vector<LtsDeclaration>& lts, const CfvSchema& schema) {
  auto out = lts;
  for (auto& d : out) {
    if (auto it = d.donors.find("*"); it != d.donors.end()) {
      const auto donor = it->second;
      d.donors.erase(it);
      for (const auto& c : schema.categories) d.donors.emplace(c.name, donor);
    }
    for (const auto& entry : d.donors) schema.category_index(entry.first);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runner

struct MethodOutcome {
  Method method;
  std::string params_source;
  std::optional<CvResult> cv;
  MethodReport report;
};

struct RepeatOutcome {
  std::size_t repeat = 0;
  std::uint64_t split_seed = 0;
  std::size_t train_frames = 0;
  std::size_t test_frames = 0;
  std::vector<MethodOutcome> methods;
};

struct ExperimentReport {
  fs::path output_dir;
  std::vector<RepeatOutcome> repeats;
  Json summary;
  std::vector<fs::path> files;
};

namespace detail {

inline Json experiment_header(const ExperimentConfig& cfg) {
  Json h;
  h["format"] = "actrec.experiment_report";
  h["format_version"] = kFormatVersion;
  h["seed"] = cfg.seed;
  h["dataset_format"] = cfg.dataset.format;
  h["window_k"] = cfg.window_k;
  h["components"] = cfg.training.components;
  h["params_source"] = cfg.params.source;
  h["search_strategy"] = std::string(strategy_name(cfg.params.grid.strategy));
  h["repeats"] = cfg.repeats;
  return h;
}

// Mean of the defined values, null when none are.
inline Json mean_or_null(const std::vector<std::optional<double>>& v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : v) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  return n ? Json(sum / static_cast<double>(n)) : Json(nullptr);
}

inline Json summarize(const ExperimentConfig& cfg, const std::vector<RepeatOutcome>& repeats) {
  Json doc = experiment_header(cfg);
  doc["format"] = "actrec.experiment_summary";
  Json methods = Json::array();
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    Json row;
    row["method"] = std::string(method_name(cfg.methods[m]));
    std::vector<std::optional<double>> tfer;
    for (const auto& r : repeats) tfer.push_back(r.methods[m].report.frames.tfer);
    row["mean_tfer"] = mean_or_null(tfer);
    Json acts = Json::array();
    const auto& first = repeats.front().methods[m].report;
    for (std::size_t a = 0; a < first.frames.activities.size(); ++a) {
      std::vector<std::optional<double>> miss, fa, aer;
      for (const auto& r : repeats) {
        miss.push_back(r.methods[m].report.frames.activities[a].miss_rate);
        fa.push_back(r.methods[m].report.frames.activities[a].fa_rate);
        aer.push_back(r.methods[m].report.clips.activities[a].aer);
      }
      acts.push_back(Json{{"activity", first.frames.activities[a].activity},
                          {"mean_miss_rate", mean_or_null(miss)},
                          {"mean_fa_rate", mean_or_null(fa)},
                          {"mean_aer", mean_or_null(aer)}});
    }
    row["activities"] = acts;
    methods.push_back(row);
  }
  doc["methods"] = methods;
  return doc;
}

inline std::string summary_csv(const Json& summary) {
  std::ostringstream out;
  out << "method,activity,mean_miss_rate,mean_fa_rate,mean_aer,mean_tfer\n";
  auto text = [](const Json& v) { return v.is_null() ? std::string() : format_double(v.get<double>()); };
  for (const auto& m : summary.at("methods")) {
    const auto name = m.at("method").get<std::string>();
    for (const auto& a : m.at("activities")) {
      out << name << ',' << a.at("activity").get<std::string>() << ',' << text(a.at("mean_miss_rate")) << ','
          << text(a.at("mean_fa_rate")) << ',' << text(a.at("mean_aer")) << ",\n";
    }
    out << name << ",TOTAL,,,," << text(m.at("mean_tfer")) << '\n';
  }
  return out.str();
}

}  // namespace detail

// Runs every stage; on failure writes reports/status.json naming the stage
// and rethrows as StageError. Nothing in the outputs depends on `workers`.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg_in, std::size_t workers = 1) {
  ExperimentConfig cfg = cfg_in;
  ExperimentReport report;
  report.output_dir = cfg.output_dir;
  std::vector<std::string> done;
  std::string stage = "ingest";

  auto write = [&](const fs::path& rel, const std::string& content) {
    write_text_file(cfg.output_dir / rel, content);
    report.files.push_back(rel);
  };
  auto finish = [&](const std::string& status, const std::string& failed_stage, const std::string& cause) {
    Json s;
    s["format"] = "actrec.run_status";
    s["format_version"] = kFormatVersion;
    s["status"] = status;
    s["seed"] = cfg.seed;
    s["completed_stages"] = done;
    if (status != "ok") {
      s["failed_stage"] = failed_stage;
      s["cause"] = cause;
      s["partial_outputs"] = Json::array();
      for (const auto& f : report.files) s["partial_outputs"].push_back(f.generic_string());
    }
    write_text_file(cfg.output_dir / "reports" / "status.json", dump_document(s));
  };
  auto mark = [&](const std::string& next) {
    if (std::find(done.begin(), done.end(), stage) == done.end()) done.push_back(stage);
    stage = next;
  };

  try {
    std::optional<ModelBank> base;
    if (!cfg.base_model_bank.empty()) base = bank_from_json(read_json_file(cfg.base_model_bank));
    auto set = load_dataset(cfg.dataset, derive_seed(cfg.seed, "data"));
    if (base) order_activities(set, base->activities);
    mark("features");

    const auto table = build_feature_table(set, cfg.window_k);
    const auto labeled = table.labeled_rows();
    if (labeled.empty()) throw InsufficientDataError("dataset has no labeled frames");
    mark("schema");

    cfg.training.em.seed = derive_seed(cfg.seed, "em");
    std::optional<FusionParams> file_params;
    if (cfg.params.source == "file") file_params = fusion_params_from_json(read_json_file(cfg.params.path));

    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
      RepeatOutcome outcome;
      outcome.repeat = rep + 1;
      outcome.split_seed = derive_seed(cfg.seed, "split", rep);
      const auto dir = fs::path("repeat_" + std::to_string(rep + 1));

      stage = "schema";
      const auto parts = split_rows_by_clip(table, labeled, 2, outcome.split_seed);
      const auto train = apply_frame_limits(table, parts[0], cfg.training_frame_limits);
      const auto& test = parts[1];
      outcome.train_frames = train.size();
      outcome.test_frames = test.size();
      TrainingConfig training = cfg.training;
      training.schema = resolve_schema(cfg.schema, table, train, base ? &*base : nullptr);
      training.lts = expand_lts(cfg.training.lts, training.schema);
      write(fs::path("models") / dir / "schema.json", dump_document(schema_to_json(training.schema)));
      mark("train");

      const auto bank = base ? extend_model_bank(*base, table, train, training, workers)
                             : train_model_bank(table, train, training, workers);
      write(fs::path("models") / dir / "bank.json", dump_document(bank_to_json(bank)));
      mark("recognize");

      const auto scored = score_frames(bank, table, test, workers);
      const bool needs_cfr = std::count(cfg.methods.begin(), cfg.methods.end(), Method::Cfr) > 0;
      std::optional<CfrSetup> setup;
      if (needs_cfr) {
        setup = make_cfr_setup(table, train, training.schema, cfg.mdpf);
        write(fs::path("models") / dir / "mdpf.json", dump_document(mdpf_to_json(setup->mdpf, setup->schema)));
      }
      std::optional<CvContext> cv;
      std::vector<std::string> cat_names;
      for (const auto& c : training.schema.categories) cat_names.push_back(c.name);

      for (Method m : cfg.methods) {
        MethodOutcome mo;
        mo.method = m;
        const auto name = std::string(method_name(m));
        std::vector<std::size_t> pred;
        std::string log;
        if (m == Method::Ei) {
          mo.params_source = "none";
          const auto joint = train_joint_bank(table, train, training, workers);
          pred = recognize_ei(joint, table, test);
          log = label_log_csv(table, test, pred);
        } else {
          FusionParams params;
          if (cfg.params.source == "file") {
            params = *file_params;
            if (params.activities != table.activities || params.categories != cat_names) {
              throw ValidationError("fusion parameter file does not match the activities and categories in use");
            }
          } else if (cfg.params.source == "rough") {
            params = rough_params(table.activities, cat_names);
          } else {
            stage = "tune";
            if (!cv) {
              cv = prepare_cv(table, train, training, cfg.params.folds, derive_seed(cfg.seed, "cv", rep), workers,
                              cfg.mdpf);
            }
            mo.cv = search_params(*cv, cfg.params.grid, m, workers);
            params = mo.cv->params;
            mark("recognize");
          }
          mo.params_source = cfg.params.source;
          write(fs::path("models") / dir / ("fusion_" + name + ".json"), dump_document(fusion_params_to_json(params)));
          if (m == Method::Cfr) {
            const auto decisions = recognize_cfr(scored, table, params, *setup);
            pred = decision_labels(decisions);
            log = decision_log_csv(decisions, table.activities);
          } else {
            pred = predict(m, scored, table, params, nullptr);
            log = label_log_csv(table, test, pred);
          }
        }
        write(fs::path("decisions") / dir / (name + ".csv"), log);
        stage = "evaluate";
        mo.report = evaluate_predictions(table, test, pred);
        stage = "recognize";
        outcome.methods.push_back(std::move(mo));
      }
      mark("evaluate");

      Json doc = detail::experiment_header(cfg);
      doc["repeat"] = outcome.repeat;
      doc["split_seed"] = outcome.split_seed;
      doc["train_frames"] = outcome.train_frames;
      doc["test_frames"] = outcome.test_frames;
      doc["categories"] = cat_names;
      Json methods = Json::array();
      std::vector<std::pair<std::string, MethodReport>> rows;
      for (const auto& mo : outcome.methods) {
        Json j = method_report_json(std::string(method_name(mo.method)), mo.report);
        j["params_source"] = mo.params_source;
        if (mo.cv) {
          j["cv"] = Json{{"strategy", std::string(strategy_name(mo.cv->strategy))},
                         {"folds", cfg.params.folds},
                         {"evaluations", mo.cv->evaluations},
                         {"mean_tfer", mo.cv->mean_tfer}};
        }
        methods.push_back(j);
        rows.emplace_back(std::string(method_name(mo.method)), mo.report);
      }
      doc["methods"] = methods;
      write(fs::path("reports") / dir / "report.json", dump_document(doc));
      write(fs::path("reports") / dir / "table.csv", report_table_csv(rows));
      mark("write");
      report.repeats.push_back(std::move(outcome));
    }

    report.summary = detail::summarize(cfg, report.repeats);
    write(fs::path("reports") / "summary.json", dump_document(report.summary));
    write(fs::path("reports") / "summary.csv", detail::summary_csv(report.summary));
    mark("done");
    finish("ok", "", "");
  } catch (const std::exception& e) {
    try {
      finish("failed", stage, e.what());
    } catch (...) {
    }
    throw StageError(stage, e.what());
  }
  return report;
}

}  // namespace actrec
