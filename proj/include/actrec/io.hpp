#pragma once

// Versioned JSON documents (schema, model bank, fusion params, M-DPF params,
// reports) and CSV emitters (decision logs, report tables, sweep curves).
// Doubles are written in shortest round-trip form so documents are
// byte-stable across load/save cycles.

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "actrec/cfr.hpp"
#include "actrec/cfv.hpp"
#include "actrec/dataset.hpp"
#include "actrec/error.hpp"
#include "actrec/eval.hpp"
#include "actrec/fusion.hpp"
#include "actrec/gmm.hpp"
#include "actrec/tuning.hpp"
#include "actrec/util.hpp"

namespace actrec {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

namespace detail {

inline void expect_format(const Json& doc, const std::string& format) {
  if (!doc.is_object() || doc.value("format", std::string()) != format) {
    throw ParseError("expected a '" + format + "' document");
  }
  const int version = doc.value("format_version", 0);
  if (version != kFormatVersion) {
    throw ParseError("unsupported " + format + " format_version " + std::to_string(version));
  }
}

template <class T>
T get_field(const Json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": field '" + key + "': " + e.what());
  }
}

inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Files

inline Json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline std::string dump_document(const Json& doc) { return doc.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Schema

inline Json schema_to_json(const CfvSchema& schema) {
  Json doc;
  doc["format"] = "actrec.cfv_schema";
  doc["format_version"] = kFormatVersion;
  doc["version"] = schema.version;
  Json cats = Json::array();
  for (const auto& c : schema.categories) {
    Json cat;
    cat["name"] = c.name;
    cat["features"] = c.features;
    cats.push_back(cat);
  }
  doc["categories"] = cats;
  return doc;
}

inline CfvSchema schema_from_json(const Json& doc) {
  detail::expect_format(doc, "actrec.cfv_schema");
  CfvSchema schema;
  schema.version = detail::get_field<int>(doc, "version", "schema");
  schema.categories.clear();
  for (const auto& c : detail::get_field<Json>(doc, "categories", "schema")) {
    schema.categories.push_back(CfvCategory{detail::get_field<std::string>(c, "name", "schema category"),
                                            detail::get_field<std::vector<std::string>>(c, "features",
                                                                                      "schema category")});
  }
  validate(schema);
  return schema;
}

// ---------------------------------------------------------------------------
// Model bank

inline Json model_to_json(const GmmModel& model) {
  Json comps = Json::array();
  for (const auto& c : model.components()) {
    Json j;
    j["weight"] = c.weight;
    j["mean"] = c.mean;
    j["var"] = c.var;
    comps.push_back(j);
  }
  return comps;
}

inline GmmModel model_from_json(const Json& comps, const std::string& where) {
  std::vector<GaussianComponent> out;
  for (const auto& j : comps) {
    out.push_back(GaussianComponent{detail::get_field<double>(j, "weight", where),
                                    detail::get_field<std::vector<double>>(j, "mean", where),
                                    detail::get_field<std::vector<double>>(j, "var", where)});
  }
  return GmmModel(std::move(out));
}

// One (activity, category) record; the unit of the byte-identity guarantee.
inline Json model_record(const ActivityId& activity, const std::string& category, const GmmModel& model) {
  Json rec;
  rec["activity"] = activity;
  rec["category"] = category;
  rec["components"] = model_to_json(model);
  return rec;
}

inline Json bank_to_json(const ModelBank& bank) {
  Json doc;
  doc["format"] = "actrec.model_bank";
  doc["format_version"] = kFormatVersion;
  doc["schema"] = schema_to_json(bank.schema);
  doc["activities"] = bank.activities;
  Json priors = Json::array();
  for (const auto& a : bank.activities) priors.push_back(Json{{"activity", a}, {"prior", bank.priors.at(a)}});
  doc["priors"] = priors;
  Json models = Json::array();
  for (const auto& a : bank.activities) {
    for (const auto& c : bank.schema.categories) models.push_back(model_record(a, c.name, bank.model(a, c.name)));
  }
  doc["models"] = models;
  return doc;
}

inline ModelBank bank_from_json(const Json& doc) {
  detail::expect_format(doc, "actrec.model_bank");
  ModelBank bank;
  bank.schema = schema_from_json(detail::get_field<Json>(doc, "schema", "model bank"));
  bank.activities = detail::get_field<std::vector<std::string>>(doc, "activities", "model bank");
  for (const auto& p : detail::get_field<Json>(doc, "priors", "model bank")) {
    bank.priors[detail::get_field<std::string>(p, "activity", "prior")] = detail::get_field<double>(p, "prior", "prior");
  }
  for (const auto& rec : detail::get_field<Json>(doc, "models", "model bank")) {
    const auto a = detail::get_field<std::string>(rec, "activity", "model record");
    const auto c = detail::get_field<std::string>(rec, "category", "model record");
    bank.models[ModelKey{a, c}] =
        model_from_json(detail::get_field<Json>(rec, "components", "model record"), "model '" + a + "/" + c + "'");
  }
  validate(bank);
  return bank;
}

// ---------------------------------------------------------------------------
// Fusion and M-DPF parameters

inline Json fusion_params_to_json(const FusionParams& p) {
  Json doc;
  doc["format"] = "actrec.fusion_params";
  doc["format_version"] = kFormatVersion;
  doc["activities"] = p.activities;
  doc["categories"] = p.categories;
  doc["wa_weights"] = p.wa_weights;
  doc["thresholds"] = p.thresholds;
  doc["wm_weights"] = p.wm_weights;
  return doc;
}

inline FusionParams fusion_params_from_json(const Json& doc) {
  detail::expect_format(doc, "actrec.fusion_params");
  FusionParams p;
  p.activities = detail::get_field<std::vector<std::string>>(doc, "activities", "fusion params");
  p.categories = detail::get_field<std::vector<std::string>>(doc, "categories", "fusion params");
  p.wa_weights = detail::get_field<std::vector<std::vector<double>>>(doc, "wa_weights", "fusion params");
  p.thresholds = detail::get_field<std::vector<double>>(doc, "thresholds", "fusion params");
  p.wm_weights = detail::get_field<std::vector<std::vector<double>>>(doc, "wm_weights", "fusion params");
  validate(p);
  return p;
}

inline Json mdpf_to_json(const MdpfParams& p, const SimilaritySchema& schema) {
  Json doc;
  doc["format"] = "actrec.mdpf_params";
  doc["format_version"] = kFormatVersion;
  doc["r"] = p.r;
  doc["n"] = p.n;
  doc["categories"] = schema.names;
  doc["category_weights"] = p.category_weights;
  Json w = Json::object();
  for (std::size_t f = 0; f < kFeatureCount; ++f) w[std::string(kFeatureNames[f])] = p.feature_weights[f];
  doc["feature_weights"] = w;
  return doc;
}

// ---------------------------------------------------------------------------
// Decisions, reports, curves

inline std::string decision_log_csv(std::span<const FrameDecision> decisions, const std::vector<ActivityId>& activities) {
  std::ostringstream out;
  out << "object,frame,label,provenance,candi1,candi2,D_w1,D_w2\n";
  auto name = [&](const std::optional<std::size_t>& a) { return a ? activities.at(*a) : std::string(); };
  for (const auto& d : decisions) {
    out << d.object << ',' << d.frame << ',' << activities.at(d.label) << ',' << provenance_name(d.provenance) << ','
        << name(d.candi1) << ',' << name(d.candi2) << ',' << detail::optional_text(d.distance1) << ','
        << detail::optional_text(d.distance2) << '\n';
  }
  return out.str();
}

// Plain label log for methods without CFR provenance.
inline std::string label_log_csv(const FeatureTable& table, std::span<const std::size_t> rows,
                                 std::span<const std::size_t> pred) {
  std::ostringstream out;
  out << "object,frame,label,truth\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = table.frames[rows[i]];
    const auto& truth = table.labels[rows[i]];
    out << f.object << ',' << f.frame << ',' << table.activities.at(pred[i]) << ','
        << (truth ? table.activities[*truth] : std::string()) << '\n';
  }
  return out.str();
}

inline Json method_report_json(const std::string& method, const MethodReport& r) {
  Json doc;
  doc["method"] = method;
  Json rows = Json::array();
  for (std::size_t a = 0; a < r.frames.activities.size(); ++a) {
    const auto& f = r.frames.activities[a];
    const auto& c = r.clips.activities[a];
    Json row;
    row["activity"] = f.activity;
    row["positives"] = f.positives;
    row["negatives"] = f.negatives;
    row["misses"] = f.misses;
    row["false_alarms"] = f.false_alarms;
    row["miss_rate"] = detail::optional_number(f.miss_rate);
    row["fa_rate"] = detail::optional_number(f.fa_rate);
    row["clips"] = c.total;
    row["missed_clips"] = c.missed;
    row["aer"] = detail::optional_number(c.aer);
    rows.push_back(row);
  }
  doc["activities"] = rows;
  doc["total_frames"] = r.frames.total_frames;
  doc["total_misses"] = r.frames.total_misses;
  doc["tfer"] = r.frames.tfer;
  return doc;
}

// Rows mirror the method x activity layout of the result tables.
inline std::string report_table_csv(const std::vector<std::pair<std::string, MethodReport>>& reports) {
  std::ostringstream out;
  out << "method,activity,positives,miss_rate,fa_rate,clips,missed_clips,aer,tfer\n";
  for (const auto& [method, r] : reports) {
    for (std::size_t a = 0; a < r.frames.activities.size(); ++a) {
      const auto& f = r.frames.activities[a];
      const auto& c = r.clips.activities[a];
      out << method << ',' << f.activity << ',' << f.positives << ',' << detail::optional_text(f.miss_rate) << ','
          << detail::optional_text(f.fa_rate) << ',' << c.total << ',' << c.missed << ','
          << detail::optional_text(c.aer) << ",\n";
    }
    out << method << ",TOTAL," << r.frames.total_frames << ",,,,,," << format_double(r.frames.tfer) << '\n';
  }
  return out.str();
}

inline std::string sweep_curve_csv(std::span<const SweepPoint> curve, std::size_t activity) {
  std::ostringstream out;
  out << "x,miss,fa,tfer\n";
  for (const auto& p : curve) {
    const auto& e = p.report.activities.at(activity);
    out << format_double(p.value) << ',' << detail::optional_text(e.miss_rate) << ','
        << detail::optional_text(e.fa_rate) << ',' << format_double(p.report.tfer) << '\n';
  }
  return out.str();
}

inline Json frame_report_json(const FrameErrorReport& r) {
  Json doc;
  Json rows = Json::array();
  for (const auto& f : r.activities) {
    rows.push_back(Json{{"activity", f.activity},
                        {"miss_rate", detail::optional_number(f.miss_rate)},
                        {"fa_rate", detail::optional_number(f.fa_rate)}});
  }
  doc["activities"] = rows;
  doc["tfer"] = r.tfer;
  return doc;
}

inline CaviarLabelMap caviar_labels_from_json(const Json& doc) {
  CaviarLabelMap m;
  if (doc.contains("movement")) m.movement = doc.at("movement").get<std::map<std::string, std::string>>();
  if (doc.contains("situation")) m.situation = doc.at("situation").get<std::map<std::string, std::string>>();
  return m;
}

}  // namespace actrec
