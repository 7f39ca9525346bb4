#pragma once

// Category Feature Vectors: K-L distance between features, complete-linkage
// grouping of features into categories, and incremental schema extension.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "actrec/error.hpp"
#include "actrec/features.hpp"

namespace actrec {

struct CfvCategory {
  std::string name;
  std::vector<std::string> features;

  bool operator==(const CfvCategory&) const = default;
};

struct CfvSchema {
  std::vector<CfvCategory> categories;
  int version = 1;

  std::size_t category_index(const std::string& name) const {
    for (std::size_t i = 0; i < categories.size(); ++i) {
      if (categories[i].name == name) return i;
    }
    throw LookupError("unknown category '" + name + "'");
  }

  std::vector<std::string> all_features() const {
    std::vector<std::string> out;
    for (const auto& c : categories) out.insert(out.end(), c.features.begin(), c.features.end());
    return out;
  }

  // Feature indices (see `Feature`) of one category.
  std::vector<std::size_t> feature_indices(std::size_t category) const {
    std::vector<std::size_t> out;
    for (const auto& f : categories.at(category).features) out.push_back(feature_index(f));
    return out;
  }

  bool operator==(const CfvSchema&) const = default;
};

inline void validate(const CfvSchema& schema) {
  std::set<std::string> names;
  std::set<std::string> seen;
  for (const auto& c : schema.categories) {
    if (c.name.empty()) throw ValidationError("category with empty name");
    if (!names.insert(c.name).second) throw ValidationError("duplicate category '" + c.name + "'");
    if (c.features.empty()) throw ValidationError("category '" + c.name + "' is empty");
    for (const auto& f : c.features) {
      if (!seen.insert(f).second) {
        throw ValidationError("feature '" + f + "' appears in more than one category");
      }
    }
  }
}

// Body movement and body translation categories over the six base features.
inline CfvSchema default_schema() {
  return CfvSchema{{{"body_movement", {"f_c_mb_sz", "f_c_mb_wd", "f_c_mb_ht"}},
                    {"body_translation", {"f_avg_spd", "f_avg_vct", "f_mean_vct"}}},
                   1};
}

inline CfvCategory body_ratio_category() {
  return {"change_of_body_ratio", {"f_c_mb_ratio"}};
}

inline CfvSchema extend_schema(const CfvSchema& schema, const CfvCategory& category) {
  validate(schema);
  if (category.features.empty()) {
    throw ValidationError("cannot add empty category '" + category.name + "'");
  }
  CfvSchema out = schema;
  out.categories.push_back(category);
  validate(out);
  ++out.version;
  return out;
}

// ---------------------------------------------------------------------------
// K-L feature distance

// Sum over activities of (mu_i - mu_j)^2 (1/var_i + 1/var_j) + var_i/var_j +
// var_j/var_i. The ratio terms make the self-distance 2 per activity.
inline double kl_feature_distance(const std::map<ActivityId, MeanVar>& a,
                                  const std::map<ActivityId, MeanVar>& b) {
  if (a.size() != b.size()) throw ValidationError("K-L distance: activity sets differ in size");
  double sum = 0.0;
  auto ib = b.begin();
  for (auto ia = a.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) {
      throw ValidationError("K-L distance: activity '" + ia->first + "' not matched by '" +
                            ib->first + "'");
    }
    const double vi = ia->second.var;
    const double vj = ib->second.var;
    if (!(vi > 0.0) || !(vj > 0.0)) throw ValidationError("K-L distance: variances must be positive");
    const double dm = ia->second.mean - ib->second.mean;
    sum += dm * dm * (1.0 / vi + 1.0 / vj) + (vi / vj + vj / vi);
  }
  return sum;
}

struct FeatureDistanceMatrix {
  std::vector<std::string> features;
  std::vector<double> values;  // row-major n x n

  std::size_t size() const { return features.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values[i * features.size() + j]; }
};

inline FeatureDistanceMatrix feature_distance_matrix(const FeatureStats& stats,
                                                     const std::vector<std::string>& features) {
  FeatureDistanceMatrix m;
  m.features = features;
  const std::size_t n = features.size();
  m.values.assign(n * n, 0.0);
  std::vector<std::map<ActivityId, MeanVar>> profiles;
  for (const auto& f : features) profiles.push_back(stats.activity_profile(feature_index(f)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double d = kl_feature_distance(profiles[i], profiles[j]);
      m.values[i * n + j] = d;
      m.values[j * n + i] = d;
    }
  }
  return m;
}

inline std::vector<std::string> base_feature_ids() {
  return {"f_c_mb_sz", "f_c_mb_wd", "f_c_mb_ht", "f_avg_spd", "f_avg_vct", "f_mean_vct"};
}

// ---------------------------------------------------------------------------
// Clustering

struct ThresholdPolicy {
  double tau = std::numeric_limits<double>::infinity();
};
struct CountPolicy {
  std::size_t clusters = 2;
};
using ClusterPolicy = std::variant<ThresholdPolicy, CountPolicy>;

// Complete-linkage agglomerative clustering. Each step merges the pair of
// clusters with the smallest maximum pairwise distance; ties go to the pair
// whose smallest member indices are lowest. Categories come out ordered by
// their lowest feature index and are named cfv_1, cfv_2, ...
inline CfvSchema cluster_features_into_cfvs(const FeatureDistanceMatrix& matrix,
                                            const ClusterPolicy& policy) {
  const std::size_t n = matrix.size();
  if (n == 0) throw ValidationError("empty distance matrix");
  if (matrix.values.size() != n * n) throw ValidationError("distance matrix is not square");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (matrix(i, j) != matrix(j, i) || !(matrix(i, j) >= 0.0)) {
        throw ValidationError("distance matrix must be symmetric and nonnegative");
      }
    }
  }
  std::size_t target = 1;
  double tau = std::numeric_limits<double>::infinity();
  if (const auto* c = std::get_if<CountPolicy>(&policy)) {
    if (c->clusters == 0 || c->clusters > n) {
      throw ValidationError("target cluster count " + std::to_string(c->clusters) +
                            " outside [1, " + std::to_string(n) + "]");
    }
    target = c->clusters;
  } else {
    tau = std::get<ThresholdPolicy>(policy).tau;
  }

  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});

  auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double worst = 0.0;
    for (std::size_t i : a) {
      for (std::size_t j : b) worst = std::max(worst, matrix(i, j));
    }
    return worst;
  };

  while (clusters.size() > target) {
    std::size_t best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double d = linkage(clusters[a], clusters[b]);
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best > tau) break;
    auto& dst = clusters[best_a];
    dst.insert(dst.end(), clusters[best_b].begin(), clusters[best_b].end());
    std::sort(dst.begin(), dst.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
  }

  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  CfvSchema schema;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    CfvCategory cat{"cfv_" + std::to_string(c + 1), {}};
    for (std::size_t i : clusters[c]) cat.features.push_back(matrix.features[i]);
    schema.categories.push_back(std::move(cat));
  }
  return schema;
}

}  // namespace actrec
