#pragma once

// Diagonal-covariance Gaussian mixtures: EM fitting, mixture likelihood,
// per-category MAP posteriors, MAP adaptation from a donor model, and donor
// selection for activities that lack training data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actrec/cfv.hpp"
#include "actrec/error.hpp"

namespace actrec {

inline constexpr double kLog2Pi = 1.8378770664093454836;

// Row-major sample matrix.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  explicit SampleMatrix(std::size_t dim) : dim_(dim) {}
  SampleMatrix(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0 || data_.size() % dim_ != 0) throw ValidationError("sample data not a multiple of dim");
  }

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const { return data_.empty(); }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  const std::vector<double>& data() const { return data_; }

  void push_back(std::span<const double> x) {
    if (x.size() != dim_) throw ValidationError("sample dimension mismatch");
    data_.insert(data_.end(), x.begin(), x.end());
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

struct GaussianComponent {
  double weight = 0.0;
  std::vector<double> mean;
  std::vector<double> var;

  bool operator==(const GaussianComponent&) const = default;
};

class GmmModel {
 public:
  GmmModel() = default;

  // Weights are renormalized to sum to one unless they already do (to 1e-12),
  // so a serialized model reloads bit-for-bit.
  explicit GmmModel(std::vector<GaussianComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw ValidationError("GMM needs at least one component");
    const std::size_t d = components_.front().mean.size();
    if (d == 0) throw ValidationError("GMM dimension must be positive");
    double total = 0.0;
    for (const auto& c : components_) {
      if (c.mean.size() != d || c.var.size() != d) throw ValidationError("GMM component dimension mismatch");
      if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) throw ValidationError("GMM weight must be >= 0");
      for (std::size_t k = 0; k < d; ++k) {
        if (!(c.var[k] > 0.0) || !std::isfinite(c.var[k]) || !std::isfinite(c.mean[k])) {
          throw ValidationError("GMM variances must be positive and parameters finite");
        }
      }
      total += c.weight;
    }
    if (!(total > 0.0)) throw ValidationError("GMM weights sum to zero");
    if (std::abs(total - 1.0) > 1e-12) {
      for (auto& c : components_) c.weight /= total;
    }
    prepare();
  }

  std::size_t dim() const { return components_.empty() ? 0 : components_.front().mean.size(); }
  std::size_t size() const { return components_.size(); }
  const std::vector<GaussianComponent>& components() const { return components_; }

  double log_likelihood(std::span<const double> x) const {
    if (x.size() != dim()) {
      throw ValidationError("GMM dimension mismatch: model " + std::to_string(dim()) + ", sample " +
                            std::to_string(x.size()));
    }
    double best = -std::numeric_limits<double>::infinity();
    double terms[16];
    std::vector<double> spill;
    double* t = terms;
    if (components_.size() > 16) {
      spill.resize(components_.size());
      t = spill.data();
    }
    for (std::size_t j = 0; j < components_.size(); ++j) {
      t[j] = component_log_density(j, x);
      best = std::max(best, t[j]);
    }
    if (!std::isfinite(best)) return best;
    double sum = 0.0;
    for (std::size_t j = 0; j < components_.size(); ++j) sum += std::exp(t[j] - best);
    return best + std::log(sum);
  }

  double likelihood(std::span<const double> x) const {
    if (x.size() != dim()) throw ValidationError("GMM dimension mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < components_.size(); ++j) {
      const auto& c = components_[j];
      double q = 0.0;
      double det = 1.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - c.mean[k];
        q += d * d / c.var[k];
        det *= 2.0 * 3.14159265358979323846 * c.var[k];
      }
      sum += c.weight * std::exp(-0.5 * q) / std::sqrt(det);
    }
    return sum;
  }

  // log(weight_j) + log N(x; mean_j, diag var_j); -inf for zero weight.
  double component_log_density(std::size_t j, std::span<const double> x) const {
    const auto& c = components_[j];
    if (c.weight <= 0.0) return -std::numeric_limits<double>::infinity();
    double q = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = x[k] - c.mean[k];
      q += d * d / c.var[k];
    }
    return log_norm_[j] - 0.5 * q;
  }

  bool operator==(const GmmModel& o) const { return components_ == o.components_; }

 private:
  void prepare() {
    log_norm_.resize(components_.size());
    for (std::size_t j = 0; j < components_.size(); ++j) {
      const auto& c = components_[j];
      double s = 0.0;
      for (double v : c.var) s += std::log(v);
      log_norm_[j] = (c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity()) -
                     0.5 * (static_cast<double>(c.var.size()) * kLog2Pi + s);
    }
  }

  std::vector<GaussianComponent> components_;
  std::vector<double> log_norm_;
};

enum class EmInit { KMeansSeeding, RandomResponsibility };

struct EmConfig {
  int max_iterations = 200;
  double rel_tolerance = 1e-6;
  double variance_floor_factor = 1e-6;
  EmInit init = EmInit::KMeansSeeding;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iterations < 1) throw ValidationError("EM max_iterations must be >= 1");
    if (!(rel_tolerance > 0.0)) throw ValidationError("EM tolerance must be > 0");
    if (!(variance_floor_factor >= 0.0)) throw ValidationError("variance floor factor must be >= 0");
  }
};

struct EmTrace {
  std::vector<double> log_likelihood;  // total data log-likelihood per iteration
  int iterations = 0;
  bool converged = false;
};

struct GmmFit {
  GmmModel model;
  EmTrace trace;
};

namespace detail {

inline std::vector<double> variance_floor(const SampleMatrix& samples, double factor) {
  const std::size_t d = samples.dim();
  const std::size_t n = samples.rows();
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = samples.row(i);
    for (std::size_t k = 0; k < d; ++k) mean[k] += x[k];
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = samples.row(i);
    for (std::size_t k = 0; k < d; ++k) var[k] += (x[k] - mean[k]) * (x[k] - mean[k]);
  }
  for (auto& v : var) v = std::max(factor * v / static_cast<double>(n), kMinimumVariance);
  return var;
}

inline void check_samples(const SampleMatrix& samples) {
  for (double v : samples.data()) {
    if (!std::isfinite(v)) throw ValidationError("non-finite sample value");
  }
}

// Weighted M-step from responsibilities resp[i * M + j]. A component that
// receives no responsibility keeps its previous parameters with zero weight.
inline std::vector<GaussianComponent> m_step(const SampleMatrix& samples,
                                             const std::vector<double>& resp, std::size_t m,
                                             const std::vector<double>& floor,
                                             const std::vector<GaussianComponent>* previous) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.dim();
  std::vector<GaussianComponent> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    double nk = 0.0;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = resp[i * m + j];
      if (r == 0.0) continue;
      nk += r;
      auto x = samples.row(i);
      for (std::size_t k = 0; k < d; ++k) mean[k] += r * x[k];
    }
    if (!(nk > 0.0)) {
      if (previous) {
        out[j] = (*previous)[j];
      } else {
        out[j].mean.assign(d, 0.0);
        out[j].var = floor;
      }
      out[j].weight = 0.0;
      continue;
    }
    for (auto& v : mean) v /= nk;
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = resp[i * m + j];
      if (r == 0.0) continue;
      auto x = samples.row(i);
      for (std::size_t k = 0; k < d; ++k) var[k] += r * (x[k] - mean[k]) * (x[k] - mean[k]);
    }
    for (std::size_t k = 0; k < d; ++k) var[k] = std::max(var[k] / nk, floor[k]);
    out[j] = GaussianComponent{nk / static_cast<double>(n), std::move(mean), std::move(var)};
  }
  return out;
}

// E-step: fills responsibilities and returns the total log-likelihood.
inline double e_step(const GmmModel& model, const SampleMatrix& samples, std::vector<double>& resp) {
  const std::size_t n = samples.rows();
  const std::size_t m = model.size();
  resp.assign(n * m, 0.0);
  double total = 0.0;
  std::vector<double> lp(m);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = samples.row(i);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      lp[j] = model.component_log_density(j, x);
      best = std::max(best, lp[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) sum += std::exp(lp[j] - best);
    const double lse = best + std::log(sum);
    total += lse;
    for (std::size_t j = 0; j < m; ++j) resp[i * m + j] = std::exp(lp[j] - lse);
  }
  return total;
}

inline std::vector<double> kmeans_seed_responsibilities(const SampleMatrix& samples, std::size_t m,
                                                        const std::vector<double>& floor,
                                                        std::mt19937_64& rng) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.dim();
  // Distances scaled by the per-dimension spread so no feature dominates.
  std::vector<double> scale(d);
  for (std::size_t k = 0; k < d; ++k) scale[k] = 1.0 / floor[k];
  auto dist = [&](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += (a[k] - b[k]) * (a[k] - b[k]) * scale[k];
    return s;
  };
  // k-means++ seeding
  std::vector<std::size_t> centers;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.push_back(pick(rng));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centers.size() < m) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], dist(samples.row(i), samples.row(centers.back())));
      total += nearest[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (std::size_t i = 0; i < n; ++i) {
        target -= nearest[i];
        if (target <= 0.0) {
          chosen = i;
          break;
        }
        chosen = i;
      }
    } else {
      chosen = pick(rng);
    }
    centers.push_back(chosen);
  }
  std::vector<std::vector<double>> c(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto r = samples.row(centers[j]);
    c[j].assign(r.begin(), r.end());
  }
  // A few Lloyd iterations.
  std::vector<std::size_t> assign(n, 0);
  for (int it = 0; it < 10; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        const double dd = dist(samples.row(i), c[j]);
        if (dd < best) {
          best = dd;
          assign[i] = j;
        }
      }
    }
    std::vector<std::vector<double>> sum(m, std::vector<double>(d, 0.0));
    std::vector<std::size_t> count(m, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto x = samples.row(i);
      for (std::size_t k = 0; k < d; ++k) sum[assign[i]][k] += x[k];
      ++count[assign[i]];
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (count[j] == 0) continue;
      for (std::size_t k = 0; k < d; ++k) c[j][k] = sum[j][k] / static_cast<double>(count[j]);
    }
  }
  std::vector<double> resp(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) resp[i * m + assign[i]] = 1.0;
  return resp;
}

inline std::vector<double> random_responsibilities(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> resp(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += resp[i * m + j] = u(rng) + 1e-3;
    for (std::size_t j = 0; j < m; ++j) resp[i * m + j] /= s;
  }
  return resp;
}

// EM iterations from a starting model. The trace holds the log-likelihood of
// each successive parameter set, ending with the returned model.
inline GmmFit run_em(GmmModel model, const SampleMatrix& samples, const EmConfig& cfg,
                     const std::vector<double>& floor) {
  GmmFit fit;
  std::vector<double> resp;
  double ll = e_step(model, samples, resp);
  fit.trace.log_likelihood.push_back(ll);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    auto components = m_step(samples, resp, model.size(), floor, &model.components());
    GmmModel next(std::move(components));
    const double next_ll = e_step(next, samples, resp);
    model = std::move(next);
    fit.trace.log_likelihood.push_back(next_ll);
    fit.trace.iterations = it + 1;
    if (std::abs(next_ll - ll) <= cfg.rel_tolerance * std::abs(ll)) {
      fit.trace.converged = true;
      break;
    }
    ll = next_ll;
  }
  fit.model = std::move(model);
  return fit;
}

}  // namespace detail

// Maximum-likelihood fit with `components` mixture components. Variances are
// floored at variance_floor_factor times the per-dimension data variance.
inline GmmFit fit_gmm_traced(const SampleMatrix& samples, std::size_t components, const EmConfig& cfg,
                             std::uint64_t seed) {
  cfg.validate();
  if (components == 0) throw ValidationError("component count must be >= 1");
  if (samples.rows() < components) {
    throw InsufficientDataError("only " + std::to_string(samples.rows()) + " samples for " +
                                std::to_string(components) +
                                " components; use MAP adaptation from a donor model instead");
  }
  detail::check_samples(samples);
  const auto floor = detail::variance_floor(samples, cfg.variance_floor_factor);
  std::mt19937_64 rng(seed);
  auto resp = cfg.init == EmInit::KMeansSeeding
                  ? detail::kmeans_seed_responsibilities(samples, components, floor, rng)
                  : detail::random_responsibilities(samples.rows(), components, rng);
  GmmModel start(detail::m_step(samples, resp, components, floor, nullptr));
  return detail::run_em(std::move(start), samples, cfg, floor);
}

inline GmmModel fit_gmm(const SampleMatrix& samples, std::size_t components, const EmConfig& cfg,
                        std::uint64_t seed) {
  return fit_gmm_traced(samples, components, cfg, seed).model;
}

// Picks the component count in [1, max_components] with the lowest BIC.
inline GmmModel fit_gmm_bic(const SampleMatrix& samples, std::size_t max_components, const EmConfig& cfg,
                            std::uint64_t seed) {
  std::optional<GmmModel> best;
  double best_bic = std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(samples.rows());
  const double d = static_cast<double>(samples.dim());
  for (std::size_t m = 1; m <= max_components && m <= samples.rows(); ++m) {
    auto fit = fit_gmm_traced(samples, m, cfg, seed);
    const double params = static_cast<double>(m) * (2.0 * d + 1.0) - 1.0;
    const double bic = -2.0 * fit.trace.log_likelihood.back() + params * std::log(n);
    if (bic < best_bic) {
      best_bic = bic;
      best = std::move(fit.model);
    }
  }
  if (!best) throw InsufficientDataError("no samples for BIC selection");
  return *best;
}

// EM started from an existing model's parameters (no re-initialization).
inline GmmModel refine_gmm(const GmmModel& initial, const SampleMatrix& samples, const EmConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw InsufficientDataError("EM refinement needs at least one sample");
  if (samples.dim() != initial.dim()) throw ValidationError("samples do not match model dimension");
  detail::check_samples(samples);
  return detail::run_em(initial, samples, cfg, detail::variance_floor(samples, cfg.variance_floor_factor))
      .model;
}

// ---------------------------------------------------------------------------
// MAP adaptation

struct AdaptConfig {
  double alpha = 0.5;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  }
};

// Component-wise interpolation between the donor parameters and their EM
// re-estimate. Variances absorb the squared mean shift of each side.
inline GmmModel combine_adapted(const GmmModel& old_model, const GmmModel& new_model, double alpha,
                                const std::vector<double>& floor) {
  if (old_model.size() != new_model.size() || old_model.dim() != new_model.dim()) {
    throw ValidationError("adaptation requires matching mixture shapes");
  }
  const std::size_t d = old_model.dim();
  std::vector<GaussianComponent> out;
  for (std::size_t j = 0; j < old_model.size(); ++j) {
    const auto& o = old_model.components()[j];
    const auto& n = new_model.components()[j];
    GaussianComponent c;
    c.weight = alpha * o.weight + (1.0 - alpha) * n.weight;
    c.mean.resize(d);
    c.var.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double mu = alpha * o.mean[k] + (1.0 - alpha) * n.mean[k];
      const double so = mu - o.mean[k];
      const double sn = mu - n.mean[k];
      c.mean[k] = mu;
      c.var[k] = std::max(alpha * (o.var[k] + so * so) + (1.0 - alpha) * (n.var[k] + sn * sn),
                          floor.empty() ? kMinimumVariance : floor[k]);
    }
    out.push_back(std::move(c));
  }
  return GmmModel(std::move(out));
}

inline GmmModel map_adapt(const GmmModel& initial, const SampleMatrix& samples, const EmConfig& cfg,
                          const AdaptConfig& adapt) {
  cfg.validate();
  adapt.validate();
  if (samples.empty()) {
    if (adapt.alpha == 1.0) return initial;
    throw InsufficientDataError("MAP adaptation with alpha < 1 needs at least one sample");
  }
  if (samples.dim() != initial.dim()) throw ValidationError("adaptation samples do not match model dimension");
  detail::check_samples(samples);
  auto floor = detail::variance_floor(samples, cfg.variance_floor_factor);
  const auto fresh = detail::run_em(initial, samples, cfg, floor).model;
  return combine_adapted(initial, fresh, adapt.alpha, floor);
}

// ---------------------------------------------------------------------------
// Model bank

struct ModelKey {
  ActivityId activity;
  std::string category;

  auto operator<=>(const ModelKey&) const = default;
};

struct ModelBank {
  CfvSchema schema;
  std::vector<ActivityId> activities;  // fixes tie-break order
  std::map<ActivityId, double> priors;
  std::map<ModelKey, GmmModel> models;

  std::size_t activity_index(const ActivityId& a) const {
    for (std::size_t i = 0; i < activities.size(); ++i) {
      if (activities[i] == a) return i;
    }
    throw LookupError("unknown activity '" + a + "'");
  }

  const GmmModel& model(const ActivityId& activity, const std::string& category) const {
    auto it = models.find(ModelKey{activity, category});
    if (it == models.end()) {
      throw LookupError("no model for activity '" + activity + "' category '" + category + "'");
    }
    return it->second;
  }

  std::vector<double> prior_vector() const {
    std::vector<double> p;
    for (const auto& a : activities) p.push_back(priors.at(a));
    return p;
  }
};

inline void validate(const ModelBank& bank) {
  validate(bank.schema);
  double total = 0.0;
  for (const auto& a : bank.activities) {
    auto it = bank.priors.find(a);
    if (it == bank.priors.end()) throw ValidationError("missing prior for '" + a + "'");
    if (!(it->second >= 0.0)) throw ValidationError("negative prior for '" + a + "'");
    total += it->second;
    for (std::size_t c = 0; c < bank.schema.categories.size(); ++c) {
      const auto& cat = bank.schema.categories[c];
      const auto& m = bank.model(a, cat.name);
      if (m.dim() != cat.features.size()) {
        throw ValidationError("model '" + a + "/" + cat.name + "' has wrong dimension");
      }
    }
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("priors do not sum to 1");
}

// P(A_k | x) for every activity of the bank, in bank activity order.
struct Posterior {
  std::vector<double> probs;
  bool degenerate = false;  // every likelihood underflowed; uniform returned
};

// Normalizes log(p(x|A_k)) + log P(A_k) over activities.
inline Posterior posterior_from_log_likelihoods(std::span<const double> log_lik,
                                                std::span<const double> priors) {
  Posterior out;
  const std::size_t k = log_lik.size();
  out.probs.assign(k, 0.0);
  std::vector<double> joint(k);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < k; ++a) {
    joint[a] = priors[a] > 0.0 ? log_lik[a] + std::log(priors[a])
                               : -std::numeric_limits<double>::infinity();
    best = std::max(best, joint[a]);
  }
  if (!std::isfinite(best)) {
    out.degenerate = true;
    for (auto& p : out.probs) p = 1.0 / static_cast<double>(k);
    return out;
  }
  double sum = 0.0;
  for (std::size_t a = 0; a < k; ++a) sum += out.probs[a] = std::exp(joint[a] - best);
  for (auto& p : out.probs) p /= sum;
  return out;
}

inline std::vector<double> category_log_likelihoods(const ModelBank& bank, const std::string& category,
                                                    std::span<const double> x) {
  std::vector<double> ll;
  ll.reserve(bank.activities.size());
  for (const auto& a : bank.activities) ll.push_back(bank.model(a, category).log_likelihood(x));
  return ll;
}

inline Posterior cfv_posteriors(const ModelBank& bank, const std::string& category,
                                std::span<const double> x) {
  bank.schema.category_index(category);
  const auto ll = category_log_likelihoods(bank, category, x);
  const auto priors = bank.prior_vector();
  return posterior_from_log_likelihoods(ll, priors);
}

// Per-category MAP decision: argmax posterior, ties to the earlier activity.
inline std::size_t argmax_first(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Donor selection

struct DonorRanking {
  ActivityId chosen;
  std::vector<std::pair<ActivityId, double>> ranking;  // mean log-likelihood, best first
  bool overridden = false;
};

// Picks the trained activity whose category model best explains the LTS
// samples. An entry in `overrides` for the category wins unconditionally.
inline DonorRanking select_donor(const ModelBank& bank, const std::string& category,
                                 const SampleMatrix& lts_samples,
                                 const std::vector<ActivityId>& candidates = {},
                                 std::optional<ActivityId> override_donor = std::nullopt) {
  if (bank.models.empty() || bank.activities.empty()) throw InsufficientDataError("empty model bank");
  bank.schema.category_index(category);
  DonorRanking out;
  const auto& pool = candidates.empty() ? bank.activities : candidates;
  if (lts_samples.rows() > 0) {
    for (const auto& a : pool) {
      auto it = bank.models.find(ModelKey{a, category});
      if (it == bank.models.end()) continue;
      double sum = 0.0;
      for (std::size_t i = 0; i < lts_samples.rows(); ++i) sum += it->second.log_likelihood(lts_samples.row(i));
      out.ranking.emplace_back(a, sum / static_cast<double>(lts_samples.rows()));
    }
    std::stable_sort(out.ranking.begin(), out.ranking.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
  }
  if (override_donor) {
    bank.model(*override_donor, category);
    out.chosen = *override_donor;
    out.overridden = true;
    return out;
  }
  if (lts_samples.rows() == 0) throw InsufficientDataError("donor selection needs at least one LTS sample");
  if (out.ranking.empty()) throw InsufficientDataError("no trained donor for category '" + category + "'");
  out.chosen = out.ranking.front().first;
  return out;
}

}  // namespace actrec
