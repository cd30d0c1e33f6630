#include "rae/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "rae/error.hpp"

namespace rae {

namespace {

// log(1 - exp(x)) for x < 0.
double log1mexp(double x) {
  return x > -0.6931471805599453 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

void check_rating(std::span<const double> cutpoints, int rating) {
  const int k = static_cast<int>(cutpoints.size()) + 1;
  if (rating < 1 || rating > k) {
    throw Error(Errc::InvalidRating, "rating " + std::to_string(rating) + " outside 1.." +
                                         std::to_string(k));
  }
}

}  // namespace

void OrdinalModel::validate() const {
  if (cutpoints.empty()) throw Error(Errc::InvalidArgument, "model needs at least one cutpoint");
  for (std::size_t i = 0; i < cutpoints.size(); ++i) {
    if (!std::isfinite(cutpoints[i])) throw Error(Errc::InvalidArgument, "non-finite cutpoint");
    if (i > 0 && !(cutpoints[i] > cutpoints[i - 1])) {
      throw Error(Errc::InvalidArgument, "cutpoints must be strictly increasing");
    }
  }
  if (beta_names.size() != beta.size()) {
    throw Error(Errc::InvalidArgument, "beta_names and beta differ in length");
  }
  if (!(sigma_alpha > 0.0) || !std::isfinite(sigma_alpha)) {
    throw Error(Errc::InvalidArgument, "sigma_alpha must be positive");
  }
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_logistic(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double linear_predictor(const OrdinalModel& model, const Covariates& x) {
  if (x.x.size() != model.beta.size()) {
    throw Error(Errc::InvalidArgument, "covariate row has " + std::to_string(x.x.size()) +
                                           " entries, model has " +
                                           std::to_string(model.beta.size()));
  }
  double eta = 0.0;
  if (x.group) {
    if (*x.group >= model.alpha.size()) {
      throw Error(Errc::InvalidArgument, "group index outside the model's alpha table");
    }
    eta += model.alpha[*x.group];
  }
  for (std::size_t i = 0; i < x.x.size(); ++i) eta += x.x[i] * model.beta[i];
  if (!std::isfinite(eta)) throw Error(Errc::NonFiniteLinearPredictor, "eta is not finite");
  return eta;
}

std::vector<double> category_probs_at(std::span<const double> cutpoints, double eta) {
  if (!std::isfinite(eta)) throw Error(Errc::NonFiniteLinearPredictor, "eta is not finite");
  const std::size_t k = cutpoints.size() + 1;
  std::vector<double> probs(k);
  // Differences of the CDF taken on whichever tail keeps precision.
  double prev = 0.0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    const double cdf = logistic(cutpoints[j] - eta);
    probs[j] = std::max(0.0, cdf - prev);
    prev = cdf;
  }
  probs[k - 1] = logistic(eta - cutpoints[k - 2]);
  // Renormalise away the last few ulps so the sum is 1 to rounding.
  double total = 0.0;
  for (double p : probs) total += p;
  for (double& p : probs) p /= total;
  return probs;
}

double expected_importance_at(std::span<const double> cutpoints, double eta) {
  const auto probs = category_probs_at(cutpoints, eta);
  double mean = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) mean += static_cast<double>(k + 1) * probs[k];
  return (mean - 1.0) / static_cast<double>(probs.size() - 1);
}

std::vector<double> category_probs(const OrdinalModel& model, const Covariates& x) {
  return category_probs_at(model.cutpoints, linear_predictor(model, x));
}

CategoryTerm category_term(std::span<const double> cutpoints, double eta, int rating) {
  check_rating(cutpoints, rating);
  const int k = static_cast<int>(cutpoints.size()) + 1;
  CategoryTerm t;
  if (rating == 1) {
    const double a = cutpoints[0] - eta;
    t.log_prob = log_logistic(a);
    t.d_upper = logistic(-a);
  } else if (rating == k) {
    const double b = cutpoints[k - 2] - eta;
    t.log_prob = log_logistic(-b);
    t.d_lower = -logistic(b);
  } else {
    const double a = cutpoints[rating - 1] - eta;
    const double b = cutpoints[rating - 2] - eta;
    const double gap = -std::expm1(b - a);  // 1 - exp(b - a)
    t.log_prob = log_logistic(a) + log_logistic(-b) + log1mexp(b - a);
    t.d_upper = logistic(-a) / (logistic(-b) * gap);
    t.d_lower = -logistic(b) / (logistic(a) * gap);
  }
  return t;
}

double log_category_prob(std::span<const double> cutpoints, double eta, int rating) {
  return category_term(cutpoints, eta, rating).log_prob;
}

double log_likelihood(const OrdinalModel& model, std::span<const Observation> data) {
  double total = 0.0;
  for (const auto& obs : data) {
    total += obs.weight *
             log_category_prob(model.cutpoints, linear_predictor(model, obs.covariates), obs.rating);
  }
  return total;
}

LogLikelihoodGradient log_likelihood_gradient(const OrdinalModel& model,
                                              std::span<const Observation> data) {
  LogLikelihoodGradient g;
  g.cutpoints.assign(model.cutpoints.size(), 0.0);
  g.beta.assign(model.beta.size(), 0.0);
  g.alpha.assign(model.alpha.size(), 0.0);
  const int k = model.categories();
  for (const auto& obs : data) {
    const double eta = linear_predictor(model, obs.covariates);
    const auto t = category_term(model.cutpoints, eta, obs.rating);
    if (obs.rating < k) g.cutpoints[obs.rating - 1] += obs.weight * t.d_upper;
    if (obs.rating > 1) g.cutpoints[obs.rating - 2] += obs.weight * t.d_lower;
    const double d_eta = -obs.weight * (t.d_upper + t.d_lower);
    if (obs.covariates.group) g.alpha[*obs.covariates.group] += d_eta;
    for (std::size_t i = 0; i < obs.covariates.x.size(); ++i) g.beta[i] += d_eta * obs.covariates.x[i];
  }
  return g;
}

int sample_rating_at(std::span<const double> cutpoints, double eta, Rng& rng) {
  const double u = uniform01(rng);
  const int k = static_cast<int>(cutpoints.size()) + 1;
  for (int j = 0; j + 1 < k; ++j) {
    if (u < logistic(cutpoints[j] - eta)) return j + 1;
  }
  return k;
}

int sample_rating(const OrdinalModel& model, const Covariates& x, Rng& rng) {
  return sample_rating_at(model.cutpoints, linear_predictor(model, x), rng);
}

double odds_ratio(double beta_coef, Contrast contrast) {
  return contrast == Contrast::CodedVsReference ? std::exp(beta_coef) : std::exp(-beta_coef);
}

std::vector<Observation> compress(std::span<const Observation> data) {
  using Key = std::tuple<std::vector<double>, long long, int>;
  std::map<Key, double> cells;
  for (const auto& obs : data) {
    const long long g = obs.covariates.group ? static_cast<long long>(*obs.covariates.group) : -1;
    cells[Key{obs.covariates.x, g, obs.rating}] += obs.weight;
  }
  std::vector<Observation> out;
  out.reserve(cells.size());
  for (const auto& [key, weight] : cells) {
    Observation obs;
    obs.covariates.x = std::get<0>(key);
    if (std::get<1>(key) >= 0) obs.covariates.group = static_cast<std::size_t>(std::get<1>(key));
    obs.rating = std::get<2>(key);
    obs.weight = weight;
    out.push_back(std::move(obs));
  }
  return out;
}

}  // namespace rae
