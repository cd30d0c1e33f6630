#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rae/rng.hpp"

namespace rae {

/// Cumulative-logit (proportional odds) model:
///
///   P(Y <= k | x) = logistic(c_k - eta),   eta = alpha[group] + x' beta
///
/// with K = cutpoints.size() + 1 ordered categories labelled 1..K.
struct OrdinalModel {
  std::vector<double> cutpoints;  // strictly increasing
  std::vector<std::string> beta_names;
  std::vector<double> beta;
  std::vector<double> alpha;  // per-group intercepts; may be empty
  double sigma_alpha = 1.0;

  int categories() const { return static_cast<int>(cutpoints.size()) + 1; }

  /// Throws Error{InvalidArgument} when an invariant fails.
  void validate() const;
};

/// One design row: numeric predictors plus an optional group index into alpha.
struct Covariates {
  std::vector<double> x;
  std::optional<std::size_t> group;

  friend bool operator==(const Covariates&, const Covariates&) = default;
};

/// A rating with its covariates. `weight` counts identical observations so
/// that large datasets can be collapsed to their distinct cells.
struct Observation {
  Covariates covariates;
  int rating = 1;
  double weight = 1.0;
};

double logistic(double x);
/// log(logistic(x)) without overflow.
double log_logistic(double x);

/// Throws Error{NonFiniteLinearPredictor}.
double linear_predictor(const OrdinalModel& model, const Covariates& x);

/// Category probabilities P(Y = 1..K | x); they sum to 1.
std::vector<double> category_probs(const OrdinalModel& model, const Covariates& x);
std::vector<double> category_probs_at(std::span<const double> cutpoints, double eta);

/// E[Y | eta] rescaled to [0,1]: (E[Y] - 1) / (K - 1).
double expected_importance_at(std::span<const double> cutpoints, double eta);

/// log P(Y = rating | eta) for a single observation.
double log_category_prob(std::span<const double> cutpoints, double eta, int rating);

/// log P(Y = rating | eta) with its partials: d/dc_rating (upper) and
/// d/dc_{rating-1} (lower). d/deta = -(d_upper + d_lower).
struct CategoryTerm {
  double log_prob = 0.0;
  double d_upper = 0.0;
  double d_lower = 0.0;
};
CategoryTerm category_term(std::span<const double> cutpoints, double eta, int rating);

/// Sum of weight_i * log P(Y = rating_i | x_i).
double log_likelihood(const OrdinalModel& model, std::span<const Observation> data);

struct LogLikelihoodGradient {
  std::vector<double> cutpoints;
  std::vector<double> beta;
  std::vector<double> alpha;
};

/// Analytic gradient of log_likelihood with respect to the constrained
/// parameters (cutpoints, beta, alpha).
LogLikelihoodGradient log_likelihood_gradient(const OrdinalModel& model,
                                              std::span<const Observation> data);

/// Draws a rating in 1..K by inverting the cumulative probabilities.
int sample_rating(const OrdinalModel& model, const Covariates& x, Rng& rng);
int sample_rating_at(std::span<const double> cutpoints, double eta, Rng& rng);

enum class Contrast {
  CodedVsReference,  // exp(beta)
  ReferenceVsCoded,  // exp(-beta): e.g. Female vs Male under Male = 1 dummy coding
};

double odds_ratio(double beta_coef, Contrast contrast = Contrast::CodedVsReference);

/// Merges observations with identical covariates and rating, summing weights.
/// Output order is deterministic (sorted by covariates, then rating).
std::vector<Observation> compress(std::span<const Observation> data);

}  // namespace rae
