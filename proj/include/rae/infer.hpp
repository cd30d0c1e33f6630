#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rae/ordinal.hpp"
#include "rae/rng.hpp"

namespace rae {

/// Draws of one scalar: chain x iteration.
using ChainDraws = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// Diagnostics (depend on the draws only)
// ---------------------------------------------------------------------------

/// Split-chain potential scale reduction: every chain is halved, then
/// sqrt((W (n-1)/n + B/n) / W). Needs >= 2 chains of >= 4 iterations
/// (Error{InsufficientDraws}). Constant draws give 1; zero within-chain
/// variance with distinct chain means gives +inf.
double split_rhat(const ChainDraws& draws);

/// Bulk effective sample size: pooled rank normalisation, split chains,
/// autocorrelation sums truncated by Geyer's initial monotone sequence.
/// Constant draws give 0.
double ess_bulk(const ChainDraws& draws);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Narrowest window holding ceil(mass * n) sorted samples; the leftmost
/// window wins ties. Needs >= 10 samples and 0 < mass < 1.
Interval hdi(std::span<const double> samples, double mass = 0.94);

// ---------------------------------------------------------------------------
// Hierarchical cumulative-logit posterior
// ---------------------------------------------------------------------------

struct McmcConfig {
  int chains = 4;
  int warmup_draws = 1000;
  int post_warmup_draws = 2000;
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  double prior_scale = 1.0;
  int max_tree_depth = 10;
  /// Run chains on separate threads. Output is identical either way.
  bool parallel_chains = false;

  void validate() const;
};

/// Names the pieces of the model: K categories, predictors, and groups
/// (one random intercept per group name; empty means no random intercepts).
struct FitSpec {
  int categories = 5;
  std::vector<std::string> beta_names;
  std::vector<std::string> group_names;
};

/// Unconstrained posterior for a FitSpec and data:
///
///   theta = [c_1, log(c_2 - c_1), ..., beta..., alpha_1..alpha_J, log sigma_alpha]
///
/// Priors: c_1 and the log-increments ~ N(0, 5); beta ~ N(0, prior_scale);
/// alpha_j ~ N(0, sigma_alpha); sigma_alpha ~ half-N(0, 1) (with Jacobian).
class OrdinalPosterior {
 public:
  OrdinalPosterior(FitSpec spec, std::vector<Observation> data, double prior_scale);

  std::size_t dimension() const { return dim_; }
  const FitSpec& spec() const { return spec_; }

  /// log density up to a constant; fills `grad`.
  double log_density(std::span<const double> theta, std::span<double> grad) const;

  /// Maps theta onto the model (cutpoints, beta, alpha, sigma_alpha).
  OrdinalModel constrain(std::span<const double> theta) const;
  /// Constrained parameter vector in parameter_names() order.
  std::vector<double> constrained_values(std::span<const double> theta) const;
  std::vector<std::string> parameter_names() const;

 private:
  FitSpec spec_;
  std::vector<Observation> data_;
  double prior_scale_;
  std::size_t n_cut_;
  std::size_t n_beta_;
  std::size_t n_group_;
  std::size_t dim_;
};

struct ParameterSummary {
  double mean = 0.0;
  double sd = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
  double rhat = 0.0;
  double ess_bulk = 0.0;
};

struct FitResult {
  FitSpec spec;
  McmcConfig config;
  double hdi_mass = 0.94;
  std::vector<std::string> names;
  /// One ChainDraws per parameter, in `names` order, constrained scale.
  std::vector<ChainDraws> draws;
  std::vector<ParameterSummary> summaries;
  int divergence_count = 0;
  std::vector<double> step_sizes;
  std::size_t n_observations = 0;

  std::size_t chains() const { return draws.empty() ? 0 : draws.front().size(); }
  std::size_t iterations() const;
  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws Error{InvalidArgument} for unknown names.
  const ParameterSummary& summary(std::string_view name) const;
  /// All chains concatenated for one parameter.
  std::vector<double> pooled(std::string_view name) const;
  OrdinalModel model_at(std::size_t chain, std::size_t iteration) const;
  double max_rhat() const;
  double min_ess_bulk() const;
};

/// Posterior draws for the hierarchical model by NUTS. Deterministic given
/// config.seed: chain c uses stream (seed, c). Non-convergence is reported in
/// the diagnostics, never thrown.
/// Throws Error{DegenerateData} for empty data or a single observed category.
FitResult fit(std::span<const Observation> data, const FitSpec& spec, const McmcConfig& config,
              double hdi_mass = 0.94);

/// Rebuilds summaries (HDI at `hdi_mass`, R-hat, ESS) from draws.
void summarize(FitResult& result);

struct PredictiveCheck {
  std::vector<double> observed;  // category proportions, length K
  std::vector<double> mean;      // empty when no draws were requested
  std::vector<double> low;
  std::vector<double> high;
  std::size_t draws_used = 0;
  double mass = 0.94;

  /// Observed proportions inside [low, high] for every category.
  bool all_inside() const;
};

/// Replicates the dataset under `n_draws` posterior draws (evenly spaced over
/// the pooled draws), tabulates category proportions, and reports the mean
/// and central `mass` band per category next to the observed proportions.
PredictiveCheck posterior_predictive_check(const FitResult& fit,
                                           std::span<const Observation> data, Rng& rng,
                                           std::size_t n_draws = 200, double mass = 0.94);

}  // namespace rae
