#include "rae/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include "rae/error.hpp"
#include "rae/nuts.hpp"

namespace rae {

namespace {

constexpr double kCutpointPriorSd = 5.0;

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

void McmcConfig::validate() const {
  if (chains < 2) throw Error(Errc::InvalidArgument, "split R-hat needs at least 2 chains");
  if (warmup_draws < 1) throw Error(Errc::InvalidArgument, "warmup_draws must be positive");
  if (post_warmup_draws < 4) throw Error(Errc::InvalidArgument, "post_warmup_draws must be >= 4");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw Error(Errc::InvalidArgument, "target_accept must be in (0,1)");
  }
  if (!(prior_scale > 0.0)) throw Error(Errc::InvalidArgument, "prior_scale must be positive");
  if (max_tree_depth < 1) throw Error(Errc::InvalidArgument, "max_tree_depth must be positive");
}

// ---------------------------------------------------------------------------
// OrdinalPosterior
// ---------------------------------------------------------------------------

OrdinalPosterior::OrdinalPosterior(FitSpec spec, std::vector<Observation> data, double prior_scale)
    : spec_(std::move(spec)),
      data_(std::move(data)),
      prior_scale_(prior_scale),
      n_cut_(static_cast<std::size_t>(spec_.categories - 1)),
      n_beta_(spec_.beta_names.size()),
      n_group_(spec_.group_names.size()),
      dim_(n_cut_ + n_beta_ + n_group_ + (n_group_ > 0 ? 1 : 0)) {
  if (spec_.categories < 2) throw Error(Errc::InvalidArgument, "need at least 2 categories");
  for (const auto& obs : data_) {
    if (obs.covariates.x.size() != n_beta_) {
      throw Error(Errc::InvalidArgument, "observation width does not match beta_names");
    }
    if (obs.covariates.group && *obs.covariates.group >= n_group_) {
      throw Error(Errc::InvalidArgument, "observation group index out of range");
    }
    if (obs.rating < 1 || obs.rating > spec_.categories) {
      throw Error(Errc::InvalidRating, "rating outside 1.." + std::to_string(spec_.categories));
    }
  }
}

std::vector<std::string> OrdinalPosterior::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < n_cut_; ++k) names.push_back("cutpoint[" + std::to_string(k + 1) + "]");
  for (const auto& b : spec_.beta_names) names.push_back("beta[" + b + "]");
  for (const auto& g : spec_.group_names) names.push_back("alpha[" + g + "]");
  if (n_group_ > 0) names.push_back("sigma_alpha");
  return names;
}

OrdinalModel OrdinalPosterior::constrain(std::span<const double> theta) const {
  OrdinalModel m;
  m.cutpoints.resize(n_cut_);
  m.cutpoints[0] = theta[0];
  for (std::size_t k = 1; k < n_cut_; ++k) m.cutpoints[k] = m.cutpoints[k - 1] + std::exp(theta[k]);
  m.beta_names = spec_.beta_names;
  m.beta.assign(theta.begin() + static_cast<std::ptrdiff_t>(n_cut_),
                theta.begin() + static_cast<std::ptrdiff_t>(n_cut_ + n_beta_));
  m.alpha.assign(theta.begin() + static_cast<std::ptrdiff_t>(n_cut_ + n_beta_),
                 theta.begin() + static_cast<std::ptrdiff_t>(n_cut_ + n_beta_ + n_group_));
  m.sigma_alpha = n_group_ > 0 ? std::exp(theta[dim_ - 1]) : 1.0;
  return m;
}

std::vector<double> OrdinalPosterior::constrained_values(std::span<const double> theta) const {
  const auto m = constrain(theta);
  std::vector<double> out;
  out.reserve(dim_);
  out.insert(out.end(), m.cutpoints.begin(), m.cutpoints.end());
  out.insert(out.end(), m.beta.begin(), m.beta.end());
  out.insert(out.end(), m.alpha.begin(), m.alpha.end());
  if (n_group_ > 0) out.push_back(m.sigma_alpha);
  return out;
}

double OrdinalPosterior::log_density(std::span<const double> theta, std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  for (double t : theta) {
    if (!std::isfinite(t)) return -std::numeric_limits<double>::infinity();
  }

  std::vector<double> cut(n_cut_);
  cut[0] = theta[0];
  for (std::size_t k = 1; k < n_cut_; ++k) cut[k] = cut[k - 1] + std::exp(theta[k]);
  const double* beta = theta.data() + n_cut_;
  const double* alpha = theta.data() + n_cut_ + n_beta_;

  std::vector<double> d_cut(n_cut_, 0.0);
  double* d_beta = grad.data() + n_cut_;
  double* d_alpha = grad.data() + n_cut_ + n_beta_;

  double lp = 0.0;
  const int k_max = spec_.categories;
  for (const auto& obs : data_) {
    double eta = obs.covariates.group ? alpha[*obs.covariates.group] : 0.0;
    const auto& x = obs.covariates.x;
    for (std::size_t i = 0; i < n_beta_; ++i) eta += x[i] * beta[i];
    const auto t = category_term(cut, eta, obs.rating);
    lp += obs.weight * t.log_prob;
    if (obs.rating < k_max) d_cut[obs.rating - 1] += obs.weight * t.d_upper;
    if (obs.rating > 1) d_cut[obs.rating - 2] += obs.weight * t.d_lower;
    const double d_eta = -obs.weight * (t.d_upper + t.d_lower);
    if (obs.covariates.group) d_alpha[*obs.covariates.group] += d_eta;
    for (std::size_t i = 0; i < n_beta_; ++i) d_beta[i] += d_eta * x[i];
  }
  if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();

  // Cutpoint chain rule: c_k depends on theta_0 and every increment up to k.
  double tail = 0.0;
  for (std::size_t k = n_cut_; k-- > 1;) {
    tail += d_cut[k];
    grad[k] = tail * std::exp(theta[k]);
  }
  grad[0] = tail + d_cut[0];

  // Priors on the unconstrained cutpoint parameters.
  const double cut_var = kCutpointPriorSd * kCutpointPriorSd;
  for (std::size_t k = 0; k < n_cut_; ++k) {
    lp += -0.5 * theta[k] * theta[k] / cut_var;
    grad[k] += -theta[k] / cut_var;
  }

  const double beta_var = prior_scale_ * prior_scale_;
  for (std::size_t i = 0; i < n_beta_; ++i) {
    lp += -0.5 * beta[i] * beta[i] / beta_var;
    d_beta[i] += -beta[i] / beta_var;
  }

  if (n_group_ > 0) {
    const double tau = theta[dim_ - 1];
    const double inv_var = std::exp(-2.0 * tau);
    double ss = 0.0;
    for (std::size_t j = 0; j < n_group_; ++j) {
      ss += alpha[j] * alpha[j];
      d_alpha[j] += -alpha[j] * inv_var;
    }
    const double sigma2 = std::exp(2.0 * tau);
    const double j = static_cast<double>(n_group_);
    // alpha_j ~ N(0, sigma); sigma ~ half-N(0, 1); Jacobian of sigma = exp(tau).
    lp += -j * tau - 0.5 * ss * inv_var - 0.5 * sigma2 + tau;
    grad[dim_ - 1] = -j + ss * inv_var - sigma2 + 1.0;
  }
  return lp;
}

// ---------------------------------------------------------------------------
// FitResult
// ---------------------------------------------------------------------------

std::size_t FitResult::iterations() const {
  if (draws.empty() || draws.front().empty()) return 0;
  return draws.front().front().size();
}

std::optional<std::size_t> FitResult::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

const ParameterSummary& FitResult::summary(std::string_view name) const {
  auto i = find(name);
  if (!i) throw Error(Errc::InvalidArgument, "no parameter named " + std::string(name));
  return summaries.at(*i);
}

std::vector<double> FitResult::pooled(std::string_view name) const {
  auto i = find(name);
  if (!i) throw Error(Errc::InvalidArgument, "no parameter named " + std::string(name));
  std::vector<double> out;
  for (const auto& chain : draws[*i]) out.insert(out.end(), chain.begin(), chain.end());
  return out;
}

OrdinalModel FitResult::model_at(std::size_t chain, std::size_t iteration) const {
  const std::size_t n_cut = static_cast<std::size_t>(spec.categories - 1);
  const std::size_t n_beta = spec.beta_names.size();
  const std::size_t n_group = spec.group_names.size();
  OrdinalModel m;
  std::size_t p = 0;
  for (std::size_t k = 0; k < n_cut; ++k) m.cutpoints.push_back(draws[p++][chain][iteration]);
  m.beta_names = spec.beta_names;
  for (std::size_t k = 0; k < n_beta; ++k) m.beta.push_back(draws[p++][chain][iteration]);
  for (std::size_t k = 0; k < n_group; ++k) m.alpha.push_back(draws[p++][chain][iteration]);
  if (n_group > 0) m.sigma_alpha = draws[p][chain][iteration];
  return m;
}

double FitResult::max_rhat() const {
  double r = 0.0;
  for (const auto& s : summaries) r = std::max(r, s.rhat);
  return r;
}

double FitResult::min_ess_bulk() const {
  double e = std::numeric_limits<double>::infinity();
  for (const auto& s : summaries) e = std::min(e, s.ess_bulk);
  return e;
}

void summarize(FitResult& result) {
  result.summaries.clear();
  for (std::size_t p = 0; p < result.names.size(); ++p) {
    const auto& chains = result.draws[p];
    std::vector<double> all;
    for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
    ParameterSummary s;
    s.mean = std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
    double ss = 0.0;
    for (double x : all) ss += (x - s.mean) * (x - s.mean);
    s.sd = all.size() > 1 ? std::sqrt(ss / static_cast<double>(all.size() - 1)) : 0.0;
    const auto interval = hdi(all, result.hdi_mass);
    s.hdi_low = interval.low;
    s.hdi_high = interval.high;
    s.rhat = split_rhat(chains);
    s.ess_bulk = ess_bulk(chains);
    result.summaries.push_back(s);
  }
}

FitResult fit(std::span<const Observation> data, const FitSpec& spec, const McmcConfig& config,
              double hdi_mass) {
  config.validate();
  if (data.empty()) throw Error(Errc::DegenerateData, "no observations");
  std::set<int> categories;
  for (const auto& obs : data) {
    if (obs.weight > 0) categories.insert(obs.rating);
  }
  if (categories.size() < 2) {
    throw Error(Errc::DegenerateData, "only one rating category observed; cutpoints unidentified");
  }

  const OrdinalPosterior posterior(spec, compress(data), config.prior_scale);
  const std::size_t dim = posterior.dimension();
  const LogDensityFn density = [&posterior](std::span<const double> theta, std::span<double> grad) {
    return posterior.log_density(theta, grad);
  };

  NutsConfig nuts;
  nuts.warmup = config.warmup_draws;
  nuts.draws = config.post_warmup_draws;
  nuts.max_depth = config.max_tree_depth;
  nuts.target_accept = config.target_accept;

  const auto n_chains = static_cast<std::size_t>(config.chains);
  std::vector<ChainOutput> outputs(n_chains);
  auto run_chain = [&](std::size_t c) {
    Rng rng = make_stream(config.seed, c + 1);
    std::vector<double> init(dim);
    std::vector<double> scratch(dim);
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (auto& v : init) v = -2.0 + 4.0 * uniform01(rng);
      if (std::isfinite(posterior.log_density(init, scratch))) break;
    }
    outputs[c] = run_nuts_chain(density, init, nuts, rng);
  };

  if (config.parallel_chains && n_chains > 1) {
    std::vector<std::thread> threads;
    threads.reserve(n_chains);
    for (std::size_t c = 0; c < n_chains; ++c) threads.emplace_back(run_chain, c);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t c = 0; c < n_chains; ++c) run_chain(c);
  }

  FitResult result;
  result.spec = spec;
  result.config = config;
  result.hdi_mass = hdi_mass;
  result.names = posterior.parameter_names();
  result.n_observations = 0;
  for (const auto& obs : data) result.n_observations += static_cast<std::size_t>(obs.weight);
  const auto iters = static_cast<std::size_t>(config.post_warmup_draws);
  result.draws.assign(dim, ChainDraws(n_chains, std::vector<double>(iters)));
  for (std::size_t c = 0; c < n_chains; ++c) {
    result.divergence_count += outputs[c].divergences;
    result.step_sizes.push_back(outputs[c].step_size);
    for (std::size_t it = 0; it < iters; ++it) {
      const auto values = posterior.constrained_values(outputs[c].draws[it]);
      for (std::size_t p = 0; p < dim; ++p) result.draws[p][c][it] = values[p];
    }
  }
  summarize(result);
  return result;
}

// ---------------------------------------------------------------------------
// Posterior predictive check
// ---------------------------------------------------------------------------

bool PredictiveCheck::all_inside() const {
  if (low.empty()) return false;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (observed[k] < low[k] || observed[k] > high[k]) return false;
  }
  return true;
}

PredictiveCheck posterior_predictive_check(const FitResult& fit, std::span<const Observation> data,
                                           Rng& rng, std::size_t n_draws, double mass) {
  const auto k = static_cast<std::size_t>(fit.spec.categories);
  PredictiveCheck out;
  out.mass = mass;
  out.observed.assign(k, 0.0);
  double total = 0.0;
  for (const auto& obs : data) {
    out.observed[static_cast<std::size_t>(obs.rating - 1)] += obs.weight;
    total += obs.weight;
  }
  if (total > 0) {
    for (double& v : out.observed) v /= total;
  }
  const std::size_t chains = fit.chains();
  const std::size_t iters = fit.iterations();
  const std::size_t pool = chains * iters;
  if (n_draws == 0 || pool == 0 || total == 0) return out;
  n_draws = std::min(n_draws, pool);

  std::vector<std::vector<double>> replicated(k);
  for (std::size_t s = 0; s < n_draws; ++s) {
    const std::size_t flat = s * pool / n_draws;
    const auto model = fit.model_at(flat / iters, flat % iters);
    std::vector<double> counts(k, 0.0);
    for (const auto& obs : data) {
      const double eta = linear_predictor(model, obs.covariates);
      const auto copies = static_cast<long long>(std::llround(obs.weight));
      for (long long r = 0; r < copies; ++r) {
        counts[static_cast<std::size_t>(sample_rating_at(model.cutpoints, eta, rng) - 1)] += 1.0;
      }
    }
    for (std::size_t j = 0; j < k; ++j) replicated[j].push_back(counts[j] / total);
  }

  const double tail = 0.5 * (1.0 - mass);
  out.draws_used = n_draws;
  for (std::size_t j = 0; j < k; ++j) {
    auto& v = replicated[j];
    std::sort(v.begin(), v.end());
    out.mean.push_back(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
    out.low.push_back(quantile_sorted(v, tail));
    out.high.push_back(quantile_sorted(v, 1.0 - tail));
  }
  return out;
}

}  // namespace rae
