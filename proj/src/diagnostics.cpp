#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "rae/error.hpp"
#include "rae/infer.hpp"

namespace rae {

namespace {

void check_shape(const ChainDraws& draws) {
  if (draws.size() < 2) throw Error(Errc::InsufficientDraws, "need at least 2 chains");
  const std::size_t n = draws.front().size();
  for (const auto& c : draws) {
    if (c.size() != n) throw Error(Errc::InsufficientDraws, "chains differ in length");
  }
  if (n < 4) throw Error(Errc::InsufficientDraws, "need at least 4 iterations per chain");
}

ChainDraws split_chains(const ChainDraws& draws) {
  const std::size_t n = draws.front().size();
  const std::size_t half = n / 2;
  ChainDraws out;
  out.reserve(2 * draws.size());
  for (const auto& c : draws) {
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Pooled ranks (average for ties) mapped to normal scores.
ChainDraws rank_normalize(const ChainDraws& draws) {
  const std::size_t m = draws.size();
  const std::size_t n = draws.front().size();
  const std::size_t total = m * n;
  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(total);
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = 0; i < n; ++i) pooled.emplace_back(draws[c][i], c * n + i);
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> ranks(total);
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j + 1 < total && pooled[j + 1].first == pooled[i].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[pooled[k].second] = avg;
    i = j + 1;
  }
  const boost::math::normal standard;
  ChainDraws out(m, std::vector<double>(n));
  const double denom = static_cast<double>(total) + 0.25;
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      out[c][i] = boost::math::quantile(standard, (ranks[c * n + i] - 0.375) / denom);
    }
  }
  return out;
}

/// Autocovariance at `lag` (biased, divided by n).
double autocovariance(const std::vector<double>& chain, double mean, std::size_t lag) {
  const std::size_t n = chain.size();
  double s = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) s += (chain[i] - mean) * (chain[i + lag] - mean);
  return s / static_cast<double>(n);
}

double ess_of(const ChainDraws& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    vars[c] = sample_variance(chains[c]);
  }
  const double mean_var = mean_of(vars);
  double var_plus = mean_var * static_cast<double>(n - 1) / static_cast<double>(n);
  if (m > 1) var_plus += sample_variance(means);
  if (!(var_plus > 0.0) || !std::isfinite(var_plus)) return 0.0;

  auto mean_acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += autocovariance(chains[c], means[c], lag);
    return s / static_cast<double>(m);
  };

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
  rho[1] = rho_odd;
  std::size_t t = 1;
  while (t + 5 < n && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[t + 1] = rho_even;
      rho[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (rho_even > 0.0 && max_t + 1 < n) rho[max_t + 1] = rho_even;

  // Initial monotone sequence.
  for (std::size_t s = 1; s + 2 <= max_t; s += 2) {
    if (rho[s + 1] + rho[s + 2] > rho[s - 1] + rho[s]) {
      rho[s + 1] = 0.5 * (rho[s - 1] + rho[s]);
      rho[s + 2] = rho[s + 1];
    }
  }

  const double total = static_cast<double>(m * n);
  double tau = -1.0;
  for (std::size_t s = 0; s < max_t && s < n; ++s) tau += 2.0 * rho[s];
  if (max_t + 1 < n) tau += rho[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

}  // namespace

double split_rhat(const ChainDraws& draws) {
  check_shape(draws);
  const auto chains = split_chains(draws);
  const std::size_t n = chains.front().size();
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(sample_variance(c));
  }
  const double w = mean_of(vars);
  const double b = static_cast<double>(n) * sample_variance(means);
  if (!(w > 0.0)) return b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double nn = static_cast<double>(n);
  return std::sqrt((w * (nn - 1.0) / nn + b / nn) / w);
}

double ess_bulk(const ChainDraws& draws) {
  check_shape(draws);
  const double first = draws.front().front();
  bool constant = true;
  for (const auto& c : draws) {
    for (double x : c) {
      if (x != first) {
        constant = false;
        break;
      }
    }
    if (!constant) break;
  }
  if (constant) return 0.0;
  return ess_of(split_chains(rank_normalize(draws)));
}

Interval hdi(std::span<const double> samples, double mass) {
  if (samples.size() < 10) throw Error(Errc::InsufficientDraws, "HDI needs at least 10 samples");
  if (!(mass > 0.0 && mass < 1.0)) throw Error(Errc::InvalidArgument, "HDI mass must be in (0,1)");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  auto k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k <= n; ++i) {
    const double width = sorted[i + k - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {sorted[best], sorted[best + k - 1]};
}

}  // namespace rae
