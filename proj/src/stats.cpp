#include "rae/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "rae/error.hpp"

namespace rae {

namespace {

double normal_cdf(double z) { return boost::math::cdf(boost::math::normal(), z); }
double normal_sf(double z) { return boost::math::cdf(boost::math::complement(boost::math::normal(), z)); }

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

/// Shrinks |d| by the continuity correction without crossing zero.
double corrected(double d) {
  const double m = std::max(std::abs(d) - 0.5, 0.0);
  return d < 0 ? -m : m;
}

/// Exact null distribution of W+ given (possibly tied) ranks: counts over all
/// 2^n sign assignments, indexed in half-rank units.
std::vector<double> signed_rank_distribution(std::span<const double> ranks) {
  std::size_t total = 0;
  std::vector<std::size_t> half(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    half[i] = static_cast<std::size_t>(std::lround(2.0 * ranks[i]));
    total += half[i];
  }
  std::vector<double> counts(total + 1, 0.0);
  counts[0] = 1.0;
  std::size_t reach = 0;
  for (std::size_t h : half) {
    for (std::size_t s = reach + 1; s-- > 0;) {
      if (counts[s] != 0.0) counts[s + h] += counts[s];
    }
    reach += h;
  }
  const double norm = std::ldexp(1.0, static_cast<int>(ranks.size()));
  for (double& c : counts) c /= norm;
  return counts;
}

}  // namespace

std::string_view to_string(Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return "two-sided";
    case Alternative::Greater: return "greater";
    case Alternative::Less: return "less";
  }
  return "?";
}

std::string_view to_string(EffectDenominator d) {
  return d == EffectDenominator::TotalPairs ? "n" : "n_prime";
}

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double tie_term(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double s = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    s += t * t * t - t;
    i = j;
  }
  return s;
}

double effect_size_r(double z, std::size_t n) {
  if (n == 0) throw Error(Errc::InvalidArgument, "effect size needs n > 0");
  return std::abs(z) / std::sqrt(static_cast<double>(n));
}

double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) throw Error(Errc::InvalidArgument, "chi-square df must be positive");
  if (!(x > 0.0)) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

KruskalWallisResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw Error(Errc::EmptyGroup, "Kruskal-Wallis needs at least 2 groups");
  std::vector<double> pooled;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw Error(Errc::EmptyGroup, "group " + std::to_string(g) + " is empty");
    }
    pooled.insert(pooled.end(), groups[g].begin(), groups[g].end());
  }
  const auto ranks = mid_ranks(pooled);
  const double n = static_cast<double>(pooled.size());

  KruskalWallisResult out;
  double sum = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[offset + i];
    offset += g.size();
    out.mean_ranks.push_back(r / static_cast<double>(g.size()));
    out.sizes.push_back(g.size());
    sum += r * r / static_cast<double>(g.size());
  }
  const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
  double h = 0.0;
  if (correction > 0.0) h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
  h = std::max(h, 0.0);

  out.test.statistic = h;
  out.test.p_value = clamp01(chi_square_sf(h, static_cast<double>(groups.size() - 1)));
  out.test.n_effective = pooled.size();
  out.test.n_total = pooled.size();
  return out;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, std::size_t adjust) {
  if (a.empty() || b.empty()) throw Error(Errc::EmptyGroup, "Mann-Whitney needs two non-empty samples");
  if (adjust == 0) throw Error(Errc::InvalidArgument, "adjustment factor must be >= 1");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = mid_ranks(pooled);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;

  double ra = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ra += ranks[i];
  const double ua = ra - na * (na + 1.0) / 2.0;
  const double ub = na * nb - ua;

  const double mu = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_term(pooled) / (n * (n - 1.0)));
  const double z = var > 0.0 ? corrected(ua - mu) / std::sqrt(var) : 0.0;
  const double p_raw = clamp01(2.0 * normal_sf(std::abs(z)));

  TestResult r;
  r.statistic = std::min(ua, ub);
  r.z = z;
  r.p_unadjusted = p_raw;
  r.adjust_factor = adjust;
  r.p_value = clamp01(p_raw * static_cast<double>(adjust));
  r.n_effective = a.size() + b.size();
  r.n_total = r.n_effective;
  r.effect_r = effect_size_r(z, r.n_effective);
  r.rank_biserial = (ua - ub) / (na * nb);
  r.cles = ua / (na * nb);
  return r;
}

TestResult wilcoxon_differences(std::span<const double> differences, const WilcoxonOptions& options) {
  std::vector<double> nonzero;
  for (double d : differences) {
    if (!std::isfinite(d)) throw Error(Errc::InvalidArgument, "non-finite difference");
    if (d != 0.0) nonzero.push_back(d);
  }
  if (nonzero.empty()) throw Error(Errc::AllTies, "every difference is zero");

  std::vector<double> magnitude(nonzero.size());
  std::transform(nonzero.begin(), nonzero.end(), magnitude.begin(),
                 [](double d) { return std::abs(d); });
  const auto ranks = mid_ranks(magnitude);
  double w_plus = 0.0, w_minus = 0.0;
  for (std::size_t i = 0; i < nonzero.size(); ++i) (nonzero[i] > 0 ? w_plus : w_minus) += ranks[i];

  const double np = static_cast<double>(nonzero.size());
  const double mu = np * (np + 1.0) / 4.0;
  const double var = np * (np + 1.0) * (2.0 * np + 1.0) / 24.0 - tie_term(magnitude) / 48.0;
  const double sd = std::sqrt(std::max(var, 0.0));

  double z = 0.0, p_normal = 1.0;
  switch (options.alternative) {
    case Alternative::TwoSided:
      z = sd > 0.0 ? -std::abs(corrected(w_plus - mu)) / sd : 0.0;
      p_normal = 2.0 * normal_cdf(z);
      break;
    case Alternative::Greater:
      z = sd > 0.0 ? (w_plus - mu - 0.5) / sd : 0.0;
      p_normal = normal_sf(z);
      break;
    case Alternative::Less:
      z = sd > 0.0 ? (w_plus - mu + 0.5) / sd : 0.0;
      p_normal = normal_cdf(z);
      break;
  }

  TestResult r;
  r.statistic = std::min(w_plus, w_minus);
  r.w_plus = w_plus;
  r.w_minus = w_minus;
  r.z = z;
  r.p_normal = clamp01(p_normal);
  r.n_effective = nonzero.size();
  r.n_total = differences.size();

  if (nonzero.size() <= options.exact_threshold) {
    const auto dist = signed_rank_distribution(ranks);
    const auto at = static_cast<std::size_t>(std::lround(2.0 * w_plus));
    double lower = 0.0, upper = 0.0;
    for (std::size_t s = 0; s < dist.size(); ++s) {
      if (s <= at) lower += dist[s];
      if (s >= at) upper += dist[s];
    }
    double p = 1.0;
    switch (options.alternative) {
      case Alternative::TwoSided: p = 2.0 * std::min(lower, upper); break;
      case Alternative::Greater: p = upper; break;
      case Alternative::Less: p = lower; break;
    }
    r.p_exact = clamp01(p);
    r.exact = true;
    r.p_value = *r.p_exact;
  } else {
    r.p_value = *r.p_normal;
  }

  r.effect_r_total = effect_size_r(z, r.n_total);
  r.effect_r_nontied = effect_size_r(z, r.n_effective);
  r.denominator = options.denominator;
  r.effect_r = options.denominator == EffectDenominator::TotalPairs ? r.effect_r_total
                                                                    : r.effect_r_nontied;
  r.rank_biserial = (w_plus - w_minus) / (w_plus + w_minus);
  r.cles = w_plus / (w_plus + w_minus);
  return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                const WilcoxonOptions& options) {
  if (x.size() != y.size()) throw Error(Errc::InvalidArgument, "paired samples differ in length");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  return wilcoxon_differences(d, options);
}

TestResult wilcoxon_one_sample(std::span<const double> x, double mu, const WilcoxonOptions& options) {
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - mu;
  return wilcoxon_differences(d, options);
}

TestResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::InvalidArgument, "Spearman inputs differ in length");
  if (x.size() < 3) throw Error(Errc::InvalidArgument, "Spearman needs at least 3 pairs");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw Error(Errc::ConstantInput, "constant input has no ranking");
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  TestResult r;
  r.statistic = rho;
  r.rho = rho;
  r.n_effective = x.size();
  r.n_total = x.size();
  if (std::abs(rho) >= 1.0 || n <= 2.0) {
    r.p_value = std::abs(rho) >= 1.0 ? 0.0 : 1.0;
  } else {
    const double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
    const boost::math::students_t dist(n - 2.0);
    r.p_value = clamp01(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }
  return r;
}

FdrResult benjamini_hochberg(std::span<const double> p_values, double q) {
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::InvalidArgument, "p-values must lie in [0,1]");
  }
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  FdrResult out{std::vector<double>(m), std::vector<bool>(m)};
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double p = p_values[order[k]];
    // m / rank >= 1, but the product can round below p
    const double scaled = std::max(p, p * static_cast<double>(m) / static_cast<double>(k + 1));
    running = std::min(running, std::min(1.0, scaled));
    out.adjusted[order[k]] = running;
  }
  for (std::size_t i = 0; i < m; ++i) out.rejected[i] = out.adjusted[i] <= q;
  return out;
}

std::vector<double> bonferroni(std::span<const double> p_values) {
  std::vector<double> out;
  out.reserve(p_values.size());
  const double m = static_cast<double>(p_values.size());
  for (double p : p_values) out.push_back(std::min(1.0, p * m));
  return out;
}

}  // namespace rae
