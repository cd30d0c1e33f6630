#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "rae/error.hpp"
#include "rae/infer.hpp"
#include "rae/nuts.hpp"
#include "rae/ordinal.hpp"

using namespace rae;

namespace {

ChainDraws iid_normal(std::uint64_t seed, std::size_t chains, std::size_t n, double shift_per_chain = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0, 1);
  ChainDraws d(chains, std::vector<double>(n));
  for (std::size_t c = 0; c < chains; ++c) {
    for (auto& x : d[c]) x = nd(rng) + shift_per_chain * static_cast<double>(c);
  }
  return d;
}

std::vector<Observation> simulate(const OrdinalModel& m, std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  std::normal_distribution<double> nd(0, 1);
  std::vector<Observation> data;
  for (std::size_t i = 0; i < n; ++i) {
    Observation o;
    o.covariates.x = {std::round(nd(rng))};
    o.covariates.group = i % m.alpha.size();
    o.rating = sample_rating(m, o.covariates, rng);
    data.push_back(o);
  }
  return data;
}

}  // namespace

TEST_CASE("split R-hat") {
  CHECK(split_rhat(iid_normal(1, 4, 1000)) < 1.01);
  CHECK(split_rhat(iid_normal(2, 4, 1000, 2.0)) > 1.5);
  const ChainDraws constant(4, std::vector<double>(100, 3.0));
  CHECK(split_rhat(constant) == 1.0);
  const ChainDraws tiny(1, std::vector<double>(3, 0.0));
  CHECK_THROWS_AS(split_rhat(tiny), Error);
}

TEST_CASE("bulk ESS tracks the autocorrelation") {
  const auto iid = iid_normal(3, 4, 2000);
  const double e = ess_bulk(iid);
  CHECK(e > 0.8 * 8000);
  CHECK(e < 1.2 * 8000);

  // AR(1) with rho = 0.9: ESS ~ N (1 - rho) / (1 + rho)
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0, 1);
  ChainDraws ar(4, std::vector<double>(5000));
  for (auto& chain : ar) {
    double x = nd(rng) / std::sqrt(1 - 0.81);
    for (auto& v : chain) {
      x = 0.9 * x + nd(rng);
      v = x;
    }
  }
  const double expected = 20000.0 * 0.1 / 1.9;
  const double got = ess_bulk(ar);
  CHECK(got > 0.7 * expected);
  CHECK(got < 1.3 * expected);

  const ChainDraws constant(4, std::vector<double>(100, 1.0));
  CHECK(ess_bulk(constant) == 0.0);
}

TEST_CASE("HDI") {
  std::vector<double> u(10001);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = static_cast<double>(i) / 10000.0;
  const auto h = hdi(u, 0.5);
  CHECK(h.high - h.low == doctest::Approx(0.5).epsilon(1e-3));

  const auto z = iid_normal(5, 1, 200000)[0];
  const auto hz = hdi(z, 0.94);
  CHECK(hz.low == doctest::Approx(-1.881).epsilon(0.02));
  CHECK(hz.high == doctest::Approx(1.881).epsilon(0.02));

  // Skewed: exponential HDI starts at the minimum
  std::mt19937_64 rng(6);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> e(50000);
  for (auto& x : e) x = ex(rng);
  const auto he = hdi(e, 0.9);
  CHECK(he.low < 0.01);
  CHECK(he.high == doctest::Approx(-std::log(0.1)).epsilon(0.03));
}

TEST_CASE("NUTS recovers a correlated Gaussian") {
  // N(mu, S) with S = [[1, .8],[.8, 1]] scaled by (1, 4)
  const double s1 = 1.0, s2 = 2.0, rho = 0.8;
  const double det = s1 * s1 * s2 * s2 * (1 - rho * rho);
  const double p11 = s2 * s2 / det, p22 = s1 * s1 / det, p12 = -rho * s1 * s2 / det;
  const LogDensityFn target = [&](std::span<const double> t, std::span<double> g) {
    const double a = t[0] - 1.0, b = t[1] + 2.0;
    g[0] = -(p11 * a + p12 * b);
    g[1] = -(p12 * a + p22 * b);
    return -0.5 * (p11 * a * a + 2 * p12 * a * b + p22 * b * b);
  };
  for (auto metric : {MetricKind::Dense, MetricKind::Diagonal}) {
    NutsConfig cfg;
    cfg.metric = metric;
    cfg.warmup = 500;
    cfg.draws = 4000;
    Rng rng = make_stream(7, 0);
    const auto out = run_nuts_chain(target, {0.0, 0.0}, cfg, rng);
    REQUIRE(out.draws.size() == 4000);
    double m0 = 0, m1 = 0;
    for (const auto& d : out.draws) {
      m0 += d[0] / 4000;
      m1 += d[1] / 4000;
    }
    double v0 = 0, v1 = 0, c01 = 0;
    for (const auto& d : out.draws) {
      v0 += (d[0] - m0) * (d[0] - m0) / 4000;
      v1 += (d[1] - m1) * (d[1] - m1) / 4000;
      c01 += (d[0] - m0) * (d[1] - m1) / 4000;
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(0.1));
    CHECK(m1 == doctest::Approx(-2.0).epsilon(0.1));
    CHECK(std::sqrt(v0) == doctest::Approx(s1).epsilon(0.1));
    CHECK(std::sqrt(v1) == doctest::Approx(s2).epsilon(0.1));
    CHECK(c01 / std::sqrt(v0 * v1) == doctest::Approx(rho).epsilon(0.05));
    CHECK(out.divergences == 0);
    CHECK(out.mean_accept > 0.6);
    CHECK(out.inv_metric.size() == 4);
  }
}

TEST_CASE("hierarchical fit: recovery, determinism, thread independence") {
  OrdinalModel truth;
  truth.cutpoints = {-2.0, -0.7, 0.7, 2.0};
  truth.beta_names = {"x"};
  truth.beta = {0.6};
  truth.alpha = {-1.0, 0.0, 1.0};
  truth.sigma_alpha = 1.0;
  const auto data = simulate(truth, 900, 11);

  FitSpec spec;
  spec.beta_names = {"x"};
  spec.group_names = {"a", "b", "c"};
  McmcConfig cfg;
  cfg.chains = 2;
  cfg.warmup_draws = 300;
  cfg.post_warmup_draws = 400;
  cfg.seed = 5;
  const auto f = fit(data, spec, cfg);
  CHECK(f.chains() == 2);
  CHECK(f.iterations() == 400);
  const auto& b = f.summary("beta[x]");
  CHECK(b.hdi_low < 0.6);
  CHECK(b.hdi_high > 0.6);
  CHECK(f.max_rhat() < 1.05);
  CHECK(f.summary("alpha[c]").mean > f.summary("alpha[a]").mean);
  CHECK_THROWS_AS(f.summary("nope"), Error);

  auto cfg_par = cfg;
  cfg_par.parallel_chains = true;
  const auto g = fit(data, spec, cfg_par);
  CHECK(g.draws == f.draws);

  // posterior predictive check on the fitting data
  Rng rng = make_stream(1, 99);
  const auto ppc = posterior_predictive_check(f, data, rng, 100);
  CHECK(ppc.observed.size() == 5);
  CHECK(ppc.draws_used == 100);
  CHECK(std::accumulate(ppc.observed.begin(), ppc.observed.end(), 0.0) == doctest::Approx(1.0));
  for (std::size_t k = 0; k < 5; ++k) CHECK(ppc.low[k] <= ppc.high[k]);
}

TEST_CASE("fit rejects degenerate data") {
  std::vector<Observation> data(20, Observation{{{0.0}, std::nullopt}, 3, 1.0});
  FitSpec spec;
  spec.beta_names = {"x"};
  try {
    fit(data, spec, McmcConfig{});
    FAIL("expected DegenerateData");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateData);
  }
  CHECK_THROWS_AS(fit({}, spec, McmcConfig{}), Error);
}

TEST_CASE("MCMC config validation") {
  McmcConfig c;
  c.chains = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.target_accept = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
}
