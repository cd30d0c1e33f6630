#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rae/error.hpp"
#include "rae/stats.hpp"

using namespace rae;

namespace {

std::vector<double> likert(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> d(1, 5);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("mid ranks agree with the counting oracle") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const auto v = likert(rng, 1 + rep % 17);
    const auto got = mid_ranks(v);
    const auto want = oracle::mid_ranks(v);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(got[i] == want[i]);
    CHECK(tie_term(v) == oracle::tie_term(v));
  }
}

TEST_CASE("mid ranks sum to n(n+1)/2") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const auto v = likert(rng, 1 + rep);
    const auto r = mid_ranks(v);
    double s = 0;
    for (double x : r) s += x;
    const double n = static_cast<double>(v.size());
    CHECK(s == doctest::Approx(n * (n + 1) / 2));
  }
}

TEST_CASE("Kruskal-Wallis H matches the definition") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::vector<double>> groups(2 + rep % 5);
    for (auto& g : groups) g = likert(rng, 2 + rng() % 6);
    const auto r = kruskal_wallis(groups);
    CHECK(r.test.statistic == doctest::Approx(oracle::kruskal_h(groups)).epsilon(1e-12));
    CHECK(r.test.p_value >= 0.0);
    CHECK(r.test.p_value <= 1.0);
  }
}

TEST_CASE("Kruskal-Wallis edge cases") {
  std::vector<std::vector<double>> same{{3, 3}, {3, 3, 3}};
  const auto r = kruskal_wallis(same);
  CHECK(r.test.statistic == 0.0);
  CHECK(r.test.p_value == 1.0);

  std::vector<std::vector<double>> empty{{1, 2}, {}};
  CHECK_THROWS_AS(kruskal_wallis(empty), Error);
  try {
    kruskal_wallis(empty);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyGroup);
  }
}

TEST_CASE("Kruskal-Wallis p for two groups without ties equals chi-square(1) tail") {
  std::vector<std::vector<double>> g{{1, 2, 3, 4}, {5, 6, 7, 8}};
  const auto r = kruskal_wallis(g);
  const double h = oracle::kruskal_h(g);
  // chi-square with 1 df: P(X > h) = erfc(sqrt(h/2))
  CHECK(r.test.p_value == doctest::Approx(std::erfc(std::sqrt(h / 2))).epsilon(1e-10));
}

TEST_CASE("Mann-Whitney U matches pair counting") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const auto a = likert(rng, 2 + rng() % 8);
    const auto b = likert(rng, 2 + rng() % 8);
    const double ua = oracle::mann_whitney_ua(a, b);
    const double ub = oracle::mann_whitney_ua(b, a);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    CHECK(ua + ub == doctest::Approx(na * nb));
    const auto r = mann_whitney_u(a, b);
    CHECK(r.statistic == std::min(ua, ub));
    CHECK(*r.cles == doctest::Approx(ua / (na * nb)));
    CHECK(*r.rank_biserial == doctest::Approx((ua - ub) / (na * nb)));

    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const double n = na + nb;
    const double var = na * nb / 12.0 * ((n + 1) - oracle::tie_term(pooled) / (n * (n - 1)));
    if (var > 0) {
      const double d = ua - na * nb / 2;
      const double cc = d > 0 ? std::max(d - 0.5, 0.0) : std::min(d + 0.5, 0.0);
      const double z = cc / std::sqrt(var);
      CHECK(*r.z == doctest::Approx(z).epsilon(1e-10));
      CHECK(r.p_value == doctest::Approx(std::min(1.0, 2 * oracle::normal_sf(std::abs(z)))).epsilon(1e-10));
    }
  }
}

TEST_CASE("Mann-Whitney adjustment multiplies and clamps") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6}, b{4, 5, 6, 7, 8, 9};
  const auto raw = mann_whitney_u(a, b);
  const auto adj = mann_whitney_u(a, b, 45);
  CHECK(adj.p_value == doctest::Approx(std::min(1.0, raw.p_value * 45)));
  CHECK(*adj.p_unadjusted == doctest::Approx(raw.p_value));
  CHECK(adj.adjust_factor == 45);
}

TEST_CASE("Wilcoxon exact p equals sign enumeration") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> diff(-4, 4);
  int checked = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rep % 12;
    std::vector<double> d(n);
    for (auto& x : d) x = diff(rng);
    if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0; })) continue;
    const auto want = oracle::signed_rank_enumeration(d);
    for (auto alt : {Alternative::TwoSided, Alternative::Greater, Alternative::Less}) {
      WilcoxonOptions opt;
      opt.alternative = alt;
      const auto r = wilcoxon_differences(d, opt);
      REQUIRE(r.exact);
      CHECK(*r.w_plus == doctest::Approx(want.w_plus));
      const double p = alt == Alternative::TwoSided ? want.p_two_sided
                       : alt == Alternative::Greater ? want.p_greater
                                                     : want.p_less;
      CHECK(r.p_value == doctest::Approx(p).epsilon(1e-12));
    }
    ++checked;
  }
  CHECK(checked > 250);
}

TEST_CASE("Wilcoxon normal approximation above the exact threshold") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0.3, 1.0);
  std::vector<double> d(40);
  for (auto& x : d) x = nd(rng);
  const auto r = wilcoxon_differences(d);
  CHECK_FALSE(r.exact);
  const double n = 40, mu = n * (n + 1) / 4, sd = std::sqrt(n * (n + 1) * (2 * n + 1) / 24);
  const double z = -std::max(std::abs(*r.w_plus - mu) - 0.5, 0.0) / sd;
  CHECK(*r.z == doctest::Approx(z));
  CHECK(r.p_value == doctest::Approx(2 * oracle::normal_sf(std::abs(z))));
  CHECK(*r.w_plus + *r.w_minus == doctest::Approx(n * (n + 1) / 2));
  CHECK(r.statistic == std::min(*r.w_plus, *r.w_minus));
}

TEST_CASE("Wilcoxon zeros, effect sizes and errors") {
  const std::vector<double> d{0, 0, 1, 2, 3, -1, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  WilcoxonOptions opt;
  opt.denominator = EffectDenominator::NonTied;
  const auto r = wilcoxon_differences(d, opt);
  CHECK(r.n_total == 15);
  CHECK(r.n_effective == 13);
  CHECK(*r.effect_r_total == doctest::Approx(std::abs(*r.z) / std::sqrt(15.0)));
  CHECK(*r.effect_r_nontied == doctest::Approx(std::abs(*r.z) / std::sqrt(13.0)));
  CHECK(*r.effect_r == *r.effect_r_nontied);

  const std::vector<double> zeros{0, 0, 0};
  try {
    wilcoxon_differences(zeros);
    FAIL("expected AllTies");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AllTies);
  }
  const std::vector<double> x{1, 2}, y{1};
  CHECK_THROWS_AS(wilcoxon_signed_rank(x, y), Error);
}

TEST_CASE("one-sample Wilcoxon shifts by mu") {
  const std::vector<double> x{4, 5, 4, 3, 5, 2, 4, 5, 4, 5, 4, 4, 5};
  const auto r = wilcoxon_one_sample(x, 3.0);
  std::vector<double> d;
  for (double v : x) d.push_back(v - 3.0);
  CHECK(r.p_value == doctest::Approx(wilcoxon_differences(d).p_value));
  CHECK(r.n_total == x.size());
}

TEST_CASE("Spearman is Pearson on mid-ranks") {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 100; ++rep) {
    const auto x = likert(rng, 5 + rep % 30);
    const auto y = likert(rng, x.size());
    const auto rx = oracle::mid_ranks(x), ry = oracle::mid_ranks(y);
    if (oracle::tie_term(x) == std::pow(static_cast<double>(x.size()), 3) - x.size()) continue;
    if (oracle::tie_term(y) == std::pow(static_cast<double>(y.size()), 3) - y.size()) continue;
    const auto r = spearman(x, y);
    CHECK(*r.rho == doctest::Approx(oracle::pearson(rx, ry)).epsilon(1e-12));
    CHECK(r.p_value >= 0);
    CHECK(r.p_value <= 1);
  }
  const std::vector<double> c{2, 2, 2, 2}, v{1, 2, 3, 4};
  try {
    spearman(c, v);
    FAIL("expected ConstantInput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConstantInput);
  }
  const std::vector<double> up{1, 2, 3, 4, 5};
  CHECK(*spearman(up, up).rho == doctest::Approx(1.0));
}

TEST_CASE("Benjamini-Hochberg fixture and oracle") {
  const std::vector<double> p{0.01, 0.02, 0.03, 0.04, 0.05};
  const auto r = benjamini_hochberg(p);
  for (double a : r.adjusted) CHECK(a == doctest::Approx(0.05));
  for (bool b : r.rejected) CHECK(b);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0, 0.2);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> ps(1 + rep % 30);
    for (auto& x : ps) x = u(rng);
    const auto got = benjamini_hochberg(ps, 0.05);
    const auto want = oracle::bh_adjust(ps);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      CHECK(got.adjusted[i] == doctest::Approx(want[i]).epsilon(1e-12));
      CHECK(got.rejected[i] == (want[i] <= 0.05));
      CHECK(got.adjusted[i] >= ps[i]);
    }
  }
}

TEST_CASE("Bonferroni") {
  const std::vector<double> p{0.001, 0.2, 0.5};
  const auto b = bonferroni(p);
  CHECK(b[0] == doctest::Approx(0.003));
  CHECK(b[1] == doctest::Approx(0.6));
  CHECK(b[2] == 1.0);
}

TEST_CASE("chi-square tail") {
  // df = 2: P(X > x) = exp(-x/2)
  for (double x : {0.1, 1.0, 5.0, 20.0}) CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-x / 2)));
  CHECK(chi_square_sf(0.0, 9) == 1.0);
}

TEST_CASE("effect size r") {
  CHECK(effect_size_r(-10.66, 168) == doctest::Approx(10.66 / std::sqrt(168.0)));
  CHECK_THROWS_AS(effect_size_r(1.0, 0), Error);
}
