#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rae/pipeline.hpp"
#include "rae/sim.hpp"

using namespace rae;

namespace {

const RatingRecords& small_population() {
  static const RatingRecords recs = [] {
    auto spec = default_population();
    spec.n_users = 60;
    spec.seed = 3;
    return generate_population(spec);
  }();
  return recs;
}

AnalysisConfig quick() {
  AnalysisConfig c;
  c.mcmc.chains = 2;
  c.mcmc.warmup_draws = 200;
  c.mcmc.post_warmup_draws = 200;
  c.mcmc.seed = 4;
  c.ppc_draws = 20;
  return c;
}

}  // namespace

TEST_CASE("h1: rank tests, pairwise grid and the domain-intercept fit") {
  const auto r = run_h1_h3(small_population(), Aim::Educative, quick());
  CHECK(r.hypothesis == "h1");
  CHECK(r.effective_n == 60);
  REQUIRE(r.tests.size() == 1);
  CHECK(r.tests[0].family == "kruskal_wallis");
  CHECK(r.tests[0].test->n_effective == 600);
  CHECK(r.mean_ranks.size() == 10);
  CHECK(r.pairwise.size() == 45);
  for (const auto& p : r.pairwise) {
    CHECK(p.test.adjust_factor == 45);
    CHECK(p.notable == (*p.test.effect_r >= 0.2));
  }
  REQUIRE(r.fits.size() == 1);
  CHECK_FALSE(r.fits[0].error.has_value());
  CHECK(r.fits[0].n_observations > 0);
  CHECK(r.find_bayes("Educative", "beta[experience]"));
  CHECK(r.find_bayes("Educative", "beta[high_value]"));
  CHECK(r.find_bayes("Educative", "alpha[Education]"));
  REQUIRE(r.ppc.size() == 1);
  CHECK(r.ppc[0].check.draws_used == 20);
  // Education was generated well above Dining
  CHECK(r.find_bayes("Educative", "alpha[Education]")->summary.mean >
        r.find_bayes("Educative", "alpha[Dining]")->summary.mean);
}

TEST_CASE("h4: paired frames and the frequency table") {
  auto cfg = quick();
  cfg.skip_bayes = true;
  const auto r = run_h4(small_population(), cfg);
  REQUIRE(r.tests.size() == 3);
  for (const auto& t : r.tests) {
    CHECK(t.family == "wilcoxon_paired");
    REQUIRE(t.test.has_value());
    CHECK(t.test->n_total == 60);
    CHECK(*t.test->z < 0);  // High frame rated above Low
  }
  CHECK(r.frequencies.size() == 6);
  for (const auto& f : r.frequencies) {
    CHECK(std::accumulate(f.percent.begin(), f.percent.end(), 0.0) == doctest::Approx(100.0));
    CHECK(f.n == 600);
  }

  auto broken = small_population();
  broken.erase(std::remove_if(broken.begin(), broken.end(),
                              [](const RatingRecord& x) {
                                return x.participant_id == "S0001" && x.value_frame == ItemValue::High &&
                                       x.aim == Aim::Affective;
                              }),
               broken.end());
  try {
    run_h4(broken, cfg);
    FAIL("expected MissingPair");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingPair);
  }
}

TEST_CASE("h5: three screened families with BH inside each") {
  auto cfg = quick();
  cfg.skip_bayes = true;
  const auto r = run_h5(small_population(), cfg);
  CHECK(r.tests.size() == 90);
  for (const char* fam : {"spearman:experience", "spearman:gender", "spearman:age"}) {
    std::vector<const CellResult*> cells;
    for (const auto& t : r.tests) {
      if (t.family == fam) cells.push_back(&t);
    }
    REQUIRE(cells.size() == 30);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const auto key = [](const CellResult* c) { return std::pair{*c->domain, *c->aim}; };
      CHECK(key(cells[i - 1]) < key(cells[i]));
    }
    for (const auto* c : cells) {
      if (!c->test) continue;
      REQUIRE(c->p_adjusted.has_value());
      CHECK(*c->p_adjusted >= c->test->p_value);
      CHECK(c->rejected == (*c->p_adjusted <= 0.05));
    }
  }
  // experience was generated with a positive effect on every aim
  int positive = 0;
  for (const auto& t : r.tests) {
    if (t.family == "spearman:experience" && t.test && *t.test->rho > 0) ++positive;
  }
  CHECK(positive >= 25);
}

TEST_CASE("h6: control items") {
  const auto r = run_h6(small_population(), quick());
  int one_sample = 0;
  for (const auto& t : r.tests) one_sample += t.family == "wilcoxon_one_sample";
  CHECK(one_sample == 2);
  const auto* male = r.find_bayes("educative_control", "beta[male]");
  REQUIRE(male);
  CHECK(*male->odds_ratio == doctest::Approx(std::exp(-male->summary.mean)));

  auto no_autonomy = small_population();
  for (auto& x : no_autonomy) x.autonomy.reset();
  try {
    run_h6(no_autonomy, quick());
    FAIL("expected DegenerateData");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateData);
  }
}

TEST_CASE("degenerate cells are recorded, not thrown") {
  auto recs = small_population();
  for (auto& x : recs) {
    if (x.domain == Domain::Tech && x.aim == Aim::Affective) x.rating = 3;
  }
  auto cfg = quick();
  cfg.skip_bayes = true;
  const auto r = run_h5(recs, cfg);
  int errors = 0;
  for (const auto& t : r.tests) {
    if (t.domain == Domain::Tech && t.aim == Aim::Affective) {
      CHECK(t.error.has_value());
      CHECK_FALSE(t.test.has_value());
      ++errors;
    }
  }
  CHECK(errors == 3);
}

TEST_CASE("published reports carry the reported identities") {
  const auto pub = published_reports();
  for (const char* h : {"h1", "h2", "h3", "h4", "h5"}) CHECK(pub.count(h) == 1);
  const auto& h4 = pub.at("h4");
  REQUIRE(h4.tests.size() == 3);
  const std::array<double, 3> r{0.822, 0.809, 0.859};
  for (std::size_t i = 0; i < 3; ++i) CHECK(*h4.tests[i].test->effect_r == doctest::Approx(r[i]).epsilon(0.002));
}

TEST_CASE("calibrate from published numbers") {
  const auto p = calibrate(published_reports());
  CHECK_NOTHROW(p.validate());
  for (Aim a : all_aims()) {
    REQUIRE(p.beta_exp[index(a)].has_value());
    CHECK(p.beta_exp[index(a)]->admitted);
    if (p.beta_gender[index(a)]) CHECK_FALSE(p.beta_gender[index(a)]->admitted);
    if (p.beta_age[index(a)]) CHECK_FALSE(p.beta_age[index(a)]->admitted);
  }
  CHECK(std::is_sorted(p.gender_overrides.begin(), p.gender_overrides.end()));
  CHECK_FALSE(p.has_calibration());

  auto partial = published_reports();
  partial.erase("h4");
  try {
    calibrate(partial);
    FAIL("expected MissingReport");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingReport);
  }
}

TEST_CASE("calibrate from fitted reports yields a calibrated policy") {
  AnalysisReports reps;
  const auto cfg = quick();
  for (Aim a : all_aims()) {
    auto r = run_h1_h3(small_population(), a, cfg);
    reps[r.hypothesis] = std::move(r);
  }
  reps["h4"] = run_h4(small_population(), cfg);
  reps["h5"] = run_h5(small_population(), cfg);
  const auto p = calibrate(reps);
  CHECK(p.has_calibration());
  for (Aim a : all_aims()) {
    REQUIRE(p.calibration[index(a)].has_value());
    CHECK(p.calibration[index(a)]->cutpoints.size() == 4);
    CHECK(p.calibration[index(a)]->value_admitted);
    for (Domain d : all_domains()) CHECK(p.intercepts[index(d)][index(a)].has_value());
  }
}
