#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "rae/design.hpp"
#include "rae/sim.hpp"

using namespace rae;

TEST_CASE("default population is valid and shaped like the survey") {
  const auto spec = default_population();
  CHECK_NOTHROW(spec.validate());
  const auto recs = generate_population(spec);
  CHECK(recs.size() == 168 * 10 * 3 * 2);
  std::set<std::string> ids;
  for (const auto& r : recs) {
    ids.insert(r.participant_id);
    CHECK(r.rating >= 1);
    CHECK(r.rating <= 5);
  }
  CHECK(ids.size() == 168);
  // order: user x domain x aim x frame
  CHECK(recs[0].value_frame == ItemValue::Low);
  CHECK(recs[1].value_frame == ItemValue::High);
  CHECK(recs[2].aim == Aim::Explorative);
  CHECK(recs[6].domain == Domain::Beauty);
}

TEST_CASE("generation is deterministic and seed-dependent") {
  auto spec = default_population();
  spec.n_users = 20;
  const auto a = generate_population(spec);
  CHECK(generate_population(spec) == a);
  spec.seed = 2;
  CHECK(generate_population(spec) != a);
}

TEST_CASE("users do not depend on population size") {
  auto spec = default_population();
  spec.n_users = 5;
  const auto small = generate_population(spec);
  spec.n_users = 50;
  const auto large = generate_population(spec);
  for (std::size_t i = 0; i < small.size(); ++i) CHECK(small[i] == large[i]);
}

TEST_CASE("spec validation") {
  auto spec = default_population();
  spec.experience = {0.1, 0.2, 0.3, 0.2, 0.1};  // sums to 0.9
  try {
    spec.validate();
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidSpec);
  }
  spec = default_population();
  spec.n_users = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = default_population();
  spec.aims[0].model.alpha.pop_back();
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = default_population();
  spec.aims[1].model.beta_names[0] = "shoe_size";
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("true eta adds the value shift under High") {
  const auto spec = default_population();
  UserTraits t;
  for (Aim a : all_aims()) {
    const double lo = true_eta(spec, t, Domain::Education, a, ItemValue::Low);
    const double hi = true_eta(spec, t, Domain::Education, a, ItemValue::High);
    CHECK(hi - lo == doctest::Approx(spec.aims[index(a)].value_shift));
  }
}

TEST_CASE("generated ratings follow the model probabilities") {
  auto spec = default_population();
  spec.n_users = 3000;
  spec.experience = {0, 0, 1, 0, 0};
  spec.gender = {0, 0, 0, 1};
  spec.age = {0, 0, 1, 0, 0, 0};
  const auto recs = generate_population(spec);
  // experience 3 and undisclosed gender code to zero; age 35-44 codes to -0.5
  for (Aim a : all_aims()) {
    const auto& m = spec.aims[index(a)].model;
    double eta = m.alpha[index(Domain::Tech)];
    for (std::size_t j = 0; j < m.beta_names.size(); ++j) {
      if (m.beta_names[j] == "age") eta += m.beta[j] * -0.5;
    }
    const auto p = oracle::cumulative_logit_probs(m.cutpoints, eta);
    std::vector<double> counts(5, 0);
    double n = 0;
    for (const auto& r : recs) {
      if (r.aim == a && r.domain == Domain::Tech && r.value_frame == ItemValue::Low) {
        counts[r.rating - 1] += 1;
        n += 1;
      }
    }
    double tv = 0;
    for (int k = 0; k < 5; ++k) tv += 0.5 * std::abs(counts[k] / n - p[k]);
    CHECK(tv < 0.03);
  }
}

TEST_CASE("autonomy answers") {
  auto spec = default_population();
  spec.n_users = 30;
  for (const auto& r : generate_population(spec)) {
    REQUIRE(r.autonomy.has_value());
    CHECK(r.autonomy->educative_control >= 1);
    CHECK(r.autonomy->explorative_control <= 5);
  }
  spec.autonomy = {};
  spec.autonomy.fixed = AutonomyPref{4, 2};
  for (const auto& r : generate_population(spec)) CHECK(*r.autonomy == AutonomyPref{4, 2});
  spec.autonomy = {};
  for (const auto& r : generate_population(spec)) CHECK_FALSE(r.autonomy.has_value());
}

TEST_CASE("evaluate_policy scores perfect and flat policies") {
  auto spec = default_population();
  spec.n_users = 40;
  const auto& profiles = default_profiles();
  // oracle policy: knows every user's importance exactly only through eta, so
  // score it against itself via the same inputs the evaluator sees
  const auto flat = evaluate_policy(decide_flat, spec, profiles);
  CHECK(flat.n == 40 * 10 * 2);
  CHECK(flat.overall_gap > 0.0);
  CHECK(flat.overall_gap == doctest::Approx((flat.mean_gap[0] + flat.mean_gap[1] + flat.mean_gap[2]) / 3));

  const PolicyFn ones = [](const StateVector&) {
    AimWeights w;
    w.w_edu = w.w_exp = w.w_aff = 1.0;
    return w;
  };
  const PolicyFn zeros = [](const StateVector&) { return AimWeights{}; };
  const auto s1 = evaluate_policy(ones, spec, profiles);
  const auto s0 = evaluate_policy(zeros, spec, profiles);
  // |1 - x| + |0 - x| = 1 for x in [0,1]
  for (std::size_t a = 0; a < kAimCount; ++a) CHECK(s1.mean_gap[a] + s0.mean_gap[a] == doctest::Approx(1.0));

  spec.n_users = 0;
  const auto none = evaluate_policy(decide_flat, spec, profiles);
  CHECK(none.n == 0);
  CHECK(none.overall_gap == 0.0);
}

TEST_CASE("expected importance") {
  OrdinalModel m;
  m.cutpoints = {-1, 0, 1, 2};
  m.beta_names = {"experience"};
  m.beta = {0.5};
  Covariates x{{0.0}, std::nullopt};
  const auto p = oracle::cumulative_logit_probs(m.cutpoints, 0.0);
  double e = 0;
  for (int k = 0; k < 5; ++k) e += (k + 1) * p[k];
  CHECK(expected_importance(m, x) == doctest::Approx((e - 1) / 4));
}
