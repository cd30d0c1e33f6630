#include <doctest.h>

#include <algorithm>
#include <random>

#include "rae/pipeline.hpp"
#include "rae/policy.hpp"

using namespace rae;

namespace {

StateVector random_state(std::mt19937_64& rng) {
  StateVector s;
  s.domain_profile = default_profiles()[rng() % kDomainCount];
  s.item_value = rng() % 2 ? ItemValue::High : ItemValue::Low;
  s.user_traits.crs_experience = 1 + static_cast<int>(rng() % 5);
  s.user_traits.gender = static_cast<Gender>(rng() % kGenderCount);
  s.user_traits.age_group = static_cast<AgeGroup>(rng() % kAgeGroupCount);
  s.autonomy_pref = {1 + static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 5)};
  return s;
}

PolicyPriors shipped_priors() { return calibrate(published_reports()); }

}  // namespace

TEST_CASE("default rule table") {
  const auto t = default_rule_table();
  CHECK_NOTHROW(t.validate());
  CHECK(t.rows.size() == kClusterCount);
  const auto* hsc = t.find(Cluster::HighStakesComplex);
  REQUIRE(hsc);
  CHECK(hsc->emphasis[index(Aim::Educative)] == Emphasis::Primary);
  CHECK(hsc->mode == DialogueMode::SystemToUser);
  CHECK(initiative_for(DialogueMode::UserLedNudges) == Initiative::UserLed);
  CHECK(initiative_for(DialogueMode::MixedInitiative) == Initiative::Mixed);
}

TEST_CASE("rule table validation") {
  auto t = default_rule_table();
  const Cluster dropped = t.rows.back().cluster;
  t.rows.pop_back();
  try {
    t.validate();
    FAIL("expected MissingCluster");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingCluster);
  }
  auto dup = default_rule_table();
  dup.rows.push_back(dup.rows.front());
  CHECK_THROWS_AS(dup.validate(), Error);

  const auto& profiles = default_profiles();
  const auto hit = std::find_if(profiles.begin(), profiles.end(),
                                [&](const DomainProfile& d) { return d.cluster == dropped; });
  REQUIRE(hit != profiles.end());
  try {
    base_weights(*hit, t, PolicyPriors{});
    FAIL("expected MissingCluster");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingCluster);
  }
}

TEST_CASE("base weights follow the emphasis map") {
  PolicyPriors p;
  const auto w = base_weights(default_profiles()[index(Domain::Education)], default_rule_table(), p);
  CHECK(w.w_edu == p.emphasis.primary);
  CHECK(w.w_exp == p.emphasis.deemphasized);
  CHECK(w.w_aff == p.emphasis.deemphasized);
  CHECK(w.initiative == Initiative::SystemLed);
}

TEST_CASE("value modulation applies floors under High only") {
  AimWeights w;
  w.w_edu = 0.1;
  w.w_exp = 0.9;
  w.w_aff = 0.3;
  const auto low = apply_value_modulation(w, ItemValue::Low);
  CHECK(low == w);
  const auto high = apply_value_modulation(w, ItemValue::High);
  CHECK(high.w_edu == 0.8);
  CHECK(high.w_exp == 0.9);
  CHECK(high.w_aff == 0.7);
}

TEST_CASE("trait modulation") {
  PolicyPriors p;
  p.beta_exp[index(Aim::Explorative)] = TraitCoefficient{{0.4, 0.1, 0.7}, true};
  p.beta_exp[index(Aim::Educative)] = TraitCoefficient{{0.4, -0.1, 0.9}, false};
  p.beta_gender[index(Aim::Affective)] = TraitCoefficient{{-0.5, -0.9, -0.1}, false};
  p.gender_overrides = {{Domain::Wellness, Aim::Affective}};
  AimWeights w;
  w.w_edu = w.w_exp = w.w_aff = 0.5;
  UserTraits t;
  t.crs_experience = 5;
  t.gender = Gender::Female;
  const auto tech = apply_trait_modulation(w, t, p, Domain::Tech);
  CHECK(tech.w_exp == doctest::Approx(0.5 + 0.05 * 0.4 * 2));
  CHECK(tech.w_edu == 0.5);  // not admitted
  CHECK(tech.w_aff == 0.5);  // no override in Tech
  const auto well = apply_trait_modulation(w, t, p, Domain::Wellness);
  CHECK(well.w_aff == doctest::Approx(0.5 - 0.05 * 0.5));
  t.gender = Gender::Male;
  CHECK(apply_trait_modulation(w, t, p, Domain::Wellness).w_aff == doctest::Approx(0.5 + 0.05 * 0.5));
  t.gender = Gender::Undisclosed;
  CHECK(apply_trait_modulation(w, t, p, Domain::Wellness).w_aff == 0.5);

  p.kappa = 10;
  t.crs_experience = 1;
  const auto clamped = apply_trait_modulation(w, t, p, Domain::Tech);
  CHECK(clamped.w_exp == 0.0);
}

TEST_CASE("initiative allocation") {
  AimWeights w;
  w.initiative = Initiative::SystemLed;
  CHECK(allocate_initiative(w, {4, 5}, ItemValue::Low).initiative == Initiative::UserLed);
  CHECK(allocate_initiative(w, {2, 2}, ItemValue::Low).initiative == Initiative::SystemLed);
  CHECK(allocate_initiative(w, {3, 3}, ItemValue::Low).initiative == Initiative::Mixed);
  CHECK(allocate_initiative(w, {2, 4}, ItemValue::Low).initiative == Initiative::Mixed);
  // high stakes keep some scaffolding
  CHECK(allocate_initiative(w, {4, 4}, ItemValue::High).initiative == Initiative::Mixed);
  w.initiative = Initiative::UserLed;
  CHECK(allocate_initiative(w, {4, 4}, ItemValue::High).initiative == Initiative::UserLed);
  CHECK(allocate_initiative(w, {1, 1}, ItemValue::High).affective_system_init);
}

TEST_CASE("scenario: high-value trip for an autonomous expert") {
  StateVector s;
  s.domain_profile = default_profiles()[index(Domain::Travel)];
  s.item_value = ItemValue::High;
  s.user_traits.crs_experience = 5;
  s.autonomy_pref = {4, 4};
  const auto w = decide(s, default_rule_table(), shipped_priors());
  CHECK(w.w_edu >= 0.8);
  CHECK(w.w_exp >= 0.6);
  CHECK(w.w_aff >= 0.7);
  CHECK(w.initiative == Initiative::UserLed);
}

TEST_CASE("scenario: educative aims dominate for a novice in Education") {
  StateVector s;
  s.domain_profile = default_profiles()[index(Domain::Education)];
  s.item_value = ItemValue::High;
  s.user_traits.crs_experience = 1;
  const auto w = decide(s, default_rule_table(), shipped_priors());
  CHECK(w.w_edu > w.w_exp);
  CHECK(w.w_edu > w.w_aff);
}

TEST_CASE("property: weights in [0,1], deterministic, value monotone") {
  std::mt19937_64 rng(42);
  const auto rules = default_rule_table();
  const auto priors = shipped_priors();
  for (int i = 0; i < 2000; ++i) {
    auto s = random_state(rng);
    const auto w = decide(s, rules, priors);
    for (Aim a : all_aims()) {
      CHECK(w.get(a) >= 0.0);
      CHECK(w.get(a) <= 1.0);
    }
    CHECK(decide(s, rules, priors) == w);
    s.item_value = ItemValue::Low;
    const auto lo = decide(s, rules, priors);
    s.item_value = ItemValue::High;
    const auto hi = decide(s, rules, priors);
    for (Aim a : all_aims()) CHECK(hi.get(a) >= lo.get(a));
  }
}

TEST_CASE("calibrated policy uses the fitted model and falls back to rules") {
  PolicyPriors p;
  AimCalibration cal;
  cal.cutpoints = {-2.2, -0.8, 0.8, 2.2};
  cal.experience = 0.4;
  cal.value_shift = 1.0;
  cal.experience_admitted = true;
  cal.value_admitted = true;
  p.calibration[index(Aim::Educative)] = cal;
  for (Domain d : all_domains()) p.intercepts[index(d)][index(Aim::Educative)] = Estimate{0.0, -0.1, 0.1};
  CHECK(p.has_calibration());
  StateVector s;
  s.domain_profile = default_profiles()[index(Domain::Tech)];
  const auto rules = default_rule_table();
  const auto w = decide_calibrated(s, rules, p);
  CHECK(w.w_edu == doctest::Approx(expected_importance_at(cal.cutpoints, 0.0)));
  const auto rule_w = decide(s, rules, p);
  CHECK(w.w_exp == rule_w.w_exp);
  s.item_value = ItemValue::High;
  CHECK(decide_calibrated(s, rules, p).w_edu == doctest::Approx(expected_importance_at(cal.cutpoints, 1.0)));
  s.user_traits.crs_experience = 5;
  CHECK(decide_calibrated(s, rules, p).w_edu ==
        doctest::Approx(expected_importance_at(cal.cutpoints, 1.0 + 0.8)));
}

TEST_CASE("flat policy and ternary coordinates") {
  StateVector s;
  s.autonomy_pref = {5, 5};
  const auto w = decide_flat(s);
  CHECK(w.w_edu == 0.5);
  CHECK(w.w_exp == 0.5);
  CHECK(w.w_aff == 0.5);
  CHECK(w.initiative == Initiative::UserLed);
  const auto t = ternary_coordinates(w);
  for (double x : t) CHECK(x == doctest::Approx(1.0 / 3));
  AimWeights zero;
  for (double x : ternary_coordinates(zero)) CHECK(x == doctest::Approx(1.0 / 3));
  AimWeights skew;
  skew.w_edu = 0.6;
  skew.w_exp = 0.2;
  skew.w_aff = 0.2;
  CHECK(ternary_coordinates(skew)[0] == doctest::Approx(0.6));
}

TEST_CASE("priors validation") {
  PolicyPriors p;
  CHECK_NOTHROW(p.validate());
  p.emphasis.secondary = 0.9;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.kappa = -1;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.intercepts[0][0] = Estimate{1.0, 1.5, 2.0};
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("emphasis and dialogue mode tokens") {
  for (auto e : {Emphasis::Primary, Emphasis::Secondary, Emphasis::Deemphasized})
    CHECK(parse_emphasis(to_string(e)) == e);
  for (auto m : {DialogueMode::SystemToUser, DialogueMode::MixedInitiative, DialogueMode::UserLedOrMixed,
                 DialogueMode::GentleSystemInit, DialogueMode::UserLedNudges})
    CHECK(parse_dialogue_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_emphasis("primary"), Error);
}
