#include <doctest.h>

#include "rae/core.hpp"
#include "rae/design.hpp"

using namespace rae;

TEST_CASE("enum tokens round-trip") {
  for (Domain d : all_domains()) CHECK(parse_domain(to_string(d)) == d);
  for (Aim a : all_aims()) CHECK(parse_aim(to_string(a)) == a);
  for (std::size_t i = 0; i < kGenderCount; ++i) {
    const auto g = static_cast<Gender>(i);
    CHECK(parse_gender(to_string(g)) == g);
  }
  for (std::size_t i = 0; i < kAgeGroupCount; ++i) {
    const auto a = static_cast<AgeGroup>(i);
    CHECK(parse_age_group(to_string(a)) == a);
  }
  for (std::size_t i = 0; i < kClusterCount; ++i) {
    const auto c = static_cast<Cluster>(i);
    CHECK(parse_cluster(to_string(c)) == c);
  }
  CHECK(parse_item_value("High") == ItemValue::High);
  CHECK(parse_initiative("UserLed") == Initiative::UserLed);
}

TEST_CASE("tokens are case-sensitive") {
  try {
    parse_domain("travel");
    FAIL("expected UnknownDomain");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownDomain);
  }
  CHECK_THROWS_AS(parse_aim("educative"), Error);
  CHECK_THROWS_AS(parse_item_value("high"), Error);
}

TEST_CASE("default profiles cover every domain once") {
  const auto& p = default_profiles();
  for (Domain d : all_domains()) CHECK(p[index(d)].domain == d);
  CHECK(p[index(Domain::Education)].cluster == Cluster::HighStakesComplex);
  CHECK(p[index(Domain::Travel)].cluster == Cluster::CrossCutting);
}

TEST_CASE("profile table parsing rejects gaps and duplicates") {
  const std::string header = "domain,complexity,novelty_orientation,emotional_salience,cluster\n";
  CHECK_THROWS_AS(parse_profile_table(header + "Apparel,Low,Low,Low,HedonicLeisure\n"), Error);
  CHECK_THROWS_AS(parse_profile_table("bad,header\n"), Error);
}

TEST_CASE("validate_state enforces 1..5 fields") {
  StateVector s;
  s.domain_profile = default_profiles()[index(Domain::Tech)];
  CHECK(validate_state(s) == s);
  s.user_traits.crs_experience = 6;
  try {
    validate_state(s);
    FAIL("expected InvalidRating");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidRating);
  }
  s.user_traits.crs_experience = 3;
  s.autonomy_pref.explorative_control = 0;
  CHECK_THROWS_AS(validate_state(s), Error);
}

TEST_CASE("history is carried untouched") {
  StateVector s;
  s.history = {1, 2, 3, 250};
  CHECK(validate_state(s).history == s.history);
}

TEST_CASE("AimWeights get/set by aim") {
  AimWeights w;
  w.set(Aim::Explorative, 0.4);
  CHECK(w.get(Aim::Explorative) == 0.4);
  CHECK(w.w_exp == 0.4);
}

TEST_CASE("error messages carry code and line") {
  const Error e(Errc::InvalidRating, "rating 6", 7);
  CHECK(e.code() == Errc::InvalidRating);
  CHECK(e.line() == 7);
  CHECK(std::string(e.what()).find("7") != std::string::npos);
}

TEST_CASE("design features") {
  UserTraits t;
  t.crs_experience = 5;
  t.gender = Gender::Female;
  t.age_group = AgeGroup::A18_24;
  CHECK(*feature_value("experience", t, ItemValue::Low) == 2.0);
  CHECK(*feature_value("gender", t, ItemValue::Low) == 1.0);
  CHECK(*feature_value("male", t, ItemValue::Low) == 0.0);
  CHECK(*feature_value("age", t, ItemValue::Low) == -2.5);
  CHECK(*feature_value("high_value", t, ItemValue::High) == 1.0);
  t.gender = Gender::Other;
  CHECK_FALSE(feature_value("gender", t, ItemValue::Low).has_value());
  CHECK_THROWS_AS(feature_value("nonsense", t, ItemValue::Low), Error);
  CHECK(is_known_feature("age_65plus"));
}
