#include <doctest.h>

#include <sstream>

#include "rae/io.hpp"

using namespace rae;

namespace {

std::string header() { return std::string(kCsvHeader) + "\n"; }

std::string row(const std::string& rating = "4", const std::string& domain = "Travel") {
  return "P1," + domain + ",Educative,Low," + rating + ",25-34,Female,3,4,2\n";
}

}  // namespace

TEST_CASE("CSV happy path and round trip") {
  auto spec = default_population();
  spec.n_users = 7;
  const auto recs = generate_population(spec);
  std::ostringstream out;
  write_ratings_csv(out, recs);
  const auto back = parse_ratings_csv(out.str(), true);
  CHECK(back.errors.empty());
  CHECK(back.records == recs);
}

TEST_CASE("CSV row errors carry line numbers") {
  std::string text = header();
  for (int i = 0; i < 5; ++i) text += row();
  text += row("6");  // line 7
  const auto lax = parse_ratings_csv(text, false);
  CHECK(lax.records.size() == 5);
  REQUIRE(lax.errors.size() == 1);
  CHECK(lax.errors[0].line == 7);
  CHECK(lax.errors[0].code == Errc::InvalidRating);
  try {
    parse_ratings_csv(text, true);
    FAIL("expected InvalidRating");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidRating);
    CHECK(e.line() == 7);
  }

  const auto unknown = parse_ratings_csv(header() + row("3", "Spaceflight"), false);
  REQUIRE(unknown.errors.size() == 1);
  CHECK(unknown.errors[0].code == Errc::UnknownDomain);
  CHECK(unknown.errors[0].line == 2);
}

TEST_CASE("CSV schema") {
  const std::string no_frame = "participant_id,domain,aim,rating,age_group,gender,crs_experience,autonomy_edu,autonomy_exp\n";
  try {
    parse_ratings_csv(no_frame + "P1,Travel,Educative,4,25-34,Female,3,4,2\n");
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SchemaMismatch);
  }
  // BOM, blank lines and missing autonomy are fine
  const auto ok = parse_ratings_csv("\xEF\xBB\xBF" + header() + "\nP2,Tech,Affective,High,2,18-24,Male,5,,\n", true);
  REQUIRE(ok.records.size() == 1);
  CHECK_FALSE(ok.records[0].autonomy.has_value());
  // half an autonomy pair is not
  const auto half = parse_ratings_csv(header() + "P2,Tech,Affective,High,2,18-24,Male,5,3,\n");
  CHECK(half.errors.size() == 1);
  const auto quoted = parse_ratings_csv(header() + "\"P,3\",Tech,Affective,High,2,18-24,Male,5,,\n", true);
  CHECK(quoted.records.at(0).participant_id == "P,3");
}

TEST_CASE("report JSON round trip is lossless and stable") {
  const auto pub = published_reports();
  for (const auto& [h, r] : pub) {
    const auto text = report_to_json(r);
    const auto back = report_from_json(text);
    CHECK(report_to_json(back) == text);
    CHECK(back.hypothesis == h);
  }
  CHECK_THROWS_AS(report_from_json("{}"), Error);
  CHECK_THROWS_AS(report_from_json("not json"), Error);
}

TEST_CASE("priors artifact round trip, strictness and provenance") {
  PriorsArtifact a;
  a.priors = calibrate(published_reports());
  a.rules = default_rule_table();
  const std::string input = "some input bytes";
  a.provenance = {"csv", sha256_hex(input), 42, "2026-01-01T00:00:00Z"};
  const auto text = priors_to_json(a);
  const auto back = priors_from_json(text);
  CHECK(back == a);
  CHECK(priors_to_json(back) == text);
  CHECK(verify_provenance(back, input));
  CHECK_FALSE(verify_provenance(back, input + "x"));

  auto with_extra = text;
  with_extra.insert(with_extra.find('{') + 1, "\"surprise\": 1,");
  try {
    priors_from_json(with_extra);
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SchemaMismatch);
  }
  auto nested = text;
  nested.replace(nested.find("\"kappa\""), 7, "\"kappa\": 0.05, \"emphasis_map2\"");
  CHECK_THROWS_AS(priors_from_json(nested), Error);
  auto version = text;
  version.replace(version.find("rae-priors/1"), 12, "rae-priors/9");
  CHECK_THROWS_AS(priors_from_json(version), Error);
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("population YAML") {
  const auto spec = default_population();
  const auto back = population_from_yaml(population_to_yaml(spec));
  CHECK(generate_population(back) == generate_population(spec));

  const auto partial = population_from_yaml("n_users: 12\nseed: 9\n");
  CHECK(partial.n_users == 12);
  CHECK(partial.seed == 9);
  try {
    population_from_yaml("experience: [0.1, 0.2, 0.3, 0.2, 0.1]\n");
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidSpec);
  }
  CHECK_THROWS_AS(population_from_yaml("colour: blue\n"), Error);
}

TEST_CASE("state JSON") {
  const auto s = state_from_json(R"({"domain":"Travel","item_value":"High","crs_experience":5,"controls":[4,4]})");
  CHECK(s.domain_profile.domain == Domain::Travel);
  CHECK(s.item_value == ItemValue::High);
  CHECK(s.autonomy_pref == AutonomyPref{4, 4});
  CHECK_THROWS_AS(state_from_json(R"({"domain":"Nowhere"})"), Error);
  CHECK_THROWS_AS(state_from_json(R"({"domain":"Travel","crs_experience":9})"), Error);
  CHECK_THROWS_AS(state_from_json(R"({"domain":"Travel","mood":"sunny"})"), Error);
}

TEST_CASE("text rendering") {
  AimWeights w;
  w.w_edu = 0.6;
  w.w_exp = 0.3;
  w.w_aff = 0.3;
  const auto t = render_text(weights_to_json(w));
  CHECK(t.find("0.500") != std::string::npos);  // ternary share of educative
  CHECK(render_text(report_to_json(published_reports().at("h4"))).find("wilcoxon_paired") != std::string::npos);
  AlignmentScore s;
  s.n = 3;
  CHECK(render_text(alignment_to_json(s, s)).find("flat") != std::string::npos);
  CHECK_THROWS_AS(render_text("[]"), Error);
}

TEST_CASE("exit codes") {
  CHECK(exit_code(Errc::SchemaMismatch) == 2);
  CHECK(exit_code(Errc::InvalidRating) == 2);
  CHECK(exit_code(Errc::MissingReport) == 2);
  CHECK(exit_code(Errc::NonFiniteLinearPredictor) == 3);
  CHECK(exit_code(Errc::InsufficientDraws) == 3);
}
