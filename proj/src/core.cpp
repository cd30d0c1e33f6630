#include "rae/core.hpp"

#include <algorithm>
#include <sstream>

#include "profiles_data.hpp"
#include "text.hpp"

namespace rae {

namespace {

constexpr std::array<std::string_view, kDomainCount> kDomainNames = {
    "Apparel", "Beauty", "Entertainment", "Tech", "Dining",
    "Wellness", "Travel", "Education", "Finance", "Housing"};
constexpr std::array<std::string_view, kAimCount> kAimNames = {"Educative", "Explorative",
                                                                "Affective"};
constexpr std::array<std::string_view, 3> kLevelNames = {"Low", "Medium", "High"};
constexpr std::array<std::string_view, kClusterCount> kClusterNames = {
    "HighStakesComplex", "CrossCutting",     "HedonicLeisure",
    "AffectRichIdentity", "SocialContextual", "FunctionalPragmatic"};
constexpr std::array<std::string_view, 2> kValueNames = {"Low", "High"};
constexpr std::array<std::string_view, kGenderCount> kGenderNames = {"Female", "Male", "Other",
                                                                      "Undisclosed"};
constexpr std::array<std::string_view, kAgeGroupCount> kAgeNames = {"18-24", "25-34", "35-44",
                                                                     "45-54", "55-64", "65+"};
constexpr std::array<std::string_view, 3> kInitiativeNames = {"SystemLed", "Mixed", "UserLed"};

template <typename E, std::size_t N>
E parse_token(std::string_view token, const std::array<std::string_view, N>& names,
              Errc code, std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == token) return static_cast<E>(i);
  }
  throw Error(code, "unknown " + std::string(what) + " '" + std::string(token) + "'");
}

template <typename E, std::size_t N>
std::string_view name_of(E value, const std::array<std::string_view, N>& names) {
  auto i = static_cast<std::size_t>(value);
  return i < N ? names[i] : std::string_view("?");
}

}  // namespace

std::string_view to_string(Domain d) { return name_of(d, kDomainNames); }
std::string_view to_string(Aim a) { return name_of(a, kAimNames); }
std::string_view to_string(Level l) { return name_of(l, kLevelNames); }
std::string_view to_string(Cluster c) { return name_of(c, kClusterNames); }
std::string_view to_string(ItemValue v) { return name_of(v, kValueNames); }
std::string_view to_string(Gender g) { return name_of(g, kGenderNames); }
std::string_view to_string(AgeGroup a) { return name_of(a, kAgeNames); }
std::string_view to_string(Initiative i) { return name_of(i, kInitiativeNames); }

Domain parse_domain(std::string_view t) {
  return parse_token<Domain>(t, kDomainNames, Errc::UnknownDomain, "domain");
}
Aim parse_aim(std::string_view t) { return parse_token<Aim>(t, kAimNames, Errc::InvalidValue, "aim"); }
Level parse_level(std::string_view t) {
  return parse_token<Level>(t, kLevelNames, Errc::InvalidValue, "level");
}
Cluster parse_cluster(std::string_view t) {
  return parse_token<Cluster>(t, kClusterNames, Errc::InvalidValue, "cluster");
}
ItemValue parse_item_value(std::string_view t) {
  return parse_token<ItemValue>(t, kValueNames, Errc::InvalidValue, "value frame");
}
Gender parse_gender(std::string_view t) {
  return parse_token<Gender>(t, kGenderNames, Errc::InvalidValue, "gender");
}
AgeGroup parse_age_group(std::string_view t) {
  return parse_token<AgeGroup>(t, kAgeNames, Errc::InvalidValue, "age group");
}
Initiative parse_initiative(std::string_view t) {
  return parse_token<Initiative>(t, kInitiativeNames, Errc::InvalidValue, "initiative");
}

const std::array<Domain, kDomainCount>& all_domains() {
  static const std::array<Domain, kDomainCount> v = [] {
    std::array<Domain, kDomainCount> out{};
    for (std::size_t i = 0; i < kDomainCount; ++i) out[i] = static_cast<Domain>(i);
    return out;
  }();
  return v;
}

const std::array<Aim, kAimCount>& all_aims() {
  static const std::array<Aim, kAimCount> v = {Aim::Educative, Aim::Explorative, Aim::Affective};
  return v;
}

const std::array<Cluster, kClusterCount>& all_clusters() {
  static const std::array<Cluster, kClusterCount> v = [] {
    std::array<Cluster, kClusterCount> out{};
    for (std::size_t i = 0; i < kClusterCount; ++i) out[i] = static_cast<Cluster>(i);
    return out;
  }();
  return v;
}

double AimWeights::get(Aim a) const {
  switch (a) {
    case Aim::Educative: return w_edu;
    case Aim::Explorative: return w_exp;
    case Aim::Affective: return w_aff;
  }
  return 0.0;
}

void AimWeights::set(Aim a, double w) {
  switch (a) {
    case Aim::Educative: w_edu = w; break;
    case Aim::Explorative: w_exp = w; break;
    case Aim::Affective: w_aff = w; break;
  }
}

std::array<DomainProfile, kDomainCount> parse_profile_table(std::string_view text) {
  std::array<DomainProfile, kDomainCount> out{};
  std::array<bool, kDomainCount> seen{};
  bool header_done = false;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto fields = detail::split_csv_line(line);
    if (!header_done) {
      const std::vector<std::string> expected = {"domain", "complexity", "novelty_orientation",
                                                 "emotional_salience", "cluster"};
      if (fields != expected) throw Error(Errc::SchemaMismatch, "bad profile table header", line_no);
      header_done = true;
      continue;
    }
    if (fields.size() != 5) throw Error(Errc::SchemaMismatch, "profile row needs 5 fields", line_no);
    DomainProfile p;
    p.domain = parse_domain(fields[0]);
    p.complexity = parse_level(fields[1]);
    p.novelty_orientation = parse_level(fields[2]);
    p.emotional_salience = parse_level(fields[3]);
    p.cluster = parse_cluster(fields[4]);
    if (seen[index(p.domain)]) {
      throw Error(Errc::SchemaMismatch, "duplicate profile for " + fields[0], line_no);
    }
    seen[index(p.domain)] = true;
    out[index(p.domain)] = p;
  }
  for (std::size_t i = 0; i < kDomainCount; ++i) {
    if (!seen[i]) {
      throw Error(Errc::SchemaMismatch,
                  "profile table lacks " + std::string(to_string(static_cast<Domain>(i))));
    }
  }
  return out;
}

const std::array<DomainProfile, kDomainCount>& default_profiles() {
  static const auto table = parse_profile_table(detail::kDefaultProfileTable);
  return table;
}

bool valid_rating(int value) { return value >= kRatingMin && value <= kRatingMax; }

StateVector validate_state(StateVector state) {
  auto check = [](int v, const char* field) {
    if (!valid_rating(v)) {
      throw Error(Errc::InvalidRating,
                  std::string(field) + " must be in 1..5, got " + std::to_string(v));
    }
  };
  check(state.user_traits.crs_experience, "crs_experience");
  check(state.autonomy_pref.educative_control, "educative_control");
  check(state.autonomy_pref.explorative_control, "explorative_control");
  if (index(state.domain_profile.domain) >= kDomainCount) {
    throw Error(Errc::UnknownDomain, "domain out of range");
  }
  return state;
}

}  // namespace rae
