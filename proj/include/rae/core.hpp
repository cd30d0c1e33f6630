#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rae/error.hpp"

namespace rae {

// ---------------------------------------------------------------------------
// Enumerations. Each enum has a closed token table used by parse/to_string;
// tokens are case-sensitive and match the CSV schema.
// ---------------------------------------------------------------------------

enum class Domain : std::uint8_t {
  Apparel,
  Beauty,
  Entertainment,
  Tech,
  Dining,
  Wellness,
  Travel,
  Education,
  Finance,
  Housing,
};
inline constexpr std::size_t kDomainCount = 10;

enum class Aim : std::uint8_t { Educative, Explorative, Affective };
inline constexpr std::size_t kAimCount = 3;

enum class Level : std::uint8_t { Low, Medium, High };

enum class Cluster : std::uint8_t {
  HighStakesComplex,
  CrossCutting,
  HedonicLeisure,
  AffectRichIdentity,
  SocialContextual,
  FunctionalPragmatic,
};
inline constexpr std::size_t kClusterCount = 6;

/// Situational stakes; doubles as the survey's value frame.
enum class ItemValue : std::uint8_t { Low, High };

enum class Gender : std::uint8_t { Female, Male, Other, Undisclosed };
inline constexpr std::size_t kGenderCount = 4;

enum class AgeGroup : std::uint8_t { A18_24, A25_34, A35_44, A45_54, A55_64, A65plus };
inline constexpr std::size_t kAgeGroupCount = 6;

enum class Initiative : std::uint8_t { SystemLed, Mixed, UserLed };

inline constexpr int kRatingMin = 1;
inline constexpr int kRatingMax = 5;
inline constexpr int kCategories = 5;

std::string_view to_string(Domain d);
std::string_view to_string(Aim a);
std::string_view to_string(Level l);
std::string_view to_string(Cluster c);
std::string_view to_string(ItemValue v);
std::string_view to_string(Gender g);
std::string_view to_string(AgeGroup a);
std::string_view to_string(Initiative i);

/// Throws Error{UnknownDomain}.
Domain parse_domain(std::string_view token);
/// The remaining parsers throw Error{InvalidValue}.
Aim parse_aim(std::string_view token);
Level parse_level(std::string_view token);
Cluster parse_cluster(std::string_view token);
ItemValue parse_item_value(std::string_view token);
Gender parse_gender(std::string_view token);
AgeGroup parse_age_group(std::string_view token);
Initiative parse_initiative(std::string_view token);

const std::array<Domain, kDomainCount>& all_domains();
const std::array<Aim, kAimCount>& all_aims();
const std::array<Cluster, kClusterCount>& all_clusters();

constexpr std::size_t index(Domain d) { return static_cast<std::size_t>(d); }
constexpr std::size_t index(Aim a) { return static_cast<std::size_t>(a); }
constexpr std::size_t index(Cluster c) { return static_cast<std::size_t>(c); }
constexpr std::size_t index(Gender g) { return static_cast<std::size_t>(g); }
constexpr std::size_t index(AgeGroup a) { return static_cast<std::size_t>(a); }

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

struct DomainProfile {
  Domain domain = Domain::Apparel;
  Level complexity = Level::Medium;
  Level novelty_orientation = Level::Medium;
  Level emotional_salience = Level::Medium;
  Cluster cluster = Cluster::CrossCutting;

  friend bool operator==(const DomainProfile&, const DomainProfile&) = default;
};

struct UserTraits {
  int crs_experience = 3;  // 1..5
  Gender gender = Gender::Undisclosed;
  AgeGroup age_group = AgeGroup::A25_34;

  friend bool operator==(const UserTraits&, const UserTraits&) = default;
};

/// 1 = fully system-initiated, 5 = fully user-initiated.
struct AutonomyPref {
  int educative_control = 3;
  int explorative_control = 3;

  double mean() const { return 0.5 * (educative_control + explorative_control); }

  friend bool operator==(const AutonomyPref&, const AutonomyPref&) = default;
};

struct StateVector {
  DomainProfile domain_profile;
  ItemValue item_value = ItemValue::Low;
  UserTraits user_traits;
  AutonomyPref autonomy_pref;
  /// Dialogue history; carried through untouched, never interpreted.
  std::vector<std::uint8_t> history;

  friend bool operator==(const StateVector&, const StateVector&) = default;
};

/// Independent per-aim intensities in [0,1]. Not a simplex.
struct AimWeights {
  double w_edu = 0.0;
  double w_exp = 0.0;
  double w_aff = 0.0;
  Initiative initiative = Initiative::Mixed;
  /// No autonomy item exists for the affective aim, so affective behaviours
  /// default to gentle system initiation whatever `initiative` says.
  bool affective_system_init = true;

  double get(Aim a) const;
  void set(Aim a, double w);

  friend bool operator==(const AimWeights&, const AimWeights&) = default;
};

struct RatingRecord {
  std::string participant_id;
  Domain domain = Domain::Apparel;
  Aim aim = Aim::Educative;
  ItemValue value_frame = ItemValue::Low;
  int rating = 3;
  UserTraits traits;
  std::optional<AutonomyPref> autonomy;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

using RatingRecords = std::vector<RatingRecord>;

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Profiles for all ten domains from the shipped default table
/// (data/domain_profiles.csv, compiled in). Indexed by `index(Domain)`.
const std::array<DomainProfile, kDomainCount>& default_profiles();

/// Parses a profile table in the shipped CSV layout. Every domain must appear
/// exactly once. Throws Error{SchemaMismatch | UnknownDomain | InvalidValue}.
std::array<DomainProfile, kDomainCount> parse_profile_table(std::string_view text);

/// Returns `state` unchanged when every invariant holds.
/// Throws Error{InvalidRating} for any 1..5 field out of range.
StateVector validate_state(StateVector state);

bool valid_rating(int value);

}  // namespace rae
