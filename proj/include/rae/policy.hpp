#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rae/core.hpp"

namespace rae {

enum class Emphasis : std::uint8_t { Primary, Secondary, Deemphasized };

enum class DialogueMode : std::uint8_t {
  SystemToUser,
  MixedInitiative,
  UserLedOrMixed,
  GentleSystemInit,
  UserLedNudges,
};

std::string_view to_string(Emphasis e);
std::string_view to_string(DialogueMode m);
Emphasis parse_emphasis(std::string_view token);
DialogueMode parse_dialogue_mode(std::string_view token);

/// SystemToUser -> SystemLed, MixedInitiative -> Mixed, everything else -> UserLed.
Initiative initiative_for(DialogueMode mode);

struct RuleRow {
  Cluster cluster = Cluster::CrossCutting;
  std::array<Emphasis, kAimCount> emphasis{};  // indexed by index(Aim)
  DialogueMode mode = DialogueMode::MixedInitiative;
  std::string triggers;

  friend bool operator==(const RuleRow&, const RuleRow&) = default;
};

struct RuleTable {
  std::vector<RuleRow> rows;

  const RuleRow* find(Cluster c) const;
  /// Exactly one row per cluster; throws Error{MissingCluster | InvalidValue}.
  void validate() const;

  friend bool operator==(const RuleTable&, const RuleTable&) = default;
};

/// The shipped six-row table.
RuleTable default_rule_table();

struct EmphasisMap {
  double primary = 0.85;
  double secondary = 0.55;
  double deemphasized = 0.25;

  double weight(Emphasis e) const;
  friend bool operator==(const EmphasisMap&, const EmphasisMap&) = default;
};

/// Posterior mean with its HDI bounds.
struct Estimate {
  double mean = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;

  bool excludes_zero() const { return hdi_low > 0.0 || hdi_high < 0.0; }
  friend bool operator==(const Estimate&, const Estimate&) = default;
};

struct TraitCoefficient {
  Estimate estimate;
  /// Whether the coefficient may act as a global modulator.
  bool admitted = false;

  friend bool operator==(const TraitCoefficient&, const TraitCoefficient&) = default;
};

/// A (domain, aim) cell where a demographic coefficient is allowed to act.
struct CellFlag {
  Domain domain = Domain::Apparel;
  Aim aim = Aim::Educative;

  friend bool operator==(const CellFlag&, const CellFlag&) = default;
  friend auto operator<=>(const CellFlag&, const CellFlag&) = default;
};

/// Per-aim generative pieces used by the calibrated policy: the fitted
/// cutpoints plus coefficients for experience and the High value frame.
struct AimCalibration {
  std::vector<double> cutpoints;
  double experience = 0.0;
  double value_shift = 0.0;
  bool experience_admitted = false;
  bool value_admitted = false;

  friend bool operator==(const AimCalibration&, const AimCalibration&) = default;
};

struct PolicyPriors {
  EmphasisMap emphasis;
  /// Gain turning a log-odds coefficient into a weight shift.
  double kappa = 0.05;
  std::array<std::optional<TraitCoefficient>, kAimCount> beta_exp;
  std::array<std::optional<TraitCoefficient>, kAimCount> beta_gender;
  std::array<std::optional<TraitCoefficient>, kAimCount> beta_age;
  std::vector<CellFlag> gender_overrides;
  std::vector<CellFlag> age_overrides;
  /// [domain][aim]
  std::array<std::array<std::optional<Estimate>, kAimCount>, kDomainCount> intercepts;
  std::array<std::optional<AimCalibration>, kAimCount> calibration;

  /// w_P > w_S > w_D within [0,1], kappa >= 0, every estimate ordered
  /// low <= mean <= high, calibration cutpoints increasing.
  /// Throws Error{InvalidValue}.
  void validate() const;

  bool has_calibration() const;

  friend bool operator==(const PolicyPriors&, const PolicyPriors&) = default;
};

/// Throws Error{MissingCluster} when `rules` has no row for the profile's cluster.
AimWeights base_weights(const DomainProfile& profile, const RuleTable& rules,
                        const PolicyPriors& priors);

/// Floors applied under a High item value.
inline constexpr std::array<double, kAimCount> kHighValueFloors{0.8, 0.6, 0.7};

/// High: every weight raised to at least its floor. Low: unchanged.
AimWeights apply_value_modulation(AimWeights weights, ItemValue item_value);

/// w += kappa * beta_exp * (experience - 3) for aims whose beta_exp is admitted,
/// plus gender / age terms in flagged (domain, aim) cells only; clamped to [0,1].
AimWeights apply_trait_modulation(AimWeights weights, const UserTraits& traits,
                                  const PolicyPriors& priors, Domain domain);

/// Mean control > 3 -> UserLed, < 3 -> SystemLed, = 3 -> Mixed. Exception: with
/// a High item value, an incoming SystemLed allocation that the user would
/// push to UserLed settles at Mixed (scaffolding kept under high stakes).
AimWeights allocate_initiative(AimWeights weights, const AutonomyPref& autonomy,
                               ItemValue item_value);

/// base_weights -> value -> traits -> initiative.
AimWeights decide(const StateVector& state, const RuleTable& rules, const PolicyPriors& priors);

/// Weights from the fitted per-aim models: w = normalised expected rating at
/// eta = alpha[domain][aim] + admitted trait and value terms. Aims without
/// calibration (or without an intercept) fall back to the rule weight.
AimWeights decide_calibrated(const StateVector& state, const RuleTable& rules,
                             const PolicyPriors& priors);

/// Weights in {0.5} with the same initiative allocation; the baseline.
AimWeights decide_flat(const StateVector& state);

/// w_i / sum(w); all zeros map to the barycentre.
std::array<double, kAimCount> ternary_coordinates(const AimWeights& w);

}  // namespace rae
