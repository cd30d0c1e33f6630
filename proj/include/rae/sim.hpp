#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>

#include "rae/core.hpp"
#include "rae/ordinal.hpp"
#include "rae/policy.hpp"
#include "rae/rng.hpp"

namespace rae {

/// True generative model for one aim. `model.beta_names` are design features
/// (see design.hpp); `model.alpha` holds one intercept per domain in
/// Domain order. The High frame adds `value_shift` to eta.
struct AimTruth {
  OrdinalModel model;
  double value_shift = 0.0;
};

/// How autonomy controls are produced: by two ordinal models (educative,
/// explorative; no groups) or fixed for everyone.
struct AutonomyTruth {
  std::optional<OrdinalModel> educative;
  std::optional<OrdinalModel> explorative;
  std::optional<AutonomyPref> fixed;
};

struct PopulationSpec {
  std::size_t n_users = 168;
  std::array<double, 5> experience{0.15, 0.20, 0.30, 0.20, 0.15};  // P(1..5)
  std::array<double, kGenderCount> gender{0.5, 0.476, 0.012, 0.012};
  std::array<double, kAgeGroupCount> age{0.30, 0.30, 0.15, 0.12, 0.08, 0.05};
  std::array<AimTruth, kAimCount> aims;
  AutonomyTruth autonomy;
  std::uint64_t seed = 1;

  /// Throws Error{InvalidSpec}: distributions must be non-negative and sum to
  /// 1 within 1e-9, n_users > 0, each aim model valid with 10 intercepts and
  /// known features.
  void validate() const;
};

/// Paper-magnitude population: strong per-domain intercepts, experience
/// effects and value shifts for all three aims, autonomy leaning user-led.
PopulationSpec default_population();

struct SimulatedUser {
  std::string participant_id;
  UserTraits traits;
  std::optional<AutonomyPref> autonomy;
};

/// User `u` (0-based). Draws come from stream (seed, u + 1) so users are
/// independent of each other and of generation order.
SimulatedUser draw_user(const PopulationSpec& spec, std::size_t u, Rng& rng);

/// Linear predictor of the true model for one user, domain, aim and frame.
double true_eta(const PopulationSpec& spec, const UserTraits& traits, Domain domain, Aim aim,
                ItemValue frame);

/// Rows ordered user x domain x aim x frame (Low before High).
RatingRecords generate_population(const PopulationSpec& spec);

/// (E[Y|x] - 1)/(K - 1).
double expected_importance(const OrdinalModel& model, const Covariates& x);

struct AlignmentScore {
  std::array<double, kAimCount> mean_gap{};
  double overall_gap = 0.0;  // mean over aims
  double initiative_mismatch = 0.0;
  std::size_t n = 0;         // evaluated states
};

using PolicyFn = std::function<AimWeights(const StateVector&)>;

/// Every user x domain x frame state is scored: |w_aim - importance_aim| and
/// whether the policy initiative matches the band of the user's autonomy
/// preference. Users without autonomy count as Mixed.
AlignmentScore evaluate_policy(const PolicyFn& policy, const PopulationSpec& spec,
                               const std::array<DomainProfile, kDomainCount>& profiles =
                                   default_profiles());

enum class PolicyKind { Rules, Calibrated, Flat };

/// Calibrated uses decide_calibrated; Rules uses decide; Flat uses decide_flat.
AlignmentScore evaluate_policy(const RuleTable& rules, const PolicyPriors& priors,
                               const PopulationSpec& spec, PolicyKind kind = PolicyKind::Calibrated);

}  // namespace rae
