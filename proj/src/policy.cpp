#include "rae/policy.hpp"

#include <algorithm>
#include <cmath>

#include "rae/error.hpp"
#include "rae/ordinal.hpp"

namespace rae {

namespace {

constexpr std::array<std::string_view, 3> kEmphasisTokens{"Primary", "Secondary", "Deemphasized"};
constexpr std::array<std::string_view, 5> kModeTokens{
    "SystemToUser", "MixedInitiative", "UserLedOrMixed", "GentleSystemInit", "UserLedNudges"};

double clamp01(double w) { return std::clamp(w, 0.0, 1.0); }

double gender_code(Gender g) {
  switch (g) {
    case Gender::Female: return 1.0;
    case Gender::Male: return -1.0;
    default: return 0.0;
  }
}

double age_code(AgeGroup a) { return static_cast<double>(index(a)) - 2.5; }

bool flagged(const std::vector<CellFlag>& flags, Domain d, Aim a) {
  return std::find(flags.begin(), flags.end(), CellFlag{d, a}) != flags.end();
}

void check_estimate(const Estimate& e, std::string_view what) {
  if (!std::isfinite(e.mean) || !(e.hdi_low <= e.mean && e.mean <= e.hdi_high)) {
    throw Error(Errc::InvalidValue, std::string(what) + ": HDI must bracket the mean");
  }
}

Initiative band(const AutonomyPref& autonomy) {
  const double m = autonomy.mean();
  if (m > 3.0) return Initiative::UserLed;
  if (m < 3.0) return Initiative::SystemLed;
  return Initiative::Mixed;
}

}  // namespace

std::string_view to_string(Emphasis e) { return kEmphasisTokens[static_cast<std::size_t>(e)]; }
std::string_view to_string(DialogueMode m) { return kModeTokens[static_cast<std::size_t>(m)]; }

Emphasis parse_emphasis(std::string_view token) {
  for (std::size_t i = 0; i < kEmphasisTokens.size(); ++i) {
    if (kEmphasisTokens[i] == token) return static_cast<Emphasis>(i);
  }
  throw Error(Errc::InvalidValue, "unknown emphasis '" + std::string(token) + "'");
}

DialogueMode parse_dialogue_mode(std::string_view token) {
  for (std::size_t i = 0; i < kModeTokens.size(); ++i) {
    if (kModeTokens[i] == token) return static_cast<DialogueMode>(i);
  }
  throw Error(Errc::InvalidValue, "unknown dialogue mode '" + std::string(token) + "'");
}

Initiative initiative_for(DialogueMode mode) {
  switch (mode) {
    case DialogueMode::SystemToUser: return Initiative::SystemLed;
    case DialogueMode::MixedInitiative: return Initiative::Mixed;
    default: return Initiative::UserLed;
  }
}

const RuleRow* RuleTable::find(Cluster c) const {
  for (const auto& r : rows) {
    if (r.cluster == c) return &r;
  }
  return nullptr;
}

void RuleTable::validate() const {
  std::array<int, kClusterCount> seen{};
  for (const auto& r : rows) ++seen[index(r.cluster)];
  for (Cluster c : all_clusters()) {
    if (seen[index(c)] == 0) {
      throw Error(Errc::MissingCluster, "rule table has no row for " + std::string(to_string(c)));
    }
    if (seen[index(c)] > 1) {
      throw Error(Errc::InvalidValue, "rule table repeats " + std::string(to_string(c)));
    }
  }
}

RuleTable default_rule_table() {
  using E = Emphasis;
  using M = DialogueMode;
  RuleTable t;
  t.rows = {
      {Cluster::HighStakesComplex, {E::Primary, E::Deemphasized, E::Deemphasized}, M::SystemToUser,
       "high item value; unfamiliar options; explanation requested"},
      {Cluster::CrossCutting, {E::Secondary, E::Secondary, E::Secondary}, M::MixedInitiative,
       "planning spans facts, discovery and mood"},
      {Cluster::HedonicLeisure, {E::Deemphasized, E::Primary, E::Secondary}, M::UserLedOrMixed,
       "browsing for fun; novelty seeking"},
      {Cluster::AffectRichIdentity, {E::Secondary, E::Secondary, E::Primary}, M::GentleSystemInit,
       "self-image or wellbeing at stake"},
      {Cluster::SocialContextual, {E::Secondary, E::Primary, E::Secondary}, M::UserLedNudges,
       "companions and occasion shape the choice"},
      {Cluster::FunctionalPragmatic, {E::Primary, E::Deemphasized, E::Deemphasized},
       M::SystemToUser, "specs and comparisons drive the choice"},
  };
  return t;
}

double EmphasisMap::weight(Emphasis e) const {
  switch (e) {
    case Emphasis::Primary: return primary;
    case Emphasis::Secondary: return secondary;
    case Emphasis::Deemphasized: return deemphasized;
  }
  return deemphasized;
}

void PolicyPriors::validate() const {
  const auto& e = emphasis;
  for (double w : {e.primary, e.secondary, e.deemphasized}) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error(Errc::InvalidValue, "emphasis weights must lie in [0,1]");
  }
  if (!(e.primary > e.secondary && e.secondary > e.deemphasized)) {
    throw Error(Errc::InvalidValue, "emphasis weights must satisfy primary > secondary > deemphasized");
  }
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw Error(Errc::InvalidValue, "kappa must be >= 0");
  for (Aim a : all_aims()) {
    const auto i = index(a);
    if (beta_exp[i]) check_estimate(beta_exp[i]->estimate, "beta_exp");
    if (beta_gender[i]) check_estimate(beta_gender[i]->estimate, "beta_gender");
    if (beta_age[i]) check_estimate(beta_age[i]->estimate, "beta_age");
    if (const auto& c = calibration[i]) {
      if (c->cutpoints.empty()) throw Error(Errc::InvalidValue, "calibration needs cutpoints");
      for (std::size_t k = 1; k < c->cutpoints.size(); ++k) {
        if (!(c->cutpoints[k] > c->cutpoints[k - 1])) {
          throw Error(Errc::InvalidValue, "calibration cutpoints must increase");
        }
      }
    }
  }
  for (const auto& row : intercepts) {
    for (const auto& est : row) {
      if (est) check_estimate(*est, "intercept");
    }
  }
}

bool PolicyPriors::has_calibration() const {
  return std::any_of(calibration.begin(), calibration.end(), [](const auto& c) { return c.has_value(); });
}

AimWeights base_weights(const DomainProfile& profile, const RuleTable& rules,
                        const PolicyPriors& priors) {
  const RuleRow* row = rules.find(profile.cluster);
  if (row == nullptr) {
    throw Error(Errc::MissingCluster,
                "rule table has no row for " + std::string(to_string(profile.cluster)));
  }
  AimWeights w;
  for (Aim a : all_aims()) w.set(a, priors.emphasis.weight(row->emphasis[index(a)]));
  w.initiative = initiative_for(row->mode);
  return w;
}

AimWeights apply_value_modulation(AimWeights weights, ItemValue item_value) {
  if (item_value != ItemValue::High) return weights;
  for (Aim a : all_aims()) weights.set(a, std::max(weights.get(a), kHighValueFloors[index(a)]));
  return weights;
}

AimWeights apply_trait_modulation(AimWeights weights, const UserTraits& traits,
                                  const PolicyPriors& priors, Domain domain) {
  const double exp_centered = static_cast<double>(traits.crs_experience - 3);
  for (Aim a : all_aims()) {
    const auto i = index(a);
    double delta = 0.0;
    if (const auto& b = priors.beta_exp[i]; b && b->admitted) {
      delta += priors.kappa * b->estimate.mean * exp_centered;
    }
    if (const auto& b = priors.beta_gender[i]; b && flagged(priors.gender_overrides, domain, a)) {
      delta += priors.kappa * b->estimate.mean * gender_code(traits.gender);
    }
    if (const auto& b = priors.beta_age[i]; b && flagged(priors.age_overrides, domain, a)) {
      delta += priors.kappa * b->estimate.mean * age_code(traits.age_group);
    }
    weights.set(a, clamp01(weights.get(a) + delta));
  }
  return weights;
}

AimWeights allocate_initiative(AimWeights weights, const AutonomyPref& autonomy,
                               ItemValue item_value) {
  const Initiative preferred = band(autonomy);
  if (item_value == ItemValue::High && weights.initiative == Initiative::SystemLed &&
      preferred == Initiative::UserLed) {
    weights.initiative = Initiative::Mixed;
  } else {
    weights.initiative = preferred;
  }
  weights.affective_system_init = true;
  return weights;
}

AimWeights decide(const StateVector& state, const RuleTable& rules, const PolicyPriors& priors) {
  AimWeights w = base_weights(state.domain_profile, rules, priors);
  w = apply_value_modulation(w, state.item_value);
  w = apply_trait_modulation(w, state.user_traits, priors, state.domain_profile.domain);
  return allocate_initiative(w, state.autonomy_pref, state.item_value);
}

AimWeights decide_calibrated(const StateVector& state, const RuleTable& rules,
                             const PolicyPriors& priors) {
  const AimWeights rule = decide(state, rules, priors);
  AimWeights w = rule;
  const Domain d = state.domain_profile.domain;
  const auto& traits = state.user_traits;
  for (Aim a : all_aims()) {
    const auto i = index(a);
    const auto& cal = priors.calibration[i];
    const auto& alpha = priors.intercepts[index(d)][i];
    if (!cal || !alpha) continue;
    double eta = alpha->mean;
    if (cal->experience_admitted) eta += cal->experience * (traits.crs_experience - 3);
    if (cal->value_admitted && state.item_value == ItemValue::High) eta += cal->value_shift;
    if (const auto& b = priors.beta_gender[i]; b && flagged(priors.gender_overrides, d, a)) {
      eta += b->estimate.mean * gender_code(traits.gender);
    }
    if (const auto& b = priors.beta_age[i]; b && flagged(priors.age_overrides, d, a)) {
      eta += b->estimate.mean * age_code(traits.age_group);
    }
    w.set(a, clamp01(expected_importance_at(cal->cutpoints, eta)));
  }
  return w;
}

AimWeights decide_flat(const StateVector& state) {
  AimWeights w{0.5, 0.5, 0.5, Initiative::Mixed, true};
  return allocate_initiative(w, state.autonomy_pref, state.item_value);
}

std::array<double, kAimCount> ternary_coordinates(const AimWeights& w) {
  const double s = w.w_edu + w.w_exp + w.w_aff;
  if (!(s > 0.0)) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return {w.w_edu / s, w.w_exp / s, w.w_aff / s};
}

}  // namespace rae
