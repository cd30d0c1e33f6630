#include "rae/sim.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "rae/design.hpp"
#include "rae/error.hpp"

namespace rae {

namespace {

template <std::size_t N>
void check_distribution(const std::array<double, N>& p, std::string_view what) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw Error(Errc::InvalidSpec, std::string(what) + " has a negative or non-finite entry");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(Errc::InvalidSpec, std::string(what) + " sums to " + std::to_string(total) + ", not 1");
  }
}

template <std::size_t N>
std::size_t draw_categorical(const std::array<double, N>& p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // Rounding left u above the last partial sum: take the last non-empty bin.
  for (std::size_t i = N; i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return N - 1;
}

double feature_eta(const OrdinalModel& model, const UserTraits& traits, ItemValue frame) {
  double eta = 0.0;
  for (std::size_t i = 0; i < model.beta.size(); ++i) {
    eta += model.beta[i] * feature_value(model.beta_names[i], traits, frame).value_or(0.0);
  }
  return eta;
}

void check_features(const OrdinalModel& m, std::string_view what) {
  for (const auto& f : m.beta_names) {
    if (!is_known_feature(f)) throw Error(Errc::InvalidSpec, std::string(what) + ": unknown feature " + f);
    if (f == "high_value") {
      throw Error(Errc::InvalidSpec, std::string(what) + ": use value_shift for the value frame");
    }
  }
}

int clamp_rating(int r) { return std::clamp(r, kRatingMin, kRatingMax); }

Initiative preferred_band(const std::optional<AutonomyPref>& a) {
  if (!a) return Initiative::Mixed;
  const double m = a->mean();
  if (m > 3.0) return Initiative::UserLed;
  if (m < 3.0) return Initiative::SystemLed;
  return Initiative::Mixed;
}

OrdinalModel aim_model(std::vector<double> alpha, double exp_coef, double gender_coef,
                       double age_coef) {
  OrdinalModel m;
  m.cutpoints = {-2.2, -0.8, 0.8, 2.2};
  m.beta_names = {"experience", "gender", "age"};
  m.beta = {exp_coef, gender_coef, age_coef};
  m.alpha = std::move(alpha);
  m.sigma_alpha = 0.8;
  return m;
}

OrdinalModel control_model(double male_coef) {
  OrdinalModel m;
  m.cutpoints = {-3.5, -2.2, -0.6, 1.4};
  m.beta_names = {"male", "experience"};
  m.beta = {male_coef, 0.2};
  return m;
}

}  // namespace

void PopulationSpec::validate() const {
  if (n_users == 0) throw Error(Errc::InvalidSpec, "n_users must be positive");
  check_distribution(experience, "experience distribution");
  check_distribution(gender, "gender distribution");
  check_distribution(age, "age distribution");
  for (Aim a : all_aims()) {
    const auto& t = aims[index(a)];
    const std::string what = "aim " + std::string(to_string(a));
    try {
      t.model.validate();
    } catch (const Error& e) {
      throw Error(Errc::InvalidSpec, what + ": " + e.what());
    }
    if (t.model.categories() != kCategories) throw Error(Errc::InvalidSpec, what + ": need 4 cutpoints");
    if (t.model.alpha.size() != kDomainCount) {
      throw Error(Errc::InvalidSpec, what + ": need one intercept per domain (10)");
    }
    check_features(t.model, what);
    if (!std::isfinite(t.value_shift)) throw Error(Errc::InvalidSpec, what + ": value_shift not finite");
  }
  for (const auto* m : {&autonomy.educative, &autonomy.explorative}) {
    if (!*m) continue;
    try {
      (*m)->validate();
    } catch (const Error& e) {
      throw Error(Errc::InvalidSpec, std::string("autonomy model: ") + e.what());
    }
    if ((*m)->categories() != kCategories) throw Error(Errc::InvalidSpec, "autonomy model: need 4 cutpoints");
    check_features(**m, "autonomy model");
  }
  if (autonomy.educative.has_value() != autonomy.explorative.has_value()) {
    throw Error(Errc::InvalidSpec, "autonomy needs both educative and explorative models");
  }
  if (autonomy.fixed) {
    const auto& f = *autonomy.fixed;
    if (!valid_rating(f.educative_control) || !valid_rating(f.explorative_control)) {
      throw Error(Errc::InvalidSpec, "fixed autonomy controls must lie in 1..5");
    }
  }
}

PopulationSpec default_population() {
  PopulationSpec s;
  // Domain order: Apparel Beauty Entertainment Tech Dining Wellness Travel Education Finance Housing
  s.aims[index(Aim::Educative)] = {
      aim_model({-0.9, -0.4, -0.6, 0.9, -1.25, -0.1, 0.7, 1.25, 0.3, 0.1}, 0.21, -0.25, -0.08), 1.0};
  s.aims[index(Aim::Explorative)] = {
      aim_model({0.5, -0.2, 0.8, 0.3, 0.2, -0.6, 1.3, -0.4, -1.0, -0.9}, 0.36, -0.42, 0.0), 0.9};
  s.aims[index(Aim::Affective)] = {
      aim_model({0.4, 0.6, 0.7, -0.9, 0.3, 1.12, 0.5, -0.7, -1.1, -0.92}, 0.40, -0.51, 0.0), 1.1};
  s.autonomy.educative = control_model(-0.8);
  s.autonomy.explorative = control_model(-0.3);
  return s;
}

SimulatedUser draw_user(const PopulationSpec& spec, std::size_t u, Rng& rng) {
  SimulatedUser user;
  char id[32];
  std::snprintf(id, sizeof id, "S%04zu", u + 1);
  user.participant_id = id;
  user.traits.crs_experience = static_cast<int>(draw_categorical(spec.experience, rng)) + 1;
  user.traits.gender = static_cast<Gender>(draw_categorical(spec.gender, rng));
  user.traits.age_group = static_cast<AgeGroup>(draw_categorical(spec.age, rng));
  if (spec.autonomy.fixed) {
    user.autonomy = spec.autonomy.fixed;
  } else if (spec.autonomy.educative && spec.autonomy.explorative) {
    const auto& me = *spec.autonomy.educative;
    const auto& mx = *spec.autonomy.explorative;
    AutonomyPref a;
    a.educative_control = clamp_rating(
        sample_rating_at(me.cutpoints, feature_eta(me, user.traits, ItemValue::Low), rng));
    a.explorative_control = clamp_rating(
        sample_rating_at(mx.cutpoints, feature_eta(mx, user.traits, ItemValue::Low), rng));
    user.autonomy = a;
  }
  return user;
}

double true_eta(const PopulationSpec& spec, const UserTraits& traits, Domain domain, Aim aim,
                ItemValue frame) {
  const auto& t = spec.aims[index(aim)];
  double eta = t.model.alpha.at(index(domain)) + feature_eta(t.model, traits, frame);
  if (frame == ItemValue::High) eta += t.value_shift;
  return eta;
}

RatingRecords generate_population(const PopulationSpec& spec) {
  spec.validate();
  RatingRecords out;
  out.reserve(spec.n_users * kDomainCount * kAimCount * 2);
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    Rng rng = make_stream(spec.seed, u + 1);
    const auto user = draw_user(spec, u, rng);
    for (Domain d : all_domains()) {
      for (Aim a : all_aims()) {
        for (ItemValue frame : {ItemValue::Low, ItemValue::High}) {
          RatingRecord r;
          r.participant_id = user.participant_id;
          r.domain = d;
          r.aim = a;
          r.value_frame = frame;
          r.traits = user.traits;
          r.autonomy = user.autonomy;
          const double eta = true_eta(spec, user.traits, d, a, frame);
          r.rating = sample_rating_at(spec.aims[index(a)].model.cutpoints, eta, rng);
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

double expected_importance(const OrdinalModel& model, const Covariates& x) {
  return expected_importance_at(model.cutpoints, linear_predictor(model, x));
}

AlignmentScore evaluate_policy(const PolicyFn& policy, const PopulationSpec& spec,
                               const std::array<DomainProfile, kDomainCount>& profiles) {
  AlignmentScore score;
  if (spec.n_users == 0) return score;
  spec.validate();
  std::array<double, kAimCount> gap_sum{};
  std::size_t mismatches = 0;
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    Rng rng = make_stream(spec.seed, u + 1);
    const auto user = draw_user(spec, u, rng);
    const Initiative wanted = preferred_band(user.autonomy);
    for (Domain d : all_domains()) {
      for (ItemValue frame : {ItemValue::Low, ItemValue::High}) {
        StateVector state;
        state.domain_profile = profiles[index(d)];
        state.item_value = frame;
        state.user_traits = user.traits;
        state.autonomy_pref = user.autonomy.value_or(AutonomyPref{});
        const AimWeights w = policy(state);
        for (Aim a : all_aims()) {
          const double eta = true_eta(spec, user.traits, d, a, frame);
          const double target = expected_importance_at(spec.aims[index(a)].model.cutpoints, eta);
          gap_sum[index(a)] += std::abs(w.get(a) - target);
        }
        if (w.initiative != wanted) ++mismatches;
        ++score.n;
      }
    }
  }
  const double n = static_cast<double>(score.n);
  for (std::size_t i = 0; i < kAimCount; ++i) score.mean_gap[i] = gap_sum[i] / n;
  score.overall_gap = std::accumulate(score.mean_gap.begin(), score.mean_gap.end(), 0.0) / kAimCount;
  score.initiative_mismatch = static_cast<double>(mismatches) / n;
  return score;
}

AlignmentScore evaluate_policy(const RuleTable& rules, const PolicyPriors& priors,
                               const PopulationSpec& spec, PolicyKind kind) {
  PolicyFn fn;
  switch (kind) {
    case PolicyKind::Rules:
      fn = [&](const StateVector& s) { return decide(s, rules, priors); };
      break;
    case PolicyKind::Calibrated:
      fn = [&](const StateVector& s) { return decide_calibrated(s, rules, priors); };
      break;
    case PolicyKind::Flat:
      fn = [](const StateVector& s) { return decide_flat(s); };
      break;
  }
  return evaluate_policy(fn, spec);
}

}  // namespace rae
