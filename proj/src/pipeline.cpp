#include "rae/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rae/design.hpp"
#include "rae/error.hpp"
#include "rae/ordinal.hpp"

namespace rae {

namespace {

constexpr std::array<const char*, kAimCount> kAimHypothesis{"h1", "h2", "h3"};

std::string cell_error(const Error& e) { return e.what(); }

std::size_t distinct_participants(const RatingRecords& records) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.participant_id);
  return ids.size();
}

/// Fits `data`, appending diagnostics, Bayes rows and (optionally) a PPC.
void fit_into(AnalysisReport& report, const std::string& model, const std::vector<Observation>& data,
              const FitSpec& spec, const AnalysisConfig& config, std::uint64_t ppc_stream,
              bool female_vs_male = false) {
  FitInfo info;
  info.model = model;
  info.n_observations = data.size();
  try {
    const FitResult result = fit(data, spec, config.mcmc, config.hdi_mass);
    if (config.on_fit) config.on_fit(report.hypothesis, model, result);
    info.divergences = result.divergence_count;
    info.max_rhat = result.max_rhat();
    info.min_ess_bulk = result.min_ess_bulk();
    for (std::size_t p = 0; p < result.names.size(); ++p) {
      BayesRow row;
      row.model = model;
      row.parameter = result.names[p];
      row.summary = result.summaries[p];
      row.credible = credible(row.summary);
      if (row.parameter.rfind("beta[", 0) == 0) {
        const bool male = row.parameter == "beta[male]" && female_vs_male;
        row.odds_ratio = odds_ratio(row.summary.mean,
                                    male ? Contrast::ReferenceVsCoded : Contrast::CodedVsReference);
      }
      report.bayes.push_back(std::move(row));
    }
    if (config.ppc_draws > 0) {
      Rng rng = make_stream(config.mcmc.seed, ppc_stream);
      report.ppc.push_back({model, posterior_predictive_check(result, data, rng, config.ppc_draws,
                                                              config.hdi_mass)});
    }
  } catch (const Error& e) {
    info.error = cell_error(e);
  }
  report.fits.push_back(std::move(info));
}

std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

const BayesRow* AnalysisReport::find_bayes(std::string_view model, std::string_view parameter) const {
  for (const auto& b : bayes) {
    if (b.model == model && b.parameter == parameter) return &b;
  }
  return nullptr;
}

bool credible(const ParameterSummary& s) { return s.hdi_low > 0.0 || s.hdi_high < 0.0; }

AnalysisReport run_h1_h3(const RatingRecords& records, Aim aim, const AnalysisConfig& config) {
  AnalysisReport report;
  report.hypothesis = kAimHypothesis[index(aim)];
  report.aim = aim;
  report.seed = config.mcmc.seed;
  report.hdi_mass = config.hdi_mass;

  RatingRecords rows;
  for (const auto& r : records) {
    if (r.aim == aim) rows.push_back(r);
  }
  report.effective_n = distinct_participants(rows);

  std::array<std::vector<double>, kDomainCount> by_domain;
  for (const auto& r : rows) {
    if (r.value_frame == config.test_frame) by_domain[index(r.domain)].push_back(r.rating);
  }
  std::vector<Domain> present;
  std::vector<std::vector<double>> groups;
  for (Domain d : all_domains()) {
    if (!by_domain[index(d)].empty()) {
      present.push_back(d);
      groups.push_back(by_domain[index(d)]);
    }
  }
  if (present.size() < 2) {
    throw Error(Errc::EmptyGroup, "need at least 2 domains with " +
                                      std::string(to_string(aim)) + " ratings");
  }

  const auto kw = kruskal_wallis(groups);
  report.tests.push_back({"kruskal_wallis", std::nullopt, aim, kw.test, std::nullopt,
                          kw.test.p_value < 0.05, std::nullopt});
  for (std::size_t i = 0; i < present.size(); ++i) {
    report.mean_ranks.push_back({aim, present[i], kw.mean_ranks[i], kw.sizes[i]});
  }

  const std::size_t pairs = present.size() * (present.size() - 1) / 2;
  for (std::size_t i = 0; i < present.size(); ++i) {
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      PairwiseRow row;
      row.aim = aim;
      row.first = present[i];
      row.second = present[j];
      row.test = mann_whitney_u(groups[i], groups[j], pairs);
      row.notable = row.test.effect_r.value_or(0.0) >= config.pairwise_r_threshold;
      report.pairwise.push_back(std::move(row));
    }
  }

  if (!config.skip_bayes) {
    // Domains seen in either frame form the groups of the fit.
    std::vector<Domain> fit_domains;
    std::array<std::optional<std::size_t>, kDomainCount> group_of;
    for (Domain d : all_domains()) {
      const bool any = std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r.domain == d; });
      if (any) {
        group_of[index(d)] = fit_domains.size();
        fit_domains.push_back(d);
      }
    }
    FitSpec spec;
    spec.beta_names = {"experience", "high_value"};
    for (Domain d : fit_domains) spec.group_names.emplace_back(to_string(d));
    std::vector<Observation> data;
    for (const auto& r : rows) {
      if (auto x = make_covariates(spec.beta_names, r.traits, r.value_frame, group_of[index(r.domain)])) {
        data.push_back({std::move(*x), r.rating, 1.0});
      }
    }
    fit_into(report, std::string(to_string(aim)), data, spec, config, 100 + index(aim));
  }
  return report;
}

AnalysisReport run_h4(const RatingRecords& records, const AnalysisConfig& config) {
  AnalysisReport report;
  report.hypothesis = "h4";
  report.seed = config.mcmc.seed;
  report.hdi_mass = config.hdi_mass;

  std::set<std::string> paired_ids;
  for (Aim aim : all_aims()) {
    struct Acc {
      double low = 0.0, high = 0.0;
      int n_low = 0, n_high = 0;
    };
    std::map<std::string, Acc> acc;
    std::array<std::array<std::size_t, kCategories>, 2> counts{};
    for (const auto& r : records) {
      if (r.aim != aim) continue;
      auto& a = acc[r.participant_id];
      const std::size_t f = r.value_frame == ItemValue::High ? 1 : 0;
      (f ? a.high : a.low) += r.rating;
      ++(f ? a.n_high : a.n_low);
      ++counts[f][static_cast<std::size_t>(r.rating - 1)];
    }
    for (std::size_t f = 0; f < 2; ++f) {
      FrequencyRow row;
      row.aim = aim;
      row.frame = f ? ItemValue::High : ItemValue::Low;
      for (std::size_t k = 0; k < kCategories; ++k) row.n += counts[f][k];
      for (std::size_t k = 0; k < kCategories; ++k) {
        row.percent[k] = row.n ? 100.0 * static_cast<double>(counts[f][k]) / static_cast<double>(row.n) : 0.0;
      }
      report.frequencies.push_back(row);
    }

    std::vector<double> high, low;
    for (const auto& [id, a] : acc) {
      if ((a.n_low == 0) != (a.n_high == 0)) {
        throw Error(Errc::MissingPair, "participant " + id + " lacks the " +
                                           (a.n_low == 0 ? "Low" : "High") + " frame for " +
                                           std::string(to_string(aim)));
      }
      high.push_back(a.high / a.n_high);
      low.push_back(a.low / a.n_low);
      paired_ids.insert(id);
    }
    CellResult cell{"wilcoxon_paired", std::nullopt, aim, std::nullopt, std::nullopt, false, std::nullopt};
    try {
      WilcoxonOptions opt;
      opt.denominator = config.denominator;
      cell.test = wilcoxon_signed_rank(high, low, opt);
      cell.rejected = cell.test->p_value < 0.05;
    } catch (const Error& e) {
      cell.error = cell_error(e);
    }
    report.tests.push_back(std::move(cell));
  }
  report.effective_n = paired_ids.size();
  return report;
}

AnalysisReport run_h5(const RatingRecords& records, const AnalysisConfig& config) {
  AnalysisReport report;
  report.hypothesis = "h5";
  report.seed = config.mcmc.seed;
  report.hdi_mass = config.hdi_mass;

  struct Family {
    const char* name;
    std::optional<double> (*code)(const UserTraits&);
  };
  const std::array<Family, 3> families{{
      {"spearman:experience",
       [](const UserTraits& t) -> std::optional<double> { return t.crs_experience; }},
      {"spearman:gender",
       [](const UserTraits& t) { return feature_value("gender", t, ItemValue::Low); }},
      {"spearman:age",
       [](const UserTraits& t) -> std::optional<double> { return static_cast<double>(index(t.age_group)); }},
  }};

  std::set<std::string> ids;
  for (const auto& fam : families) {
    const std::size_t first = report.tests.size();
    for (Domain d : all_domains()) {
      for (Aim a : all_aims()) {
        std::vector<double> x, y;
        for (const auto& r : records) {
          if (r.domain != d || r.aim != a || r.value_frame != config.test_frame) continue;
          if (auto v = fam.code(r.traits)) {
            x.push_back(*v);
            y.push_back(r.rating);
            ids.insert(r.participant_id);
          }
        }
        CellResult cell{fam.name, d, a, std::nullopt, std::nullopt, false, std::nullopt};
        try {
          cell.test = spearman(x, y);
        } catch (const Error& e) {
          cell.error = cell_error(e);
        }
        report.tests.push_back(std::move(cell));
      }
    }
    // BH inside this family only, over the cells that produced a p-value.
    std::vector<double> p;
    std::vector<std::size_t> at;
    for (std::size_t i = first; i < report.tests.size(); ++i) {
      if (report.tests[i].test) {
        p.push_back(report.tests[i].test->p_value);
        at.push_back(i);
      }
    }
    const auto fdr = benjamini_hochberg(p, config.fdr_q);
    for (std::size_t k = 0; k < at.size(); ++k) {
      report.tests[at[k]].p_adjusted = fdr.adjusted[k];
      report.tests[at[k]].rejected = fdr.rejected[k];
    }
  }
  report.effective_n = ids.size();

  if (!config.skip_bayes) {
    for (Aim a : all_aims()) {
      FitSpec spec;
      spec.beta_names = {"experience", "gender", "age"};
      std::array<std::optional<std::size_t>, kDomainCount> group_of;
      for (Domain d : all_domains()) {
        const bool any = std::any_of(records.begin(), records.end(), [&](const auto& r) {
          return r.domain == d && r.aim == a && r.value_frame == config.test_frame;
        });
        if (any) {
          group_of[index(d)] = spec.group_names.size();
          spec.group_names.emplace_back(to_string(d));
        }
      }
      std::vector<Observation> data;
      for (const auto& r : records) {
        if (r.aim != a || r.value_frame != config.test_frame) continue;
        if (auto x = make_covariates(spec.beta_names, r.traits, r.value_frame, group_of[index(r.domain)])) {
          data.push_back({std::move(*x), r.rating, 1.0});
        }
      }
      fit_into(report, std::string(to_string(a)), data, spec, config, 200 + index(a));
    }
  }
  return report;
}

AnalysisReport run_h6(const RatingRecords& records, const AnalysisConfig& config) {
  AnalysisReport report;
  report.hypothesis = "h6";
  report.seed = config.mcmc.seed;
  report.hdi_mass = config.hdi_mass;

  // One answer per participant, first occurrence wins.
  std::vector<std::pair<UserTraits, AutonomyPref>> people;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!r.autonomy || !seen.insert(r.participant_id).second) continue;
    people.emplace_back(r.traits, *r.autonomy);
  }
  if (people.size() < 10) {
    throw Error(Errc::DegenerateData, "autonomy answers from " + std::to_string(people.size()) +
                                          " participants; need at least 10");
  }
  report.effective_n = people.size();

  std::vector<int> edu, exp;
  for (const auto& [t, a] : people) {
    edu.push_back(a.educative_control);
    exp.push_back(a.explorative_control);
  }
  const std::array<std::pair<Aim, std::vector<double>>, 2> items{
      {{Aim::Educative, as_doubles(edu)}, {Aim::Explorative, as_doubles(exp)}}};
  for (const auto& [aim, values] : items) {
    CellResult cell{"wilcoxon_one_sample", std::nullopt, aim, std::nullopt, std::nullopt, false, std::nullopt};
    try {
      WilcoxonOptions opt;
      opt.denominator = config.denominator;
      cell.test = wilcoxon_one_sample(values, 3.0, opt);
      cell.rejected = cell.test->p_value < 0.05;
    } catch (const Error& e) {
      cell.error = cell_error(e);
    }
    report.tests.push_back(std::move(cell));
  }
  CellResult assoc{"spearman:controls", std::nullopt, std::nullopt, std::nullopt, std::nullopt, false, std::nullopt};
  try {
    assoc.test = spearman(items[0].second, items[1].second);
    assoc.rejected = assoc.test->p_value < 0.05;
  } catch (const Error& e) {
    assoc.error = cell_error(e);
  }
  report.tests.push_back(std::move(assoc));

  if (!config.skip_bayes) {
    FitSpec spec;
    spec.beta_names = {"male", "experience", "age_25_34", "age_35_44",
                       "age_45_54", "age_55_64", "age_65plus"};
    for (std::size_t item = 0; item < 2; ++item) {
      std::vector<Observation> data;
      for (const auto& [t, a] : people) {
        if (auto x = make_covariates(spec.beta_names, t, ItemValue::Low)) {
          data.push_back({std::move(*x), item == 0 ? a.educative_control : a.explorative_control, 1.0});
        }
      }
      const std::string model = item == 0 ? "educative_control" : "explorative_control";
      fit_into(report, model, data, spec, config, 300 + item, true);
    }
  }
  return report;
}

PolicyPriors calibrate(const AnalysisReports& reports, double alpha) {
  auto need = [&](const std::string& id) -> const AnalysisReport& {
    const auto it = reports.find(id);
    if (it == reports.end()) throw Error(Errc::MissingReport, "report " + id + " is missing");
    return it->second;
  };
  const AnalysisReport& h4 = need("h4");
  const AnalysisReport& h5 = need("h5");

  PolicyPriors priors;
  auto estimate = [](const BayesRow& b) {
    return Estimate{b.summary.mean, b.summary.hdi_low, b.summary.hdi_high};
  };

  for (Aim a : all_aims()) {
    const auto i = index(a);
    const std::string model(to_string(a));
    const AnalysisReport& h = need(kAimHypothesis[i]);
    for (Domain d : all_domains()) {
      if (const auto* b = h.find_bayes(model, "alpha[" + std::string(to_string(d)) + "]")) {
        priors.intercepts[index(d)][i] = estimate(*b);
      }
    }

    if (const auto* b = h5.find_bayes(model, "beta[experience]")) {
      priors.beta_exp[i] = TraitCoefficient{estimate(*b), b->credible};
    }
    if (const auto* b = h5.find_bayes(model, "beta[gender]")) {
      priors.beta_gender[i] = TraitCoefficient{estimate(*b), false};
    }
    if (const auto* b = h5.find_bayes(model, "beta[age]")) {
      priors.beta_age[i] = TraitCoefficient{estimate(*b), false};
    }

    std::vector<double> cuts;
    for (int k = 1;; ++k) {
      const auto* b = h.find_bayes(model, "cutpoint[" + std::to_string(k) + "]");
      if (b == nullptr) break;
      cuts.push_back(b->summary.mean);
    }
    const auto* b_exp = h.find_bayes(model, "beta[experience]");
    const auto* b_val = h.find_bayes(model, "beta[high_value]");
    if (cuts.size() + 1 == static_cast<std::size_t>(kCategories) && b_exp && b_val) {
      AimCalibration cal;
      cal.cutpoints = cuts;
      cal.experience = b_exp->summary.mean;
      cal.value_shift = b_val->summary.mean;
      cal.experience_admitted = priors.beta_exp[i] && priors.beta_exp[i]->admitted;
      for (const auto& t : h4.tests) {
        if (t.aim == a && t.test && t.test->p_value < alpha) cal.value_admitted = true;
      }
      priors.calibration[i] = std::move(cal);
    }
  }

  for (const auto& t : h5.tests) {
    if (t.family == "spearman:gender" && t.rejected && t.domain && t.aim) {
      priors.gender_overrides.push_back({*t.domain, *t.aim});
    }
  }
  std::sort(priors.gender_overrides.begin(), priors.gender_overrides.end());
  priors.validate();
  return priors;
}

AnalysisReports published_reports() {
  AnalysisReports out;
  auto summary = [](double mean, double low, double high) {
    ParameterSummary s;
    s.mean = mean;
    s.hdi_low = low;
    s.hdi_high = high;
    return s;
  };
  auto bayes = [&](std::string model, std::string param, double mean, double low, double high) {
    BayesRow row;
    row.model = std::move(model);
    row.parameter = std::move(param);
    row.summary = summary(mean, low, high);
    row.credible = credible(row.summary);
    return row;
  };

  struct Omnibus {
    Aim aim;
    double h;
    Domain top;
    double mean, low, high;
  };
  const std::array<Omnibus, 3> omnibus{{
      {Aim::Educative, 93.15, Domain::Education, 1.25, 0.47, 1.96},
      {Aim::Explorative, 33.34, Domain::Travel, 1.30, 0.52, 1.99},
      {Aim::Affective, 25.10, Domain::Wellness, 1.12, 0.38, 1.83},
  }};
  for (const auto& o : omnibus) {
    AnalysisReport r;
    r.hypothesis = kAimHypothesis[index(o.aim)];
    r.aim = o.aim;
    r.effective_n = 168;
    TestResult kw;
    kw.statistic = o.h;
    kw.p_value = chi_square_sf(o.h, 9.0);
    kw.n_effective = kw.n_total = 1680;
    r.tests.push_back({"kruskal_wallis", std::nullopt, o.aim, kw, std::nullopt, true, std::nullopt});
    r.bayes.push_back(bayes(std::string(to_string(o.aim)),
                            "alpha[" + std::string(to_string(o.top)) + "]", o.mean, o.low, o.high));
    out[r.hypothesis] = std::move(r);
  }

  {
    AnalysisReport r;
    r.hypothesis = "h4";
    r.effective_n = 168;
    const std::array<std::tuple<Aim, double, double>, 3> rows{{
        {Aim::Educative, 368.5, -10.66},
        {Aim::Explorative, 473.5, -10.49},
        {Aim::Affective, 68.5, -11.13},
    }};
    for (const auto& [aim, w, z] : rows) {
      TestResult t;
      t.statistic = w;
      t.z = z;
      t.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
      t.n_total = 168;
      t.effect_r_total = effect_size_r(z, 168);
      t.effect_r = t.effect_r_total;
      t.denominator = EffectDenominator::TotalPairs;
      r.tests.push_back({"wilcoxon_paired", std::nullopt, aim, t, std::nullopt, true, std::nullopt});
    }
    out["h4"] = std::move(r);
  }

  {
    AnalysisReport r;
    r.hypothesis = "h5";
    r.effective_n = 164;
    r.bayes = {
        bayes("Educative", "beta[experience]", 0.21, 0.12, 0.29),
        bayes("Educative", "beta[gender]", -0.25, -0.43, -0.06),
        bayes("Educative", "beta[age]", -0.08, -0.17, 0.00),
        bayes("Explorative", "beta[experience]", 0.36, 0.27, 0.44),
        bayes("Explorative", "beta[gender]", -0.42, -0.60, -0.25),
        bayes("Affective", "beta[experience]", 0.40, 0.32, 0.49),
        bayes("Affective", "beta[gender]", -0.51, -0.69, -0.34),
    };
    // Rows of the correlation table: rho and BH-adjusted p for age, gender, experience.
    struct Row {
      Domain d;
      Aim a;
      std::array<double, 6> v;  // age rho, p, gender rho, p, exp rho, p
    };
    using D = Domain;
    using A = Aim;
    const std::vector<Row> table{
        {D::Apparel, A::Explorative, {-0.04, .99, -0.01, .93, 0.27, .00}},
        {D::Education, A::Educative, {-0.15, .78, -0.00, .99, 0.18, .05}},
        {D::Education, A::Explorative, {-0.07, .99, 0.14, .26, 0.19, .04}},
        {D::Entertainment, A::Affective, {-0.01, .99, -0.02, .92, 0.24, .01}},
        {D::Finance, A::Affective, {0.02, .99, 0.14, .26, 0.21, .03}},
        {D::Finance, A::Educative, {0.00, .99, 0.04, .77, 0.19, .04}},
        {D::Finance, A::Explorative, {0.10, .99, 0.24, .04, 0.20, .04}},
        {D::Housing, A::Affective, {-0.00, .99, 0.24, .04, 0.16, .07}},
        {D::Housing, A::Explorative, {-0.06, .99, 0.19, .15, 0.18, .05}},
        {D::Tech, A::Affective, {0.04, .99, 0.07, .70, 0.32, .00}},
        {D::Tech, A::Explorative, {-0.02, .99, 0.04, .77, 0.20, .04}},
        {D::Wellness, A::Affective, {-0.16, .78, 0.14, .26, 0.23, .01}},
        {D::Wellness, A::Educative, {-0.00, .99, 0.04, .77, 0.24, .01}},
        {D::Wellness, A::Explorative, {-0.02, .99, 0.12, .33, 0.33, .00}},
    };
    const std::array<const char*, 3> fam{"spearman:age", "spearman:gender", "spearman:experience"};
    for (std::size_t f = 0; f < 3; ++f) {
      for (const auto& row : table) {
        TestResult t;
        t.statistic = row.v[2 * f];
        t.rho = t.statistic;
        t.n_total = t.n_effective = 168;
        const double p_adj = row.v[2 * f + 1];
        t.p_value = p_adj;
        r.tests.push_back({fam[f], row.d, row.a, t, p_adj, p_adj <= 0.05, std::nullopt});
      }
    }
    out["h5"] = std::move(r);
  }
  return out;
}

}  // namespace rae
