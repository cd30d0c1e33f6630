#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rae/io.hpp"
#include "rae/ordinal.hpp"
#include "rae/pipeline.hpp"
#include "rae/policy.hpp"
#include "rae/sim.hpp"
#include "rae/stats.hpp"

namespace py = pybind11;

namespace {

py::dict test_dict(const rae::TestResult& t) {
  py::dict d;
  d["statistic"] = t.statistic;
  d["z"] = t.z;
  d["p_value"] = t.p_value;
  d["n_effective"] = t.n_effective;
  d["n_total"] = t.n_total;
  d["effect_r"] = t.effect_r;
  d["rank_biserial"] = t.rank_biserial;
  d["cles"] = t.cles;
  d["w_plus"] = t.w_plus;
  d["w_minus"] = t.w_minus;
  d["p_exact"] = t.p_exact;
  d["p_normal"] = t.p_normal;
  d["exact"] = t.exact;
  d["rho"] = t.rho;
  return d;
}

py::dict weights_dict(const rae::AimWeights& w) {
  py::dict d;
  d["w_edu"] = w.w_edu;
  d["w_exp"] = w.w_exp;
  d["w_aff"] = w.w_aff;
  d["initiative"] = std::string(rae::to_string(w.initiative));
  d["affective_system_init"] = w.affective_system_init;
  return d;
}

py::dict alignment_dict(const rae::AlignmentScore& s) {
  py::dict d;
  d["mean_gap"] = s.mean_gap;
  d["overall_gap"] = s.overall_gap;
  d["initiative_mismatch"] = s.initiative_mismatch;
  d["n"] = s.n;
  return d;
}

rae::Alternative parse_alternative(const std::string& s) {
  if (s == "two-sided") return rae::Alternative::TwoSided;
  if (s == "greater") return rae::Alternative::Greater;
  if (s == "less") return rae::Alternative::Less;
  throw rae::Error(rae::Errc::InvalidArgument, "alternative must be two-sided, greater or less");
}

rae::PriorsArtifact artifact_or_default(const std::optional<std::string>& priors_json) {
  if (priors_json) return rae::priors_from_json(*priors_json);
  rae::PriorsArtifact a;
  a.priors = rae::calibrate(rae::published_reports());
  a.rules = rae::default_rule_table();
  a.provenance.source = "published";
  return a;
}

rae::PopulationSpec spec_or_default(const std::optional<std::string>& yaml, std::optional<std::uint64_t> seed) {
  auto spec = yaml ? rae::population_from_yaml(*yaml) : rae::default_population();
  if (seed) spec.seed = *seed;
  spec.validate();
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of rae_engine";

  auto err = py::register_exception<rae::Error>(m, "RaeError", PyExc_ValueError);
  (void)err;

  // stats
  m.def("mid_ranks", [](const std::vector<double>& v) { return rae::mid_ranks(v); });
  m.def("chi_square_sf", &rae::chi_square_sf, py::arg("x"), py::arg("df"));
  m.def("effect_size_r", &rae::effect_size_r, py::arg("z"), py::arg("n"));
  m.def("kruskal_wallis", [](const std::vector<std::vector<double>>& groups) {
    const auto r = rae::kruskal_wallis(groups);
    py::dict d = test_dict(r.test);
    d["mean_ranks"] = r.mean_ranks;
    return d;
  });
  m.def(
      "mann_whitney_u",
      [](const std::vector<double>& a, const std::vector<double>& b) { return test_dict(rae::mann_whitney_u(a, b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& x, const std::vector<double>& y, const std::string& alternative) {
        rae::WilcoxonOptions opt;
        opt.alternative = parse_alternative(alternative);
        return test_dict(rae::wilcoxon_signed_rank(x, y, opt));
      },
      py::arg("x"), py::arg("y"), py::arg("alternative") = "two-sided");
  m.def(
      "wilcoxon_one_sample",
      [](const std::vector<double>& x, double mu) { return test_dict(rae::wilcoxon_one_sample(x, mu)); },
      py::arg("x"), py::arg("mu") = 3.0);
  m.def(
      "spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return test_dict(rae::spearman(x, y)); },
      py::arg("x"), py::arg("y"));
  m.def(
      "benjamini_hochberg",
      [](const std::vector<double>& p, double q) {
        const auto r = rae::benjamini_hochberg(p, q);
        return py::make_tuple(r.adjusted, r.rejected);
      },
      py::arg("p_values"), py::arg("q") = 0.05);
  m.def("bonferroni", [](const std::vector<double>& p) { return rae::bonferroni(p); });

  // ordinal
  m.def(
      "category_probs",
      [](const std::vector<double>& cutpoints, double eta) { return rae::category_probs_at(cutpoints, eta); },
      py::arg("cutpoints"), py::arg("eta"));
  m.def("hdi", [](const std::vector<double>& s, double mass) {
    const auto i = rae::hdi(s, mass);
    return py::make_tuple(i.low, i.high);
  }, py::arg("samples"), py::arg("mass") = 0.94);

  // policy
  m.def(
      "decide",
      [](const std::string& domain, const std::string& value, int experience, const std::optional<std::string>& gender,
         const std::optional<std::string>& age, const std::optional<std::pair<int, int>>& controls,
         const std::optional<std::string>& priors_json) {
        const auto artifact = artifact_or_default(priors_json);
        rae::StateVector s;
        s.domain_profile = rae::default_profiles()[rae::index(rae::parse_domain(domain))];
        s.item_value = rae::parse_item_value(value);
        s.user_traits.crs_experience = experience;
        if (gender) s.user_traits.gender = rae::parse_gender(*gender);
        if (age) s.user_traits.age_group = rae::parse_age_group(*age);
        if (controls) s.autonomy_pref = {controls->first, controls->second};
        s = rae::validate_state(std::move(s));
        const auto w = artifact.priors.has_calibration() ? rae::decide_calibrated(s, artifact.rules, artifact.priors)
                                                         : rae::decide(s, artifact.rules, artifact.priors);
        return weights_dict(w);
      },
      py::arg("domain"), py::arg("value") = "Low", py::arg("experience") = 3, py::arg("gender") = py::none(),
      py::arg("age") = py::none(), py::arg("controls") = py::none(), py::arg("priors_json") = py::none());

  // pipeline and artifacts
  m.def(
      "analyze",
      [](const std::string& csv_text, const std::string& hypothesis, std::uint64_t seed, int chains, int warmup,
         int draws, bool skip_bayes) {
        const auto ingested = rae::parse_ratings_csv(csv_text, true);
        rae::AnalysisConfig cfg;
        cfg.mcmc.seed = seed;
        cfg.mcmc.chains = chains;
        cfg.mcmc.warmup_draws = warmup;
        cfg.mcmc.post_warmup_draws = draws;
        cfg.mcmc.validate();
        cfg.skip_bayes = skip_bayes;
        py::gil_scoped_release release;
        rae::AnalysisReport r;
        if (hypothesis == "h1") r = rae::run_h1_h3(ingested.records, rae::Aim::Educative, cfg);
        else if (hypothesis == "h2") r = rae::run_h1_h3(ingested.records, rae::Aim::Explorative, cfg);
        else if (hypothesis == "h3") r = rae::run_h1_h3(ingested.records, rae::Aim::Affective, cfg);
        else if (hypothesis == "h4") r = rae::run_h4(ingested.records, cfg);
        else if (hypothesis == "h5") r = rae::run_h5(ingested.records, cfg);
        else if (hypothesis == "h6") r = rae::run_h6(ingested.records, cfg);
        else throw rae::Error(rae::Errc::InvalidArgument, "unknown hypothesis '" + hypothesis + "'");
        return rae::report_to_json(r);
      },
      py::arg("csv_text"), py::arg("hypothesis"), py::arg("seed") = 1, py::arg("chains") = 4,
      py::arg("warmup") = 1000, py::arg("draws") = 2000, py::arg("skip_bayes") = false);
  m.def(
      "calibrate",
      [](const std::vector<std::string>& report_jsons, std::uint64_t seed) {
        rae::AnalysisReports reports;
        std::string all;
        for (const auto& text : report_jsons) {
          auto r = rae::report_from_json(text);
          const auto h = r.hypothesis;
          reports.insert_or_assign(h, std::move(r));
          all += text;
        }
        rae::PriorsArtifact a;
        a.priors = rae::calibrate(reports);
        a.rules = rae::default_rule_table();
        a.provenance = {"reports", rae::sha256_hex(all), seed, std::nullopt};
        return rae::priors_to_json(a);
      },
      py::arg("report_jsons"), py::arg("seed") = 1);
  m.def("published_priors", [] { return rae::priors_to_json(artifact_or_default(std::nullopt)); });
  m.def("render_text", [](const std::string& text) { return rae::render_text(text); });
  m.def("sha256_hex", [](const std::string& bytes) { return rae::sha256_hex(bytes); });

  // simulation
  m.def(
      "simulate_csv",
      [](const std::optional<std::string>& spec_yaml, std::optional<std::uint64_t> seed) {
        const auto spec = spec_or_default(spec_yaml, seed);
        std::ostringstream out;
        rae::write_ratings_csv(out, rae::generate_population(spec));
        return out.str();
      },
      py::arg("spec_yaml") = py::none(), py::arg("seed") = py::none());
  m.def(
      "evaluate_policy",
      [](const std::optional<std::string>& priors_json, const std::optional<std::string>& spec_yaml,
         std::optional<std::uint64_t> seed, const std::string& kind) {
        const auto artifact = artifact_or_default(priors_json);
        const auto spec = spec_or_default(spec_yaml, seed);
        rae::PolicyKind k = rae::PolicyKind::Calibrated;
        if (kind == "rules") k = rae::PolicyKind::Rules;
        else if (kind == "flat") k = rae::PolicyKind::Flat;
        else if (kind != "calibrated") throw rae::Error(rae::Errc::InvalidArgument, "kind must be calibrated, rules or flat");
        return alignment_dict(rae::evaluate_policy(artifact.rules, artifact.priors, spec, k));
      },
      py::arg("priors_json") = py::none(), py::arg("spec_yaml") = py::none(), py::arg("seed") = py::none(),
      py::arg("kind") = "calibrated");
}
