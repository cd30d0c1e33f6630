#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rae/io.hpp"

namespace rae {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& msg) { throw Error(Errc::SchemaMismatch, msg); }

double num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) schema_error("expected a number");
  return j.get<double>();
}

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if constexpr (std::is_same_v<T, double>) {
    return num(*it);
  } else {
    return it->get<T>();
  }
}

const json& at(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) schema_error(std::string("missing field '") + key + "'");
  return *it;
}

std::string str(const json& j, const char* key) {
  const auto& v = at(j, key);
  if (!v.is_string()) schema_error(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

void only_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) schema_error(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      schema_error(where + ": unknown field '" + k + "'");
    }
  }
}

// --- reports ---

json test_to_json(const TestResult& t) {
  json j;
  j["statistic"] = t.statistic;
  put(j, "z", t.z);
  j["p_value"] = t.p_value;
  j["n_effective"] = t.n_effective;
  j["n_total"] = t.n_total;
  put(j, "effect_r", t.effect_r);
  put(j, "rank_biserial", t.rank_biserial);
  put(j, "cles", t.cles);
  put(j, "w_plus", t.w_plus);
  put(j, "w_minus", t.w_minus);
  put(j, "effect_r_total", t.effect_r_total);
  put(j, "effect_r_nontied", t.effect_r_nontied);
  if (t.denominator) j["effect_denominator"] = std::string(to_string(*t.denominator));
  put(j, "p_exact", t.p_exact);
  put(j, "p_normal", t.p_normal);
  if (t.exact) j["exact"] = true;
  put(j, "p_unadjusted", t.p_unadjusted);
  if (t.adjust_factor != 1) j["adjust_factor"] = t.adjust_factor;
  put(j, "rho", t.rho);
  return j;
}

TestResult test_from_json(const json& j) {
  TestResult t;
  t.statistic = num(at(j, "statistic"));
  t.z = opt<double>(j, "z");
  t.p_value = num(at(j, "p_value"));
  t.n_effective = at(j, "n_effective").get<std::size_t>();
  t.n_total = at(j, "n_total").get<std::size_t>();
  t.effect_r = opt<double>(j, "effect_r");
  t.rank_biserial = opt<double>(j, "rank_biserial");
  t.cles = opt<double>(j, "cles");
  t.w_plus = opt<double>(j, "w_plus");
  t.w_minus = opt<double>(j, "w_minus");
  t.effect_r_total = opt<double>(j, "effect_r_total");
  t.effect_r_nontied = opt<double>(j, "effect_r_nontied");
  if (auto d = opt<std::string>(j, "effect_denominator")) {
    t.denominator = *d == "n" ? EffectDenominator::TotalPairs : EffectDenominator::NonTied;
  }
  t.p_exact = opt<double>(j, "p_exact");
  t.p_normal = opt<double>(j, "p_normal");
  t.exact = opt<bool>(j, "exact").value_or(false);
  t.p_unadjusted = opt<double>(j, "p_unadjusted");
  t.adjust_factor = opt<std::size_t>(j, "adjust_factor").value_or(1);
  t.rho = opt<double>(j, "rho");
  return t;
}

json summary_to_json(const ParameterSummary& s) {
  return json{{"mean", s.mean}, {"sd", s.sd}, {"hdi_low", s.hdi_low}, {"hdi_high", s.hdi_high},
              {"rhat", s.rhat}, {"ess_bulk", s.ess_bulk}};
}

ParameterSummary summary_from_json(const json& j) {
  ParameterSummary s;
  s.mean = num(at(j, "mean"));
  s.sd = num(at(j, "sd"));
  s.hdi_low = num(at(j, "hdi_low"));
  s.hdi_high = num(at(j, "hdi_high"));
  s.rhat = num(at(j, "rhat"));
  s.ess_bulk = num(at(j, "ess_bulk"));
  return s;
}

json estimate_to_json(const Estimate& e) {
  return json{{"mean", e.mean}, {"hdi_low", e.hdi_low}, {"hdi_high", e.hdi_high}};
}

Estimate estimate_from_json(const json& j) {
  return {num(at(j, "mean")), num(at(j, "hdi_low")), num(at(j, "hdi_high"))};
}

std::string fmt(double v, int digits = 3) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_p(double p) {
  if (p < 0.001) return "<.001";
  return fmt(p, 3);
}

/// Aligned columns: first column left, the rest right.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : rows_{std::move(header)} {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  std::string str() const {
    std::vector<std::size_t> w;
    for (const auto& r : rows_) {
      if (w.size() < r.size()) w.resize(r.size(), 0);
      for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
    }
    std::ostringstream out;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const auto& r = rows_[k];
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out << "  ";
        const std::string pad(w[i] - r[i].size(), ' ');
        out << (i == 0 ? r[i] + pad : pad + r[i]);
      }
      out << '\n';
      if (k == 0) {
        std::size_t total = 0;
        for (std::size_t i = 0; i < w.size(); ++i) total += w[i] + (i ? 2 : 0);
        out << std::string(total, '-') << '\n';
      }
    }
    return out.str();
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string opt_str(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return "";
  if (it->is_string()) return it->get<std::string>();
  if (it->is_boolean()) return it->get<bool>() ? "yes" : "no";
  if (it->is_number()) return fmt(it->get<double>());
  return it->dump();
}

std::string render_report(const json& j) {
  std::ostringstream out;
  out << "report " << j.value("hypothesis", "?");
  if (j.contains("aim") && j["aim"].is_string()) out << " (" << j["aim"].get<std::string>() << ")";
  out << "  effective n = " << j.value("effective_n", 0) << "\n\n";

  if (!j.value("tests", json::array()).empty()) {
    Table t({"family", "domain", "aim", "statistic", "z", "p", "p_adj", "n", "r", "rank_biserial", "cles", "note"});
    for (const auto& c : j["tests"]) {
      const json test = c.value("test", json::object());
      t.add({c.value("family", ""), opt_str(c, "domain"), opt_str(c, "aim"),
             test.empty() ? "" : fmt(num(test["statistic"])), opt_str(test, "z"),
             test.empty() ? "" : fmt_p(num(test["p_value"])),
             c.contains("p_adjusted") ? fmt_p(num(c["p_adjusted"])) : "",
             test.empty() ? "" : std::to_string(test.value("n_effective", 0)), opt_str(test, "effect_r"),
             opt_str(test, "rank_biserial"), opt_str(test, "cles"),
             c.contains("error") ? opt_str(c, "error") : (c.value("rejected", false) ? "*" : "")});
    }
    out << "tests\n" << t.str() << '\n';
  }
  if (!j.value("mean_ranks", json::array()).empty()) {
    Table t({"aim", "domain", "mean_rank", "n"});
    for (const auto& r : j["mean_ranks"]) {
      t.add({opt_str(r, "aim"), opt_str(r, "domain"), fmt(num(r["mean_rank"]), 1), std::to_string(r.value("n", 0))});
    }
    out << "mean ranks\n" << t.str() << '\n';
  }
  if (!j.value("pairwise", json::array()).empty()) {
    Table t({"aim", "pair", "U", "z", "p_bonf", "r"});
    for (const auto& r : j["pairwise"]) {
      if (!r.value("notable", false)) continue;
      const auto& test = r["test"];
      t.add({opt_str(r, "aim"), opt_str(r, "first") + " vs " + opt_str(r, "second"), fmt(num(test["statistic"]), 1),
             opt_str(test, "z"), fmt_p(num(test["p_value"])), opt_str(test, "effect_r")});
    }
    out << "pairwise (notable only)\n" << t.str() << '\n';
  }
  if (!j.value("bayes", json::array()).empty()) {
    Table t({"model", "parameter", "mean", "sd", "hdi_low", "hdi_high", "rhat", "ess_bulk", "credible", "OR"});
    for (const auto& b : j["bayes"]) {
      const auto& s = b["summary"];
      t.add({opt_str(b, "model"), opt_str(b, "parameter"), fmt(num(s["mean"])), fmt(num(s["sd"])),
             fmt(num(s["hdi_low"])), fmt(num(s["hdi_high"])), fmt(num(s["rhat"])), fmt(num(s["ess_bulk"]), 0),
             b.value("credible", false) ? "yes" : "no", opt_str(b, "odds_ratio")});
    }
    out << "posterior summaries\n" << t.str() << '\n';
  }
  if (!j.value("fits", json::array()).empty()) {
    Table t({"model", "n_obs", "divergences", "max_rhat", "min_ess_bulk", "error"});
    for (const auto& f : j["fits"]) {
      t.add({opt_str(f, "model"), std::to_string(f.value("n_observations", 0)),
             std::to_string(f.value("divergences", 0)), fmt(num(f["max_rhat"])), fmt(num(f["min_ess_bulk"]), 0),
             opt_str(f, "error")});
    }
    out << "fits\n" << t.str() << '\n';
  }
  if (!j.value("frequencies", json::array()).empty()) {
    Table t({"aim", "frame", "1", "2", "3", "4", "5", "n"});
    for (const auto& f : j["frequencies"]) {
      std::vector<std::string> row{opt_str(f, "aim"), opt_str(f, "frame")};
      for (const auto& p : f["percent"]) row.push_back(fmt(num(p), 1));
      row.push_back(std::to_string(f.value("n", 0)));
      t.add(std::move(row));
    }
    out << "rating distribution (%)\n" << t.str() << '\n';
  }
  if (!j.value("ppc", json::array()).empty()) {
    Table t({"model", "category", "observed", "mean", "low", "high"});
    for (const auto& p : j["ppc"]) {
      const auto& obs = p["observed"];
      const auto& mean = p["mean"];
      for (std::size_t k = 0; k < obs.size(); ++k) {
        const bool band = k < mean.size();
        t.add({opt_str(p, "model"), std::to_string(k + 1), fmt(num(obs[k])),
               band ? fmt(num(mean[k])) : "", band ? fmt(num(p["low"][k])) : "",
               band ? fmt(num(p["high"][k])) : ""});
      }
    }
    out << "posterior predictive check\n" << t.str() << '\n';
  }
  return out.str();
}

std::string render_weights(const json& j) {
  AimWeights w;
  w.w_edu = num(j["w_edu"]);
  w.w_exp = num(j["w_exp"]);
  w.w_aff = num(j["w_aff"]);
  const auto tern = ternary_coordinates(w);
  Table t({"aim", "weight", "ternary"});
  t.add({"educative", fmt(w.w_edu), fmt(tern[0])});
  t.add({"explorative", fmt(w.w_exp), fmt(tern[1])});
  t.add({"affective", fmt(w.w_aff), fmt(tern[2])});
  std::ostringstream out;
  out << t.str() << "initiative: " << opt_str(j, "initiative")
      << "  affective_system_init: " << opt_str(j, "affective_system_init") << '\n';
  return out.str();
}

std::string render_alignment(const json& j) {
  Table t({"policy", "educative_gap", "explorative_gap", "affective_gap", "overall_gap", "initiative_mismatch", "n"});
  for (const auto& [name, s] : j.items()) {
    if (!s.is_object()) continue;
    t.add({name, fmt(num(s["mean_gap"][0]), 4), fmt(num(s["mean_gap"][1]), 4), fmt(num(s["mean_gap"][2]), 4),
           fmt(num(s["overall_gap"]), 4), fmt(num(s["initiative_mismatch"]), 4), std::to_string(s.value("n", 0))});
  }
  return t.str();
}

std::string render_priors(const json& j) {
  std::ostringstream out;
  out << "priors " << j.value("schema_version", "") << "  kappa = " << opt_str(j, "kappa") << "\n\n";
  {
    Table t({"emphasis", "weight"});
    for (const auto& [k, v] : j["emphasis_map"].items()) t.add({k, fmt(num(v))});
    out << t.str() << '\n';
  }
  {
    Table t({"domain", "aim", "mean", "hdi_low", "hdi_high"});
    for (const auto& r : j["intercepts"]) {
      t.add({opt_str(r, "domain"), opt_str(r, "aim"), fmt(num(r["mean"])), fmt(num(r["hdi_low"])),
             fmt(num(r["hdi_high"]))});
    }
    out << "intercepts\n" << t.str() << '\n';
  }
  {
    Table t({"coefficient", "aim", "mean", "hdi_low", "hdi_high", "admitted"});
    for (const auto& r : j["trait_coefficients"]) {
      t.add({opt_str(r, "name"), opt_str(r, "aim"), fmt(num(r["mean"])), fmt(num(r["hdi_low"])),
             fmt(num(r["hdi_high"])), opt_str(r, "admitted")});
    }
    out << "trait coefficients\n" << t.str() << '\n';
  }
  {
    Table t({"kind", "domain", "aim"});
    for (const auto& [kind, cells] : j["overrides"].items()) {
      for (const auto& c : cells) t.add({kind, opt_str(c, "domain"), opt_str(c, "aim")});
    }
    out << "conditional overrides\n" << t.str() << '\n';
  }
  if (!j["calibration"].empty()) {
    Table t({"aim", "cutpoints", "experience", "value_shift", "exp_admitted", "value_admitted"});
    for (const auto& c : j["calibration"]) {
      std::string cuts;
      for (const auto& x : c["cutpoints"]) cuts += (cuts.empty() ? "" : " ") + fmt(num(x), 2);
      t.add({opt_str(c, "aim"), cuts, fmt(num(c["experience"])), fmt(num(c["value_shift"])),
             opt_str(c, "experience_admitted"), opt_str(c, "value_admitted")});
    }
    out << "calibration\n" << t.str() << '\n';
  }
  const auto& p = j["provenance"];
  out << "provenance: source=" << opt_str(p, "source") << " sha256=" << opt_str(p, "input_sha256")
      << " seed=" << p.value("seed", 0ULL);
  if (p.contains("timestamp") && p["timestamp"].is_string()) out << " timestamp=" << p["timestamp"].get<std::string>();
  out << '\n';
  return out.str();
}

}  // namespace

std::string report_to_json(const AnalysisReport& r) {
  json j;
  j["hypothesis"] = r.hypothesis;
  j["aim"] = r.aim ? json(std::string(to_string(*r.aim))) : json(nullptr);
  j["seed"] = r.seed;
  j["hdi_mass"] = r.hdi_mass;
  j["effective_n"] = r.effective_n;
  j["tests"] = json::array();
  for (const auto& c : r.tests) {
    json cj;
    cj["family"] = c.family;
    if (c.domain) cj["domain"] = std::string(to_string(*c.domain));
    if (c.aim) cj["aim"] = std::string(to_string(*c.aim));
    if (c.test) cj["test"] = test_to_json(*c.test);
    put(cj, "p_adjusted", c.p_adjusted);
    cj["rejected"] = c.rejected;
    put(cj, "error", c.error);
    j["tests"].push_back(std::move(cj));
  }
  j["mean_ranks"] = json::array();
  for (const auto& m : r.mean_ranks) {
    j["mean_ranks"].push_back({{"aim", std::string(to_string(m.aim))},
                               {"domain", std::string(to_string(m.domain))},
                               {"mean_rank", m.mean_rank},
                               {"n", m.n}});
  }
  j["pairwise"] = json::array();
  for (const auto& p : r.pairwise) {
    j["pairwise"].push_back({{"aim", std::string(to_string(p.aim))},
                             {"first", std::string(to_string(p.first))},
                             {"second", std::string(to_string(p.second))},
                             {"test", test_to_json(p.test)},
                             {"notable", p.notable}});
  }
  j["bayes"] = json::array();
  for (const auto& b : r.bayes) {
    json bj{{"model", b.model}, {"parameter", b.parameter}, {"summary", summary_to_json(b.summary)},
            {"credible", b.credible}};
    put(bj, "odds_ratio", b.odds_ratio);
    j["bayes"].push_back(std::move(bj));
  }
  j["fits"] = json::array();
  for (const auto& f : r.fits) {
    json fj{{"model", f.model}, {"n_observations", f.n_observations}, {"divergences", f.divergences},
            {"max_rhat", f.max_rhat}, {"min_ess_bulk", f.min_ess_bulk}};
    put(fj, "error", f.error);
    j["fits"].push_back(std::move(fj));
  }
  j["frequencies"] = json::array();
  for (const auto& f : r.frequencies) {
    j["frequencies"].push_back({{"aim", std::string(to_string(f.aim))},
                                {"frame", std::string(to_string(f.frame))},
                                {"percent", f.percent},
                                {"n", f.n}});
  }
  j["ppc"] = json::array();
  for (const auto& p : r.ppc) {
    j["ppc"].push_back({{"model", p.model},
                        {"observed", p.check.observed},
                        {"mean", p.check.mean},
                        {"low", p.check.low},
                        {"high", p.check.high},
                        {"draws_used", p.check.draws_used},
                        {"mass", p.check.mass}});
  }
  return j.dump(2) + "\n";
}

AnalysisReport report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    schema_error(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    AnalysisReport r;
    r.hypothesis = str(j, "hypothesis");
    if (auto a = opt<std::string>(j, "aim")) r.aim = parse_aim(*a);
    r.seed = at(j, "seed").get<std::uint64_t>();
    r.hdi_mass = num(at(j, "hdi_mass"));
    r.effective_n = at(j, "effective_n").get<std::size_t>();
    for (const auto& c : j.value("tests", json::array())) {
      CellResult cell;
      cell.family = str(c, "family");
      if (auto d = opt<std::string>(c, "domain")) cell.domain = parse_domain(*d);
      if (auto a = opt<std::string>(c, "aim")) cell.aim = parse_aim(*a);
      if (c.contains("test")) cell.test = test_from_json(c["test"]);
      cell.p_adjusted = opt<double>(c, "p_adjusted");
      cell.rejected = opt<bool>(c, "rejected").value_or(false);
      cell.error = opt<std::string>(c, "error");
      r.tests.push_back(std::move(cell));
    }
    for (const auto& m : j.value("mean_ranks", json::array())) {
      r.mean_ranks.push_back({parse_aim(str(m, "aim")), parse_domain(str(m, "domain")), num(at(m, "mean_rank")),
                              at(m, "n").get<std::size_t>()});
    }
    for (const auto& p : j.value("pairwise", json::array())) {
      r.pairwise.push_back({parse_aim(str(p, "aim")), parse_domain(str(p, "first")), parse_domain(str(p, "second")),
                            test_from_json(at(p, "test")), at(p, "notable").get<bool>()});
    }
    for (const auto& b : j.value("bayes", json::array())) {
      BayesRow row;
      row.model = str(b, "model");
      row.parameter = str(b, "parameter");
      row.summary = summary_from_json(at(b, "summary"));
      row.credible = at(b, "credible").get<bool>();
      row.odds_ratio = opt<double>(b, "odds_ratio");
      r.bayes.push_back(std::move(row));
    }
    for (const auto& f : j.value("fits", json::array())) {
      FitInfo info;
      info.model = str(f, "model");
      info.n_observations = at(f, "n_observations").get<std::size_t>();
      info.divergences = at(f, "divergences").get<int>();
      info.max_rhat = num(at(f, "max_rhat"));
      info.min_ess_bulk = num(at(f, "min_ess_bulk"));
      info.error = opt<std::string>(f, "error");
      r.fits.push_back(std::move(info));
    }
    for (const auto& f : j.value("frequencies", json::array())) {
      FrequencyRow row;
      row.aim = parse_aim(str(f, "aim"));
      row.frame = parse_item_value(str(f, "frame"));
      const auto& pct = at(f, "percent");
      if (!pct.is_array() || pct.size() != kCategories) schema_error("percent needs 5 entries");
      for (std::size_t k = 0; k < kCategories; ++k) row.percent[k] = num(pct[k]);
      row.n = at(f, "n").get<std::size_t>();
      r.frequencies.push_back(row);
    }
    for (const auto& p : j.value("ppc", json::array())) {
      PpcRow row;
      row.model = str(p, "model");
      auto vec = [&](const char* k) {
        std::vector<double> v;
        for (const auto& x : at(p, k)) v.push_back(num(x));
        return v;
      };
      row.check.observed = vec("observed");
      row.check.mean = vec("mean");
      row.check.low = vec("low");
      row.check.high = vec("high");
      row.check.draws_used = at(p, "draws_used").get<std::size_t>();
      row.check.mass = num(at(p, "mass"));
      r.ppc.push_back(std::move(row));
    }
    return r;
  } catch (const json::exception& e) {
    schema_error(std::string("malformed report: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaMismatch) throw;
    schema_error(std::string("malformed report: ") + e.what());
  }
}

std::string priors_to_json(const PriorsArtifact& a) {
  const PolicyPriors& p = a.priors;
  json j;
  j["schema_version"] = a.schema_version;
  j["emphasis_map"] = {{"Primary", p.emphasis.primary},
                       {"Secondary", p.emphasis.secondary},
                       {"Deemphasized", p.emphasis.deemphasized}};
  j["kappa"] = p.kappa;
  j["intercepts"] = json::array();
  for (Domain d : all_domains()) {
    for (Aim aim : all_aims()) {
      if (const auto& e = p.intercepts[index(d)][index(aim)]) {
        json row = estimate_to_json(*e);
        row["domain"] = std::string(to_string(d));
        row["aim"] = std::string(to_string(aim));
        j["intercepts"].push_back(std::move(row));
      }
    }
  }
  j["trait_coefficients"] = json::array();
  const std::array<std::pair<const char*, const std::array<std::optional<TraitCoefficient>, kAimCount>*>, 3>
      coefs{{{"experience", &p.beta_exp}, {"gender", &p.beta_gender}, {"age", &p.beta_age}}};
  for (const auto& [name, arr] : coefs) {
    for (Aim aim : all_aims()) {
      if (const auto& c = (*arr)[index(aim)]) {
        json row = estimate_to_json(c->estimate);
        row["name"] = name;
        row["aim"] = std::string(to_string(aim));
        row["admitted"] = c->admitted;
        j["trait_coefficients"].push_back(std::move(row));
      }
    }
  }
  auto cells = [](const std::vector<CellFlag>& v) {
    json out = json::array();
    for (const auto& c : v) {
      out.push_back({{"domain", std::string(to_string(c.domain))}, {"aim", std::string(to_string(c.aim))}});
    }
    return out;
  };
  j["overrides"] = {{"gender", cells(p.gender_overrides)}, {"age", cells(p.age_overrides)}};
  j["calibration"] = json::array();
  for (Aim aim : all_aims()) {
    if (const auto& c = p.calibration[index(aim)]) {
      j["calibration"].push_back({{"aim", std::string(to_string(aim))},
                                  {"cutpoints", c->cutpoints},
                                  {"experience", c->experience},
                                  {"value_shift", c->value_shift},
                                  {"experience_admitted", c->experience_admitted},
                                  {"value_admitted", c->value_admitted}});
    }
  }
  j["rules"] = json::array();
  for (const auto& row : a.rules.rows) {
    j["rules"].push_back({{"cluster", std::string(to_string(row.cluster))},
                          {"educative", std::string(to_string(row.emphasis[0]))},
                          {"explorative", std::string(to_string(row.emphasis[1]))},
                          {"affective", std::string(to_string(row.emphasis[2]))},
                          {"mode", std::string(to_string(row.mode))},
                          {"triggers", row.triggers}});
  }
  j["provenance"] = {{"source", a.provenance.source},
                     {"input_sha256", a.provenance.input_sha256},
                     {"seed", a.provenance.seed},
                     {"timestamp", a.provenance.timestamp ? json(*a.provenance.timestamp) : json(nullptr)}};
  return j.dump(2) + "\n";
}

PriorsArtifact priors_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    schema_error(std::string("priors artifact is not valid JSON: ") + e.what());
  }
  try {
    only_keys(j, {"schema_version", "emphasis_map", "kappa", "intercepts", "trait_coefficients", "overrides",
                  "calibration", "rules", "provenance"},
              "priors");
    PriorsArtifact a;
    a.schema_version = str(j, "schema_version");
    if (a.schema_version != kPriorsSchema) {
      schema_error("schema_version '" + a.schema_version + "' is not " + std::string(kPriorsSchema));
    }
    PolicyPriors& p = a.priors;
    const auto& em = at(j, "emphasis_map");
    only_keys(em, {"Primary", "Secondary", "Deemphasized"}, "emphasis_map");
    p.emphasis = {num(at(em, "Primary")), num(at(em, "Secondary")), num(at(em, "Deemphasized"))};
    p.kappa = num(at(j, "kappa"));
    for (const auto& row : at(j, "intercepts")) {
      only_keys(row, {"domain", "aim", "mean", "hdi_low", "hdi_high"}, "intercepts[]");
      p.intercepts[index(parse_domain(str(row, "domain")))][index(parse_aim(str(row, "aim")))] =
          estimate_from_json(row);
    }
    for (const auto& row : at(j, "trait_coefficients")) {
      only_keys(row, {"name", "aim", "mean", "hdi_low", "hdi_high", "admitted"}, "trait_coefficients[]");
      const auto name = str(row, "name");
      TraitCoefficient c{estimate_from_json(row), at(row, "admitted").get<bool>()};
      const auto i = index(parse_aim(str(row, "aim")));
      if (name == "experience") p.beta_exp[i] = c;
      else if (name == "gender") p.beta_gender[i] = c;
      else if (name == "age") p.beta_age[i] = c;
      else schema_error("unknown trait coefficient '" + name + "'");
    }
    const auto& ov = at(j, "overrides");
    only_keys(ov, {"gender", "age"}, "overrides");
    auto read_cells = [&](const char* key, std::vector<CellFlag>& dst) {
      for (const auto& c : at(ov, key)) {
        only_keys(c, {"domain", "aim"}, std::string("overrides.") + key + "[]");
        dst.push_back({parse_domain(str(c, "domain")), parse_aim(str(c, "aim"))});
      }
    };
    read_cells("gender", p.gender_overrides);
    read_cells("age", p.age_overrides);
    for (const auto& c : at(j, "calibration")) {
      only_keys(c, {"aim", "cutpoints", "experience", "value_shift", "experience_admitted", "value_admitted"},
                "calibration[]");
      AimCalibration cal;
      for (const auto& x : at(c, "cutpoints")) cal.cutpoints.push_back(num(x));
      cal.experience = num(at(c, "experience"));
      cal.value_shift = num(at(c, "value_shift"));
      cal.experience_admitted = at(c, "experience_admitted").get<bool>();
      cal.value_admitted = at(c, "value_admitted").get<bool>();
      p.calibration[index(parse_aim(str(c, "aim")))] = std::move(cal);
    }
    for (const auto& r : at(j, "rules")) {
      only_keys(r, {"cluster", "educative", "explorative", "affective", "mode", "triggers"}, "rules[]");
      RuleRow row;
      row.cluster = parse_cluster(str(r, "cluster"));
      row.emphasis = {parse_emphasis(str(r, "educative")), parse_emphasis(str(r, "explorative")),
                      parse_emphasis(str(r, "affective"))};
      row.mode = parse_dialogue_mode(str(r, "mode"));
      row.triggers = str(r, "triggers");
      a.rules.rows.push_back(std::move(row));
    }
    const auto& pv = at(j, "provenance");
    only_keys(pv, {"source", "input_sha256", "seed", "timestamp"}, "provenance");
    a.provenance.source = str(pv, "source");
    a.provenance.input_sha256 = str(pv, "input_sha256");
    a.provenance.seed = at(pv, "seed").get<std::uint64_t>();
    a.provenance.timestamp = opt<std::string>(pv, "timestamp");
    p.validate();
    a.rules.validate();
    return a;
  } catch (const json::exception& e) {
    schema_error(std::string("malformed priors artifact: ") + e.what());
  }
}

std::string weights_to_json(const AimWeights& w) {
  json j{{"w_edu", w.w_edu},
         {"w_exp", w.w_exp},
         {"w_aff", w.w_aff},
         {"initiative", std::string(to_string(w.initiative))},
         {"affective_system_init", w.affective_system_init}};
  return j.dump() + "\n";
}

std::string alignment_to_json(const AlignmentScore& calibrated, const std::optional<AlignmentScore>& flat) {
  auto one = [](const AlignmentScore& s) {
    return json{{"mean_gap", s.mean_gap},
                {"overall_gap", s.overall_gap},
                {"initiative_mismatch", s.initiative_mismatch},
                {"n", s.n}};
  };
  json j{{"calibrated", one(calibrated)}};
  if (flat) j["flat"] = one(*flat);
  return j.dump(2) + "\n";
}

StateVector state_from_json(std::string_view text, const std::array<DomainProfile, kDomainCount>& profiles) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidValue, std::string("state is not valid JSON: ") + e.what());
  }
  try {
    only_keys(j, {"domain", "item_value", "crs_experience", "gender", "age_group", "controls", "history"}, "state");
  } catch (const Error& e) {
    throw Error(Errc::InvalidValue, e.what());
  }
  StateVector s;
  if (!j.contains("domain") || !j["domain"].is_string()) throw Error(Errc::InvalidValue, "state needs a domain");
  s.domain_profile = profiles[index(parse_domain(j["domain"].get<std::string>()))];
  try {
    if (j.contains("item_value")) s.item_value = parse_item_value(j["item_value"].get<std::string>());
    if (j.contains("crs_experience")) s.user_traits.crs_experience = j["crs_experience"].get<int>();
    if (j.contains("gender")) s.user_traits.gender = parse_gender(j["gender"].get<std::string>());
    if (j.contains("age_group")) s.user_traits.age_group = parse_age_group(j["age_group"].get<std::string>());
    if (j.contains("controls")) {
      const auto c = j["controls"].get<std::vector<int>>();
      if (c.size() != 2) throw Error(Errc::InvalidValue, "controls needs [educative, explorative]");
      s.autonomy_pref = {c[0], c[1]};
    }
    if (j.contains("history")) {
      for (char ch : j["history"].get<std::string>()) s.history.push_back(static_cast<std::uint8_t>(ch));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidValue, std::string("state field has the wrong type: ") + e.what());
  }
  return validate_state(std::move(s));
}

std::string render_text(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    schema_error(std::string("not a JSON artifact: ") + e.what());
  }
  try {
    if (j.contains("schema_version")) return render_priors(j);
    if (j.contains("hypothesis")) return render_report(j);
    if (j.contains("w_edu")) return render_weights(j);
    if (j.contains("calibrated")) return render_alignment(j);
  } catch (const json::exception& e) {
    schema_error(std::string("malformed artifact: ") + e.what());
  }
  schema_error("unrecognised artifact");
}

}  // namespace rae
