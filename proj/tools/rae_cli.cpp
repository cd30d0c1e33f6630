#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rae/io.hpp"
#include "rae/pipeline.hpp"
#include "rae/policy.hpp"
#include "rae/sim.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  bool strict = false;
  std::string output_dir = ".";
  std::string profiles;
};

struct McmcFlags {
  int chains = 4;
  int warmup = 1000;
  int draws = 2000;
  bool skip_bayes = false;
  double hdi_mass = 0.94;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rae::Error(rae::Errc::InvalidArgument, "cannot write " + path.string());
  out << text;
}

rae::AnalysisConfig analysis_config(const Globals& g, const McmcFlags& m) {
  rae::AnalysisConfig cfg;
  cfg.mcmc.chains = m.chains;
  cfg.mcmc.warmup_draws = m.warmup;
  cfg.mcmc.post_warmup_draws = m.draws;
  cfg.mcmc.seed = g.seed;
  cfg.mcmc.parallel_chains = true;
  cfg.mcmc.validate();
  cfg.hdi_mass = m.hdi_mass;
  cfg.skip_bayes = m.skip_bayes;
  return cfg;
}

rae::RatingRecords load_records(const std::string& input, const Globals& g) {
  auto result = rae::ingest(input, g.strict);
  for (const auto& e : result.errors) std::cerr << input << ": " << e.message << '\n';
  if (result.records.empty()) throw rae::Error(rae::Errc::DegenerateData, input + " holds no valid rows");
  return std::move(result.records);
}

rae::AnalysisReport run_one(const std::string& h, const rae::RatingRecords& records,
                            const rae::AnalysisConfig& cfg) {
  if (h == "h1") return rae::run_h1_h3(records, rae::Aim::Educative, cfg);
  if (h == "h2") return rae::run_h1_h3(records, rae::Aim::Explorative, cfg);
  if (h == "h3") return rae::run_h1_h3(records, rae::Aim::Affective, cfg);
  if (h == "h4") return rae::run_h4(records, cfg);
  if (h == "h5") return rae::run_h5(records, cfg);
  return rae::run_h6(records, cfg);
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  }
  return s;
}

rae::PriorsArtifact default_artifact() {
  rae::PriorsArtifact a;
  a.priors = rae::calibrate(rae::published_reports());
  a.rules = rae::default_rule_table();
  a.provenance.source = "published";
  return a;
}

rae::PriorsArtifact load_priors(const std::string& path) {
  if (path.empty()) return default_artifact();
  return rae::priors_from_json(rae::read_file(path));
}

std::pair<int, int> parse_controls(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw rae::Error(rae::Errc::InvalidValue, "--controls expects EDU,EXP");
  try {
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw rae::Error(rae::Errc::InvalidValue, "--controls expects two integers, got '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aim-weight calibration and policy engine for conversational recommenders", "rae"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_flag("--strict", g.strict, "Abort on the first malformed input row");
  app.add_option("--output-dir", g.output_dir, "Directory for written artifacts");
  app.add_option("--profiles", g.profiles, "Domain profile table (CSV)")->check(CLI::ExistingFile);
  app.set_config("--config", "", "Defaults file (TOML/INI)")->envname("RAE_CONFIG");

  McmcFlags mcmc;
  auto add_mcmc = [&](CLI::App* sub) {
    sub->add_option("--chains", mcmc.chains, "MCMC chains");
    sub->add_option("--warmup", mcmc.warmup, "Warmup draws per chain");
    sub->add_option("--draws", mcmc.draws, "Post-warmup draws per chain");
    sub->add_option("--hdi-mass", mcmc.hdi_mass, "HDI mass")->check(CLI::Range(0.5, 0.999));
    sub->add_flag("--skip-bayes", mcmc.skip_bayes, "Rank tests only");
  };

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Run hypothesis families on a rating CSV");
  std::string input;
  std::vector<std::string> hypotheses{"h1", "h2", "h3", "h4", "h5", "h6"};
  bool write_draws = false;
  analyze->add_option("--input", input, "Rating CSV")->required()->check(CLI::ExistingFile);
  analyze->add_option("--hypotheses", hypotheses, "Comma-separated subset of h1..h6")
      ->delimiter(',')
      ->check(CLI::IsMember({"h1", "h2", "h3", "h4", "h5", "h6"}));
  analyze->add_flag("--write-draws", write_draws, "Also write posterior draws as CSV");
  add_mcmc(analyze);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Build a priors artifact");
  std::string cal_input;
  std::vector<std::string> report_files;
  bool published = false;
  std::string timestamp;
  std::string priors_out = "priors.json";
  auto* cal_in = cal->add_option("--input", cal_input, "Rating CSV (runs h1..h5 first)")->check(CLI::ExistingFile);
  auto* cal_rep = cal->add_option("--reports", report_files, "h1..h5 report files");
  auto* cal_pub = cal->add_flag("--published", published, "Use the published summary numbers");
  cal_in->excludes(cal_rep)->excludes(cal_pub);
  cal_rep->excludes(cal_pub);
  cal->add_option("--timestamp", timestamp, "Timestamp recorded in the provenance block");
  cal->add_option("--out", priors_out, "Artifact file name inside the output directory");
  add_mcmc(cal);

  // policy
  auto* pol = app.add_subcommand("policy", "Aim weights for one dialogue state");
  std::string priors_path, state_path, domain, value = "Low", gender, age, controls;
  int experience = 3;
  pol->add_option("--priors", priors_path, "Priors artifact (defaults to the published calibration)");
  pol->add_option("--state", state_path, "State as a JSON file");
  pol->add_option("--domain", domain, "Domain token");
  pol->add_option("--value", value, "Item value frame (Low|High)");
  pol->add_option("--experience", experience, "Recommender experience 1..5");
  pol->add_option("--gender", gender, "Gender token");
  pol->add_option("--age", age, "Age group token");
  pol->add_option("--controls", controls, "Autonomy answers EDU,EXP");

  // simulate
  auto* simc = app.add_subcommand("simulate", "Generate a synthetic population and score a policy");
  std::string spec_path, sim_priors;
  bool compare_flat = false;
  simc->add_option("--spec", spec_path, "Population spec (YAML)")->check(CLI::ExistingFile);
  simc->add_option("--priors", sim_priors, "Priors artifact (defaults to the published calibration)");
  simc->add_flag("--compare-flat", compare_flat, "Also score the flat 0.5 baseline");

  // report
  auto* rep = app.add_subcommand("report", "Render JSON artifacts as text tables");
  std::vector<std::string> artifacts;
  rep->add_option("files", artifacts, "Artifact files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const fs::path out_dir = g.output_dir;
  try {
    const auto profiles =
        g.profiles.empty() ? rae::default_profiles() : rae::parse_profile_table(rae::read_file(g.profiles));

    if (analyze->parsed()) {
      const auto records = load_records(input, g);
      auto cfg = analysis_config(g, mcmc);
      std::map<std::string, rae::FitResult> fits;
      if (write_draws) {
        cfg.on_fit = [&](const std::string& h, const std::string& model, const rae::FitResult& fit) {
          fits.emplace(h + "_" + safe_name(model), fit);
        };
      }
      for (const auto& h : hypotheses) {
        const auto report = run_one(h, records, cfg);
        write_text(out_dir / (h + ".json"), rae::report_to_json(report));
        std::cout << (out_dir / (h + ".json")).string() << '\n';
      }
      for (const auto& [name, fit] : fits) {
        std::ofstream out(out_dir / (name + "_draws.csv"), std::ios::binary);
        rae::write_draws_csv(out, fit);
      }
      return 0;
    }

    if (cal->parsed()) {
      rae::PriorsArtifact a;
      a.rules = rae::default_rule_table();
      a.provenance.seed = g.seed;
      if (!timestamp.empty()) a.provenance.timestamp = timestamp;
      rae::AnalysisReports reports;
      if (!cal_input.empty()) {
        const auto bytes = rae::read_file(cal_input);
        const auto records = load_records(cal_input, g);
        const auto cfg = analysis_config(g, mcmc);
        for (const char* h : {"h1", "h2", "h3", "h4", "h5"}) reports.emplace(h, run_one(h, records, cfg));
        a.provenance.source = "csv";
        a.provenance.input_sha256 = rae::sha256_hex(bytes);
      } else if (!report_files.empty()) {
        std::string all;
        for (const auto& f : report_files) {
          std::string text;
          try {
            text = rae::read_file(f);
            auto r = rae::report_from_json(text);
            const auto h = r.hypothesis;
            reports.insert_or_assign(h, std::move(r));
          } catch (const rae::Error& e) {
            throw rae::Error(rae::Errc::MissingReport, f + ": " + e.what());
          }
          all += text;
        }
        a.provenance.source = "reports";
        a.provenance.input_sha256 = rae::sha256_hex(all);
      } else {
        reports = rae::published_reports();
        std::string all;
        for (const auto& [h, r] : reports) all += rae::report_to_json(r);
        a.provenance.source = "published";
        a.provenance.input_sha256 = rae::sha256_hex(all);
      }
      a.priors = rae::calibrate(reports);
      const auto path = out_dir / priors_out;
      write_text(path, rae::priors_to_json(a));
      std::cout << path.string() << '\n';
      return 0;
    }

    if (pol->parsed()) {
      const auto artifact = load_priors(priors_path);
      rae::StateVector state;
      if (!state_path.empty()) {
        state = rae::state_from_json(rae::read_file(state_path), profiles);
      } else {
        if (domain.empty()) throw rae::Error(rae::Errc::InvalidValue, "--domain or --state is required");
        state.domain_profile = profiles[rae::index(rae::parse_domain(domain))];
        state.item_value = rae::parse_item_value(value);
        state.user_traits.crs_experience = experience;
        if (!gender.empty()) state.user_traits.gender = rae::parse_gender(gender);
        if (!age.empty()) state.user_traits.age_group = rae::parse_age_group(age);
        if (!controls.empty()) {
          const auto [e, x] = parse_controls(controls);
          state.autonomy_pref = {e, x};
        }
        state = rae::validate_state(std::move(state));
      }
      const auto w = artifact.priors.has_calibration()
                         ? rae::decide_calibrated(state, artifact.rules, artifact.priors)
                         : rae::decide(state, artifact.rules, artifact.priors);
      std::cout << rae::weights_to_json(w);
      return 0;
    }

    if (simc->parsed()) {
      auto spec = spec_path.empty() ? rae::default_population() : rae::population_from_yaml(rae::read_file(spec_path));
      spec.seed = g.seed;
      spec.validate();
      const auto artifact = load_priors(sim_priors);
      const auto records = rae::generate_population(spec);
      std::ostringstream csv;
      rae::write_ratings_csv(csv, records);
      write_text(out_dir / "records.csv", csv.str());
      const bool calibrated = artifact.priors.has_calibration();
      const rae::PolicyFn policy = [&](const rae::StateVector& s) {
        return calibrated ? rae::decide_calibrated(s, artifact.rules, artifact.priors)
                          : rae::decide(s, artifact.rules, artifact.priors);
      };
      const auto score = rae::evaluate_policy(policy, spec, profiles);
      std::optional<rae::AlignmentScore> flat;
      if (compare_flat) flat = rae::evaluate_policy(rae::decide_flat, spec, profiles);
      const auto json = rae::alignment_to_json(score, flat);
      write_text(out_dir / "alignment.json", json);
      std::cout << json;
      return 0;
    }

    if (rep->parsed()) {
      for (const auto& f : artifacts) {
        if (artifacts.size() > 1) std::cout << "== " << f << '\n';
        std::cout << rae::render_text(rae::read_file(f));
      }
      return 0;
    }
  } catch (const rae::Error& e) {
    std::cerr << "rae: " << e.what() << '\n';
    return rae::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rae: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
