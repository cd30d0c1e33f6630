#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "rae/design.hpp"
#include "rae/io.hpp"
#include "text.hpp"

namespace rae {

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

int parse_scale(std::string_view field, std::string_view column, Errc code, std::size_t line) {
  if (field.empty()) throw Error(code, std::string(column) + " is missing", line);
  const auto v = parse_int(field);
  if (!v || !valid_rating(*v)) {
    throw Error(code, std::string(column) + " '" + std::string(field) + "' is not an integer in 1..5", line);
  }
  return *v;
}

template <typename Fn>
auto with_line(std::size_t line, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.line()) throw;
    // Strip the code prefix the first Error already composed.
    std::string msg = e.what();
    if (const auto colon = msg.find(": "); colon != std::string::npos) msg = msg.substr(colon + 2);
    throw Error(e.code(), msg, line);
  }
}

RatingRecord parse_row(const std::vector<std::string>& f, std::size_t line) {
  if (f.size() != 10) {
    throw Error(Errc::InvalidValue, "expected 10 fields, found " + std::to_string(f.size()), line);
  }
  RatingRecord r;
  r.participant_id = std::string(detail::trim(f[0]));
  if (r.participant_id.empty()) throw Error(Errc::InvalidValue, "participant_id is missing", line);
  with_line(line, [&] {
    r.domain = parse_domain(f[1]);
    r.aim = parse_aim(f[2]);
    r.value_frame = parse_item_value(f[3]);
  });
  r.rating = parse_scale(f[4], "rating", Errc::InvalidRating, line);
  with_line(line, [&] {
    r.traits.age_group = parse_age_group(f[5]);
    r.traits.gender = parse_gender(f[6]);
  });
  r.traits.crs_experience = parse_scale(f[7], "crs_experience", Errc::InvalidRating, line);
  const bool has_edu = !f[8].empty();
  const bool has_exp = !f[9].empty();
  if (has_edu != has_exp) {
    throw Error(Errc::InvalidValue, "autonomy_edu and autonomy_exp must be both present or both empty", line);
  }
  if (has_edu) {
    r.autonomy = AutonomyPref{parse_scale(f[8], "autonomy_edu", Errc::InvalidRating, line),
                              parse_scale(f[9], "autonomy_exp", Errc::InvalidRating, line)};
  }
  return r;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

// --- YAML population spec ---

[[noreturn]] void spec_error(const std::string& msg) { throw Error(Errc::InvalidSpec, msg); }

void check_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!node.IsMap()) spec_error(where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      spec_error(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& where) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    spec_error(where + " has the wrong type");
  }
}

std::vector<double> number_list(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence()) spec_error(where + " must be a list");
  std::vector<double> out;
  for (const auto& x : n) out.push_back(scalar<double>(x, where));
  return out;
}

template <std::size_t N, typename Parse>
std::array<double, N> distribution(const YAML::Node& n, const std::string& where, Parse parse) {
  std::array<double, N> out{};
  if (n.IsSequence()) {
    const auto v = number_list(n, where);
    if (v.size() != N) spec_error(where + " needs " + std::to_string(N) + " entries");
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }
  if (!n.IsMap()) spec_error(where + " must be a list or mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    std::size_t i = 0;
    try {
      i = parse(key);
    } catch (const Error&) {
      spec_error(where + ": unknown category '" + key + "'");
    }
    out[i] = scalar<double>(kv.second, where + "." + key);
  }
  return out;
}

OrdinalModel model_from_yaml(const YAML::Node& n, OrdinalModel base, const std::string& where,
                             bool with_intercepts) {
  if (with_intercepts) {
    check_keys(n, {"cutpoints", "beta", "intercepts", "sigma_alpha", "value_shift"}, where);
  } else {
    check_keys(n, {"cutpoints", "beta"}, where);
  }
  if (n["cutpoints"]) base.cutpoints = number_list(n["cutpoints"], where + ".cutpoints");
  if (n["beta"]) {
    if (!n["beta"].IsMap()) spec_error(where + ".beta must be a mapping of feature: coefficient");
    base.beta_names.clear();
    base.beta.clear();
    for (const auto& kv : n["beta"]) {
      const auto name = kv.first.as<std::string>();
      if (!is_known_feature(name)) spec_error(where + ".beta: unknown feature '" + name + "'");
      base.beta_names.push_back(name);
      base.beta.push_back(scalar<double>(kv.second, where + ".beta." + name));
    }
  }
  if (with_intercepts && n["intercepts"]) {
    const auto& iv = n["intercepts"];
    if (iv.IsSequence()) {
      base.alpha = number_list(iv, where + ".intercepts");
    } else if (iv.IsMap()) {
      base.alpha.assign(kDomainCount, 0.0);
      for (const auto& kv : iv) {
        const auto key = kv.first.as<std::string>();
        Domain d;
        try {
          d = parse_domain(key);
        } catch (const Error&) {
          spec_error(where + ".intercepts: unknown domain '" + key + "'");
        }
        base.alpha[index(d)] = scalar<double>(kv.second, where + ".intercepts." + key);
      }
    } else {
      spec_error(where + ".intercepts must be a list or mapping");
    }
  }
  if (with_intercepts && n["sigma_alpha"]) base.sigma_alpha = scalar<double>(n["sigma_alpha"], where + ".sigma_alpha");
  return base;
}

}  // namespace

IngestResult parse_ratings_csv(std::string_view text, bool strict) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw Error(Errc::SchemaMismatch, "empty file; header required");
  const auto header = detail::trim(lines[0]);
  if (header != kCsvHeader) {
    throw Error(Errc::SchemaMismatch, "header must be exactly '" + std::string(kCsvHeader) + "'", 1);
  }
  IngestResult out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    if (detail::trim(lines[i]).empty()) continue;
    try {
      out.records.push_back(parse_row(detail::split_csv_line(lines[i]), line));
    } catch (const Error& e) {
      if (strict) throw;
      out.errors.push_back({line, e.code(), e.what()});
    }
  }
  return out;
}

IngestResult ingest(const std::filesystem::path& path, bool strict) {
  return parse_ratings_csv(read_file(path), strict);
}

void write_ratings_csv(std::ostream& out, const RatingRecords& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << csv_field(r.participant_id) << ',' << to_string(r.domain) << ',' << to_string(r.aim) << ','
        << to_string(r.value_frame) << ',' << r.rating << ',' << to_string(r.traits.age_group) << ','
        << to_string(r.traits.gender) << ',' << r.traits.crs_experience << ',';
    if (r.autonomy) out << r.autonomy->educative_control << ',' << r.autonomy->explorative_control;
    else out << ',';
    out << '\n';
  }
}

void write_draws_csv(std::ostream& out, const FitResult& fit) {
  out << "parameter,chain,iteration,value\n";
  char buf[64];
  for (std::size_t p = 0; p < fit.names.size(); ++p) {
    for (std::size_t c = 0; c < fit.draws[p].size(); ++c) {
      for (std::size_t i = 0; i < fit.draws[p][c].size(); ++i) {
        const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, fit.draws[p][c][i]);
        out << fit.names[p] << ',' << c << ',' << i << ',' << std::string_view(buf, end - buf) << '\n';
      }
    }
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::InvalidArgument, "SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

bool verify_provenance(const PriorsArtifact& artifact, std::string_view input) {
  return artifact.provenance.input_sha256 == sha256_hex(input);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidArgument, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::InvalidRating:
    case Errc::UnknownDomain:
    case Errc::InvalidValue:
    case Errc::MissingCluster:
    case Errc::MissingReport:
    case Errc::SchemaMismatch:
    case Errc::InvalidSpec:
    case Errc::InvalidArgument:
    // runner preconditions on the input data
    case Errc::MissingPair:
    case Errc::DegenerateData:
      return 2;
    default:
      return 3;
  }
}

PopulationSpec population_from_yaml(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    spec_error(std::string("population spec is not valid YAML: ") + e.what());
  }
  PopulationSpec spec = default_population();
  if (root.IsNull()) return spec;
  check_keys(root, {"n_users", "seed", "experience", "gender", "age", "aims", "autonomy"}, "spec");
  if (root["n_users"]) {
    const auto n = scalar<long long>(root["n_users"], "n_users");
    if (n < 0) spec_error("n_users must be positive");
    spec.n_users = static_cast<std::size_t>(n);
  }
  if (root["seed"]) spec.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["experience"]) {
    spec.experience = distribution<5>(root["experience"], "experience", [](const std::string& k) {
      const auto v = parse_int(k);
      if (!v || !valid_rating(*v)) throw Error(Errc::InvalidValue, k);
      return static_cast<std::size_t>(*v - 1);
    });
  }
  if (root["gender"]) {
    spec.gender = distribution<kGenderCount>(root["gender"], "gender",
                                             [](const std::string& k) { return index(parse_gender(k)); });
  }
  if (root["age"]) {
    spec.age = distribution<kAgeGroupCount>(root["age"], "age",
                                            [](const std::string& k) { return index(parse_age_group(k)); });
  }
  if (const auto& aims = root["aims"]) {
    if (!aims.IsMap()) spec_error("aims must be a mapping keyed by aim");
    for (const auto& kv : aims) {
      const auto key = kv.first.as<std::string>();
      Aim a;
      try {
        a = parse_aim(key);
      } catch (const Error&) {
        spec_error("aims: unknown aim '" + key + "'");
      }
      auto& truth = spec.aims[index(a)];
      truth.model = model_from_yaml(kv.second, truth.model, "aims." + key, true);
      if (kv.second["value_shift"]) truth.value_shift = scalar<double>(kv.second["value_shift"], "aims." + key + ".value_shift");
    }
  }
  if (const auto& au = root["autonomy"]) {
    check_keys(au, {"fixed", "educative", "explorative"}, "autonomy");
    if (au["fixed"]) {
      const auto v = number_list(au["fixed"], "autonomy.fixed");
      if (v.size() != 2) spec_error("autonomy.fixed needs [educative, explorative]");
      spec.autonomy = {};
      spec.autonomy.fixed = AutonomyPref{static_cast<int>(v[0]), static_cast<int>(v[1])};
    }
    if (au["educative"]) {
      spec.autonomy.educative = model_from_yaml(au["educative"], spec.autonomy.educative.value_or(OrdinalModel{}),
                                                "autonomy.educative", false);
    }
    if (au["explorative"]) {
      spec.autonomy.explorative = model_from_yaml(au["explorative"], spec.autonomy.explorative.value_or(OrdinalModel{}),
                                                  "autonomy.explorative", false);
    }
  }
  spec.validate();
  return spec;
}

std::string population_to_yaml(const PopulationSpec& spec) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "n_users" << YAML::Value << spec.n_users;
  out << YAML::Key << "seed" << YAML::Value << spec.seed;
  out << YAML::Key << "experience" << YAML::Value << YAML::Flow << std::vector<double>(spec.experience.begin(), spec.experience.end());
  out << YAML::Key << "gender" << YAML::Value << YAML::BeginMap;
  for (std::size_t g = 0; g < kGenderCount; ++g) {
    out << YAML::Key << std::string(to_string(static_cast<Gender>(g))) << YAML::Value << spec.gender[g];
  }
  out << YAML::EndMap;
  out << YAML::Key << "age" << YAML::Value << YAML::BeginMap;
  for (std::size_t a = 0; a < kAgeGroupCount; ++a) {
    out << YAML::Key << std::string(to_string(static_cast<AgeGroup>(a))) << YAML::Value << spec.age[a];
  }
  out << YAML::EndMap;
  auto emit_model = [&](const OrdinalModel& m, bool intercepts) {
    out << YAML::Key << "cutpoints" << YAML::Value << YAML::Flow << m.cutpoints;
    out << YAML::Key << "beta" << YAML::Value << YAML::BeginMap;
    for (std::size_t i = 0; i < m.beta.size(); ++i) out << YAML::Key << m.beta_names[i] << YAML::Value << m.beta[i];
    out << YAML::EndMap;
    if (intercepts) {
      out << YAML::Key << "intercepts" << YAML::Value << YAML::BeginMap;
      for (Domain d : all_domains()) {
        out << YAML::Key << std::string(to_string(d)) << YAML::Value << m.alpha.at(index(d));
      }
      out << YAML::EndMap;
      out << YAML::Key << "sigma_alpha" << YAML::Value << m.sigma_alpha;
    }
  };
  out << YAML::Key << "aims" << YAML::Value << YAML::BeginMap;
  for (Aim a : all_aims()) {
    out << YAML::Key << std::string(to_string(a)) << YAML::Value << YAML::BeginMap;
    emit_model(spec.aims[index(a)].model, true);
    out << YAML::Key << "value_shift" << YAML::Value << spec.aims[index(a)].value_shift;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::Key << "autonomy" << YAML::Value << YAML::BeginMap;
  if (spec.autonomy.fixed) {
    out << YAML::Key << "fixed" << YAML::Value << YAML::Flow
        << std::vector<int>{spec.autonomy.fixed->educative_control, spec.autonomy.fixed->explorative_control};
  }
  if (spec.autonomy.educative) {
    out << YAML::Key << "educative" << YAML::Value << YAML::BeginMap;
    emit_model(*spec.autonomy.educative, false);
    out << YAML::EndMap;
  }
  if (spec.autonomy.explorative) {
    out << YAML::Key << "explorative" << YAML::Value << YAML::BeginMap;
    emit_model(*spec.autonomy.explorative, false);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace rae
