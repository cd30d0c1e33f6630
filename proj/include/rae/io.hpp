#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rae/core.hpp"
#include "rae/error.hpp"
#include "rae/infer.hpp"
#include "rae/pipeline.hpp"
#include "rae/policy.hpp"
#include "rae/sim.hpp"

namespace rae {

// ---------------------------------------------------------------------------
// Rating CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "participant_id,domain,aim,value_frame,rating,age_group,gender,crs_experience,"
    "autonomy_edu,autonomy_exp";

struct RowError {
  std::size_t line = 0;  // 1-based; the header is line 1
  Errc code = Errc::InvalidValue;
  std::string message;
};

struct IngestResult {
  RatingRecords records;
  std::vector<RowError> errors;
};

/// Parses the rating CSV. A wrong header throws Error{SchemaMismatch}. Row
/// problems are collected with their line numbers; in strict mode the first
/// one is thrown instead (Error{InvalidRating | UnknownDomain | InvalidValue}
/// carrying the line).
IngestResult parse_ratings_csv(std::string_view text, bool strict = false);
IngestResult ingest(const std::filesystem::path& path, bool strict = false);

void write_ratings_csv(std::ostream& out, const RatingRecords& records);

// ---------------------------------------------------------------------------
// Reports and draws
// ---------------------------------------------------------------------------

std::string report_to_json(const AnalysisReport& report);
/// Throws Error{SchemaMismatch} on malformed input.
AnalysisReport report_from_json(std::string_view text);

/// Long format: parameter,chain,iteration,value (0-based chain/iteration).
void write_draws_csv(std::ostream& out, const FitResult& fit);

// ---------------------------------------------------------------------------
// Priors artifact
// ---------------------------------------------------------------------------

inline constexpr std::string_view kPriorsSchema = "rae-priors/1";

struct Provenance {
  std::string source;        // "csv", "reports" or "published"
  std::string input_sha256;  // hex digest of the input bytes
  std::uint64_t seed = 0;
  std::optional<std::string> timestamp;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct PriorsArtifact {
  std::string schema_version{kPriorsSchema};
  PolicyPriors priors;
  RuleTable rules;
  Provenance provenance;

  friend bool operator==(const PriorsArtifact&, const PriorsArtifact&) = default;
};

std::string priors_to_json(const PriorsArtifact& artifact);
/// Rejects unknown fields and other schema versions (Error{SchemaMismatch});
/// validates the priors and rule table.
PriorsArtifact priors_from_json(std::string_view text);

/// True when sha256(input) equals the recorded provenance hash.
bool verify_provenance(const PriorsArtifact& artifact, std::string_view input);

std::string sha256_hex(std::string_view bytes);

// ---------------------------------------------------------------------------
// Other formats
// ---------------------------------------------------------------------------

/// Population spec as YAML (JSON is accepted too). Absent keys keep the
/// values of default_population(). Throws Error{InvalidSpec}.
PopulationSpec population_from_yaml(std::string_view text);
std::string population_to_yaml(const PopulationSpec& spec);

std::string weights_to_json(const AimWeights& w);
std::string alignment_to_json(const AlignmentScore& calibrated,
                              const std::optional<AlignmentScore>& flat);

/// StateVector from a JSON object with keys domain, item_value, crs_experience,
/// gender, age_group, controls ([edu, exp]), history. Throws Error{InvalidValue | UnknownDomain | InvalidRating}.
StateVector state_from_json(std::string_view text,
                            const std::array<DomainProfile, kDomainCount>& profiles = default_profiles());

/// Renders any artifact written by this library as aligned text tables.
/// Weight records include their ternary coordinates w_i / sum(w).
std::string render_text(std::string_view json_text);

std::string read_file(const std::filesystem::path& path);

/// Process exit code for an error: 2 for input / usage problems, 3 for
/// failures inside a computation.
int exit_code(Errc code);

}  // namespace rae
