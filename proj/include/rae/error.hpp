#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rae {

/// Error categories surfaced by every module. Codes are stable; the CLI maps
/// them onto exit codes (see exit_code in io.hpp).
enum class Errc {
  InvalidRating,
  UnknownDomain,
  InvalidValue,
  MissingCluster,
  NonFiniteLinearPredictor,
  DegenerateData,
  InsufficientDraws,
  EmptyGroup,
  AllTies,
  ConstantInput,
  MissingPair,
  MissingReport,
  SchemaMismatch,
  InvalidSpec,
  InvalidArgument,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

  Errc code() const noexcept { return code_; }
  /// 1-based input line for row-level ingestion errors.
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
};

}  // namespace rae
