#include "rae/error.hpp"

namespace rae {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidRating: return "InvalidRating";
    case Errc::UnknownDomain: return "UnknownDomain";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::MissingCluster: return "MissingCluster";
    case Errc::NonFiniteLinearPredictor: return "NonFiniteLinearPredictor";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::InsufficientDraws: return "InsufficientDraws";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::AllTies: return "AllTies";
    case Errc::ConstantInput: return "ConstantInput";
    case Errc::MissingPair: return "MissingPair";
    case Errc::MissingReport: return "MissingReport";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {
std::string compose(Errc code, const std::string& message, std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}
}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(compose(code, message, line)), code_(code), line_(line) {}

}  // namespace rae
