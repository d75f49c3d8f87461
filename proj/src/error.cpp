#include "qegauge/error.hpp"

namespace qegauge {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::TooManyLevels: return "TooManyLevels";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::BadHeader: return "BadHeader";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::MissingEmbedding: return "MissingEmbedding";
    case Errc::ModelTagMismatch: return "ModelTagMismatch";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::DuplicateTerm: return "DuplicateTerm";
    case Errc::ResponseInPredictors: return "ResponseInPredictors";
    case Errc::InvalidBasisSize: return "InvalidBasisSize";
    case Errc::TooFewDistinctValues: return "TooFewDistinctValues";
    case Errc::DegenerateRange: return "DegenerateRange";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::VariableNotFound: return "VariableNotFound";
    case Errc::IncomparableModels: return "IncomparableModels";
    case Errc::TermNotFound: return "TermNotFound";
    case Errc::TermNotSmooth: return "TermNotSmooth";
    case Errc::UnseenFactorLevel: return "UnseenFactorLevel";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::Config: return "Config";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace qegauge
