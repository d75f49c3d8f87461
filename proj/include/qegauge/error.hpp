#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qegauge {

enum class Errc {
  // ingest
  MissingColumn,
  MalformedRow,
  EmptyFile,
  TooManyLevels,
  DegenerateInput,
  LengthMismatch,
  // embeddings
  DimensionMismatch,
  DuplicateKey,
  BadHeader,
  ZeroVector,
  MissingEmbedding,
  ModelTagMismatch,
  // formulas
  SyntaxError,
  DuplicateTerm,
  ResponseInPredictors,
  InvalidBasisSize,
  // fitting
  TooFewDistinctValues,
  DegenerateRange,
  SingularSystem,
  VariableNotFound,
  IncomparableModels,
  TermNotFound,
  TermNotSmooth,
  UnseenFactorLevel,
  OutOfRange,
  // plumbing
  Config,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure in the library surfaces as an Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qegauge
