#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qegauge {

inline constexpr int kDefaultBasisSize = 10;

struct SmoothTerm {
  std::string var;
  int k = kDefaultBasisSize;
  friend bool operator==(const SmoothTerm&, const SmoothTerm&) = default;
};

/// `response ~ s(x) + s(z, k=7) + re(g) + w`.
/// re(g) is a ridge-penalized factor smooth (one coefficient per level).
struct ModelFormula {
  std::string response;
  std::vector<SmoothTerm> smooth_terms;
  std::vector<std::string> random_terms;
  std::vector<std::string> linear_terms;

  /// Every predictor variable name: smooths, then random, then linear.
  std::vector<std::string> predictors() const;
  bool has_term(std::string_view var) const;
  friend bool operator==(const ModelFormula&, const ModelFormula&) = default;
};

/// Throws SyntaxError (message carries the 0-based column), DuplicateTerm,
/// ResponseInPredictors, or InvalidBasisSize.
ModelFormula parse_formula(std::string_view text);

/// Canonical text; `y ~ 1` when there are no predictors.
std::string render_formula(const ModelFormula& f);

}  // namespace qegauge
