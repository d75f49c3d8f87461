#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qegauge/bspline.hpp"
#include "qegauge/formula.hpp"
#include "qegauge/penalized.hpp"
#include "qegauge/stats.hpp"
#include "qegauge/types.hpp"

namespace qegauge {

/// Indicator design for a factor under an identity (ridge) penalty.
struct RandomEffectBlock {
  std::string factor;
  std::vector<std::string> levels;  // first-appearance order
  Matrix Z;                         // n x L
  Matrix penalty;                   // L x L identity
};

RandomEffectBlock build_random_block(std::span<const std::string> labels, std::string factor = {});

enum class TermKind { Smooth, Random, Linear };

struct FittedTerm {
  std::string var;
  TermKind kind = TermKind::Smooth;
  Eigen::Index offset = 0;  // first column in the model matrix
  Eigen::Index width = 0;
  std::optional<double> lambda;    // penalized terms only
  double penalty_scale = 1.0;      // S was multiplied by this before lambda
  double edf = 0.0;
  // smooth terms: basis metadata (the n-row design block is not retained)
  SmoothBasis basis;
  // random terms
  std::vector<std::string> levels;
};

struct GamDiagnostics {
  std::vector<std::string> lambda_at_boundary;  // term names
  bool lambda_converged = true;
  int lambda_sweeps = 0;
  double gcv = 0.0;
  bool jitter_applied = false;
  std::vector<std::string> warnings;
};

struct FittedGam {
  ModelFormula formula;
  std::vector<FittedTerm> terms;
  Vector beta;  // intercept first
  double edf_total = 0.0;
  double intercept_edf = 0.0;
  double rss = 0.0;
  double sigma2_hat = 0.0;
  double aic = 0.0;
  Matrix Vb;
  std::size_t n = 0;
  Vector fitted;  // in the caller's row order
  GamDiagnostics diagnostics;

  /// Throws TermNotFound.
  const FittedTerm& term(std::string_view var) const;
  std::map<std::string, double> edf_per_term() const;
  std::map<std::string, double> lambda() const;
};

struct GamOptions {
  /// One lambda per penalized term (smooths, then random terms); skips GCV selection.
  std::optional<std::vector<double>> fixed_lambda;
  LambdaSearchOptions search;
};

/// n log(2 pi rss / n) + n + 2 (edf + 1).
double gaussian_aic(std::size_t n, double rss, double edf_total);

/// Throws VariableNotFound, SingularSystem, and basis construction errors.
FittedGam fit_gam(const MetricFrame& frame, const ModelFormula& formula, const GamOptions& options = {});

/// aic(reduced) - aic(full). Throws IncomparableModels.
double delta_aic(const FittedGam& reduced, const FittedGam& full);

struct PartialEffect {
  std::string term;
  std::vector<double> grid_x;
  std::vector<double> effect;
  std::vector<double> se;
  double p_value = 1.0;
  double wald_statistic = 0.0;
  int wald_df = 1;
  double edf = 0.0;
};

inline constexpr int kDefaultGridSize = 200;
inline constexpr double kSignificanceLevel = 0.05;

/// Centered curve of a smooth term over its observed range, with an approximate
/// Wald test (chi-square, df = rounded edf, at least 1). Throws TermNotFound or TermNotSmooth.
PartialEffect partial_effect(const FittedGam& fit, std::string_view term, int grid_size = kDefaultGridSize);

/// B(x) beta_term for a smooth term at arbitrary covariate values.
std::vector<double> smooth_contribution(const FittedGam& fit, std::string_view term, std::span<const double> x);

/// Throws VariableNotFound, UnseenFactorLevel, or OutOfRange for smooth covariates
/// more than 10% of the training range outside it.
std::vector<double> predict(const FittedGam& fit, const MetricFrame& frame);

/// Archive document: formula, lambda, beta, edf per term, aic, n, diagnostics.
std::string to_json(const FittedGam& fit);

}  // namespace qegauge
