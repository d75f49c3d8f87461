#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qegauge/error.hpp"
#include "qegauge/types.hpp"

namespace qegauge {

namespace detail {

// Plain left-to-right sums keep every statistic independent of thread scheduling.
template <typename Scalar>
Scalar mean(std::span<const Scalar> v) {
  Scalar s = 0;
  for (Scalar x : v) s += x;
  return s / static_cast<Scalar>(v.size());
}

}  // namespace detail

/// Sample standard deviation with the n-1 denominator; 0 for a single value.
template <typename Scalar>
Scalar sample_sd(std::span<const Scalar> values) {
  if (values.empty()) throw Error(Errc::DegenerateInput, "sample_sd of an empty list");
  if (values.size() == 1) return Scalar(0);
  const Scalar m = detail::mean(values);
  Scalar ss = 0;
  for (Scalar x : values) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<Scalar>(values.size() - 1));
}

template <typename Scalar>
Scalar sample_sd(const std::vector<Scalar>& values) {
  return sample_sd(std::span<const Scalar>(values));
}

/// (x - mean) / sd with the sample SD. Throws DegenerateInput for n < 2 or constant input.
template <typename Scalar>
std::vector<Scalar> zstandardize(std::span<const Scalar> values) {
  if (values.size() < 2) throw Error(Errc::DegenerateInput, "zstandardize needs at least two values");
  const Scalar m = detail::mean(values);
  const Scalar sd = sample_sd(values);
  if (!(sd > 0)) throw Error(Errc::DegenerateInput, "zstandardize of constant values");
  std::vector<Scalar> out;
  out.reserve(values.size());
  for (Scalar x : values) out.push_back((x - m) / sd);
  return out;
}

template <typename Scalar>
std::vector<Scalar> zstandardize(const std::vector<Scalar>& values) {
  return zstandardize(std::span<const Scalar>(values));
}

/// Product-moment correlation, two-pass.
template <typename Scalar>
Scalar pearson(std::span<const Scalar> x, std::span<const Scalar> y) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "pearson: lengths differ");
  if (x.size() < 2) throw Error(Errc::DegenerateInput, "pearson needs at least two observations");
  const Scalar mx = detail::mean(x);
  const Scalar my = detail::mean(y);
  Scalar sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Scalar dx = x[i] - mx;
    const Scalar dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0) || !(syy > 0)) throw Error(Errc::DegenerateInput, "pearson: constant input");
  const Scalar r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  return std::clamp(r, Scalar(-1), Scalar(1));
}

template <typename Scalar>
Scalar pearson(const std::vector<Scalar>& x, const std::vector<Scalar>& y) {
  return pearson(std::span<const Scalar>(x), std::span<const Scalar>(y));
}

/// Named real columns of equal length plus optional categorical columns.
/// Real columns never hold NaN or infinities.
class MetricFrame {
 public:
  void add_column(std::string name, std::vector<double> values);
  void add_factor(std::string name, std::vector<std::string> labels);
  /// Makes `alias` resolve to the existing column or factor `target`.
  void add_alias(std::string alias, std::string target);

  std::size_t n_rows() const noexcept { return n_rows_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<std::string>& factor_names() const noexcept { return factor_names_; }

  const std::vector<double>* find(std::string_view name) const;
  const std::vector<std::string>* find_factor(std::string_view name) const;
  /// Throws VariableNotFound.
  const std::vector<double>& column(std::string_view name) const;

  MetricFrame select_rows(std::span<const std::size_t> rows) const;

  /// Builds a frame from columns that may contain non-finite entries, dropping
  /// every row with any non-finite value (listwise deletion).
  static MetricFrame listwise(const std::vector<std::pair<std::string, std::vector<double>>>& columns);

 private:
  std::string resolve(std::string_view name) const;
  void check_rows(std::size_t n, const std::string& name);

  std::size_t n_rows_ = 0;
  bool has_rows_ = false;
  std::vector<std::string> names_;
  std::vector<std::string> factor_names_;
  std::map<std::string, std::vector<double>, std::less<>> columns_;
  std::map<std::string, std::vector<std::string>, std::less<>> factors_;
  std::map<std::string, std::string, std::less<>> aliases_;
};

struct CorrelationMatrix {
  std::vector<std::string> names;
  Matrix r;
  std::size_t n = 0;
};

/// Pairwise pearson over every real column of the frame.
CorrelationMatrix correlation_matrix(const MetricFrame& frame);

/// Names header then one row per variable.
std::string to_matrix_tsv(const CorrelationMatrix& m);
/// name_i,name_j,r,n for every ordered pair.
std::string to_long_csv(const CorrelationMatrix& m);

}  // namespace qegauge
