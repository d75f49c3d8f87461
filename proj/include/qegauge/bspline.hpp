#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "qegauge/types.hpp"

namespace qegauge {

namespace detail {

/// Index i of the knot span with t[i] <= x < t[i+1], restricted to [degree, n_basis-1].
template <typename Scalar>
Eigen::Index find_span(Scalar x, const VectorX<Scalar>& t, int degree, Eigen::Index n_basis) {
  if (x >= t(n_basis)) return n_basis - 1;
  if (x <= t(degree)) return degree;
  const Scalar* first = t.data() + degree;
  const Scalar* last = t.data() + n_basis + 1;
  return static_cast<Eigen::Index>(std::upper_bound(first, last, x) - t.data()) - 1;
}

/// Non-zero basis functions N_{span-degree..span} at x (triangular Cox-de Boor table).
template <typename Scalar>
VectorX<Scalar> basis_funs(Eigen::Index span, Scalar x, int degree, const VectorX<Scalar>& t) {
  VectorX<Scalar> n = VectorX<Scalar>::Zero(degree + 1);
  VectorX<Scalar> left(degree + 1), right(degree + 1);
  n(0) = 1;
  for (int j = 1; j <= degree; ++j) {
    left(j) = x - t(span + 1 - j);
    right(j) = t(span + j) - x;
    Scalar saved = 0;
    for (int r = 0; r < j; ++r) {
      const Scalar denom = right(r + 1) + left(j - r);
      const Scalar temp = denom == Scalar(0) ? Scalar(0) : n(r) / denom;
      n(r) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    n(j) = saved;
  }
  return n;
}

}  // namespace detail

/// Values of every B-spline of `degree` on the clamped knot vector `t` at x.
/// Inside [t(degree), t(n_basis)] this is the usual basis (a partition of unity);
/// outside it each function continues linearly from the nearest boundary.
template <typename Scalar>
VectorX<Scalar> bspline_row(Scalar x, const VectorX<Scalar>& t, int degree) {
  const Eigen::Index n_basis = t.size() - degree - 1;
  const Scalar lo = t(degree);
  const Scalar hi = t(n_basis);
  const Scalar at = std::clamp(x, lo, hi);
  const Eigen::Index span = detail::find_span(at, t, degree, n_basis);

  VectorX<Scalar> row = VectorX<Scalar>::Zero(n_basis);
  row.segment(span - degree, degree + 1) = detail::basis_funs(span, at, degree, t);
  if (x == at) return row;

  // derivative at the boundary from the degree-1 functions on the same span
  const VectorX<Scalar> lower = detail::basis_funs(span, at, degree - 1, t);
  auto lower_at = [&](Eigen::Index j) -> Scalar {
    const Eigen::Index off = j - (span - degree + 1);
    return (off >= 0 && off < degree) ? lower(off) : Scalar(0);
  };
  for (Eigen::Index j = span - degree; j <= span; ++j) {
    const Scalar d1 = t(j + degree) - t(j);
    const Scalar d2 = t(j + degree + 1) - t(j + 1);
    Scalar slope = 0;
    if (d1 > 0) slope += lower_at(j) / d1;
    if (d2 > 0) slope -= lower_at(j + 1) / d2;
    row(j) += (x - at) * Scalar(degree) * slope;
  }
  return row;
}

/// Design block of raw (unconstrained) B-spline values, one row per x.
template <typename Scalar>
MatrixX<Scalar> bspline_design(std::span<const Scalar> x, const VectorX<Scalar>& t, int degree) {
  const Eigen::Index n_basis = t.size() - degree - 1;
  MatrixX<Scalar> b(static_cast<Eigen::Index>(x.size()), n_basis);
  for (std::size_t i = 0; i < x.size(); ++i) b.row(static_cast<Eigen::Index>(i)) = bspline_row(x[i], t, degree).transpose();
  return b;
}

/// Knot averages; a spline whose coefficients are an affine function of these
/// abscissae is exactly that affine function.
template <typename Scalar>
VectorX<Scalar> greville_abscissae(const VectorX<Scalar>& t, int degree) {
  const Eigen::Index n_basis = t.size() - degree - 1;
  VectorX<Scalar> g(n_basis);
  for (Eigen::Index j = 0; j < n_basis; ++j) g(j) = t.segment(j + 1, degree).sum() / Scalar(degree);
  return g;
}

/// Second divided differences of the coefficients over the Greville abscissae,
/// scaled so that equally spaced abscissae give the classic [1, -2, 1] rows.
template <typename Scalar>
MatrixX<Scalar> second_difference_operator(const VectorX<Scalar>& greville) {
  const Eigen::Index k = greville.size();
  MatrixX<Scalar> d = MatrixX<Scalar>::Zero(std::max<Eigen::Index>(k - 2, 0), k);
  if (k < 3) return d;
  const Scalar h = (greville(k - 1) - greville(0)) / Scalar(k - 1);
  for (Eigen::Index j = 0; j + 2 < k; ++j) {
    const Scalar a = Scalar(1) / (greville(j + 1) - greville(j));
    const Scalar b = Scalar(1) / (greville(j + 2) - greville(j + 1));
    const Scalar scale = Scalar(2) * h * h / (greville(j + 2) - greville(j));
    d(j, j) = a * scale;
    d(j, j + 1) = -(a + b) * scale;
    d(j, j + 2) = b * scale;
  }
  return d;
}

/// Centered cubic regression-spline smooth for one covariate.
struct SmoothBasis {
  std::string var;
  int degree = 3;
  int k = 0;              // raw basis size after any knot collapse
  Vector knots;           // full clamped knot vector
  Matrix B;               // n x (k-1), columns sum to zero over the fitting data
  Matrix S;               // (k-1) x (k-1) penalty in the constrained space
  Matrix constraint;      // k x (k-1) null-space basis of the sum-to-zero constraint
  Matrix raw_penalty;     // k x k
  double x_min = 0.0;
  double x_max = 0.0;
  std::vector<std::string> warnings;

  /// Constrained design rows for new covariate values.
  Matrix design(std::span<const double> x) const;
};

/// Interior knots at quantiles i/(k-3) of x, boundary knots at min/max, second-
/// difference penalty, sum-to-zero constraint absorbed. Throws DegenerateRange
/// or TooFewDistinctValues.
SmoothBasis build_spline_basis(std::span<const double> x, int k, std::string var = {});

}  // namespace qegauge
