#include "qegauge/bspline.hpp"

#include <cmath>
#include <set>

#include "qegauge/error.hpp"

namespace qegauge {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Matrix SmoothBasis::design(std::span<const double> x) const {
  return bspline_design<double>(x, knots, degree) * constraint;
}

SmoothBasis build_spline_basis(std::span<const double> x, int k, std::string var) {
  if (k < 3) throw Error(Errc::InvalidBasisSize, "basis size must be at least 3");
  if (x.empty()) throw Error(Errc::TooFewDistinctValues, "TooFewDistinctValues: no observations");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (!(hi > lo)) throw Error(Errc::DegenerateRange, "DegenerateRange: '" + var + "' is constant");
  const std::size_t distinct = std::set<double>(sorted.begin(), sorted.end()).size();
  if (distinct < static_cast<std::size_t>(k)) {
    throw Error(Errc::TooFewDistinctValues, "TooFewDistinctValues: '" + var + "' has " + std::to_string(distinct) +
                                                " distinct values, basis size is " + std::to_string(k));
  }

  SmoothBasis basis;
  basis.var = std::move(var);
  basis.degree = std::min(3, k - 1);
  basis.x_min = lo;
  basis.x_max = hi;

  const int n_interior = k - basis.degree - 1;
  const double tol = 1e-12 * (hi - lo);
  std::vector<double> interior;
  for (int i = 1; i <= n_interior; ++i) {
    const double q = quantile_sorted(sorted, static_cast<double>(i) / static_cast<double>(n_interior + 1));
    const double prev = interior.empty() ? lo : interior.back();
    if (q - prev > tol && hi - q > tol) interior.push_back(q);
  }
  if (static_cast<int>(interior.size()) < n_interior) {
    basis.warnings.push_back("tied quantiles collapsed knots for '" + basis.var + "': k reduced from " +
                             std::to_string(k) + " to " +
                             std::to_string(static_cast<int>(interior.size()) + basis.degree + 1));
  }
  basis.k = static_cast<int>(interior.size()) + basis.degree + 1;

  const Eigen::Index n_knots = basis.k + basis.degree + 1;
  basis.knots.resize(n_knots);
  for (int i = 0; i <= basis.degree; ++i) {
    basis.knots(i) = lo;
    basis.knots(n_knots - 1 - i) = hi;
  }
  for (std::size_t i = 0; i < interior.size(); ++i) basis.knots(basis.degree + 1 + static_cast<Eigen::Index>(i)) = interior[i];

  const Matrix raw = bspline_design<double>(x, basis.knots, basis.degree);
  const Matrix d = second_difference_operator<double>(greville_abscissae<double>(basis.knots, basis.degree));
  basis.raw_penalty = d.transpose() * d;

  // sum-to-zero over the data: columns of Q orthogonal to 1'B
  const Vector c = raw.colwise().sum().transpose();
  Eigen::HouseholderQR<Matrix> qr(c);
  const Matrix q = qr.householderQ() * Matrix::Identity(basis.k, basis.k);
  basis.constraint = q.rightCols(basis.k - 1);

  basis.B = raw * basis.constraint;
  const Matrix s = basis.constraint.transpose() * basis.raw_penalty * basis.constraint;
  basis.S = 0.5 * (s + s.transpose());
  return basis;
}

}  // namespace qegauge
