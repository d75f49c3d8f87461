#pragma once

// Reference implementations used only by the tests. They share no code with the
// library: extended precision, textbook formulas, no decompositions reused.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

struct LsResult {
  Eigen::VectorXd beta;
  double rss = 0.0;
  double edf = 0.0;
};

/// Solves (X'X + P) b = X'y in long double; X already carries the intercept.
inline LsResult penalized_normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                           const Eigen::MatrixXd& penalty) {
  const LMatrix xl = x.cast<long double>();
  const LVector yl = y.cast<long double>();
  const LMatrix xtx = xl.transpose() * xl;
  const LMatrix a = xtx + penalty.cast<long double>();
  Eigen::FullPivLU<LMatrix> lu(a);
  const LVector b = lu.solve(LVector(xl.transpose() * yl));
  const LVector r = yl - xl * b;
  const LMatrix infl = lu.solve(xtx);
  LsResult out;
  out.beta = b.cast<double>();
  out.rss = static_cast<double>(r.squaredNorm());
  out.edf = static_cast<double>(infl.trace());
  return out;
}

inline double gcv(const LsResult& r, std::size_t n) {
  const double nn = static_cast<double>(n);
  return nn * r.rss / ((nn - r.edf) * (nn - r.edf));
}

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  long double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += static_cast<long double>(u[i]) * v[i];
    uu += static_cast<long double>(u[i]) * u[i];
    vv += static_cast<long double>(v[i]) * v[i];
  }
  return static_cast<double>(uv / std::sqrt(uu * vv));
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cxy += (x[i] - mx) * (y[i] - my);
    cxx += (x[i] - mx) * (x[i] - mx);
    cyy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(cxy / std::sqrt(cxx * cyy));
}

inline double mean(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s / v.size());
}

inline double sd(const std::vector<double>& v) {
  const long double m = mean(v);
  long double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return static_cast<double>(std::sqrt(s / (v.size() - 1)));
}

/// Recursive Cox-de Boor definition of B-spline j of degree d on knots t, with
/// the last basis function closed at the right end of the domain.
inline double bspline(const std::vector<double>& t, int j, int d, double x) {
  if (d == 0) {
    const bool last = x == t.back() && t[j] < t[j + 1] && t[j + 1] == t.back();
    return (t[j] <= x && x < t[j + 1]) || last ? 1.0 : 0.0;
  }
  double v = 0.0;
  const double l = t[j + d] - t[j];
  const double r = t[j + d + 1] - t[j + 1];
  if (l > 0) v += (x - t[j]) / l * bspline(t, j, d - 1, x);
  if (r > 0) v += (t[j + d + 1] - x) / r * bspline(t, j + 1, d - 1, x);
  return v;
}

/// Type-7 sample quantile.
inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

}  // namespace oracle
