#include "qegauge/penalized.hpp"

#include <algorithm>
#include <cmath>

namespace qegauge {

namespace {

class GcvObjective {
 public:
  GcvObjective(const PenalizedSystem<double>& system, std::vector<double> log_lambda)
      : system_(system), log_lambda_(std::move(log_lambda)), lambda_(log_lambda_.size()) {}

  double at(std::size_t j, double log_value) {
    log_lambda_[j] = log_value;
    return current();
  }

  double current() {
    for (std::size_t i = 0; i < log_lambda_.size(); ++i) lambda_[i] = std::pow(10.0, log_lambda_[i]);
    return system_.gcv(system_.solve(lambda_));
  }

  std::vector<double>& log_lambda() { return log_lambda_; }

 private:
  const PenalizedSystem<double>& system_;
  std::vector<double> log_lambda_;
  std::vector<double> lambda_;
};

// Returns (argmin, min) along coordinate j; the coordinate is left at argmin.
std::pair<double, double> line_search(GcvObjective& obj, std::size_t j, double step, double tol) {
  const double start_x = obj.log_lambda()[j];
  const double start_f = obj.current();
  double best_x = kLog10LambdaMin;
  double best_f = obj.at(j, best_x);
  // ties resolve toward heavier smoothing
  const int cells = static_cast<int>(std::lround((kLog10LambdaMax - kLog10LambdaMin) / step));
  for (int i = 1; i <= cells; ++i) {
    const double x = std::min(kLog10LambdaMax, kLog10LambdaMin + i * step);
    const double f = obj.at(j, x);
    if (f <= best_f) {
      best_f = f;
      best_x = x;
    }
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::max(kLog10LambdaMin, best_x - step);
  double b = std::min(kLog10LambdaMax, best_x + step);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = obj.at(j, c);
  double fd = obj.at(j, d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = obj.at(j, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = obj.at(j, d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fm = obj.at(j, mid);
  if (fm < best_f) {
    best_f = fm;
    best_x = mid;
  }
  if (start_f < best_f) {
    best_f = start_f;
    best_x = start_x;
  }
  obj.at(j, best_x);
  return {best_x, best_f};
}

}  // namespace

LambdaSelection select_lambda(const PenalizedSystem<double>& system, const LambdaSearchOptions& options) {
  if (!(options.grid_step > 0)) throw Error(Errc::OutOfRange, "grid_step must be positive");
  const std::size_t m = system.n_penalized();
  LambdaSelection out;
  GcvObjective obj(system, std::vector<double>(m, 0.0));
  double best = obj.current();

  if (m == 0) {
    out.gcv = best;
    out.converged = true;
    return out;
  }

  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    const double before = best;
    for (std::size_t j = 0; j < m; ++j) best = line_search(obj, j, options.grid_step, options.log10_tolerance).second;
    out.sweeps = sweep;
    if (before - best < options.rel_improvement * std::abs(before)) {
      out.converged = true;
      break;
    }
  }

  out.log10_lambda = obj.log_lambda();
  out.gcv = best;
  for (double l : out.log10_lambda) {
    out.lambda.push_back(std::pow(10.0, l));
    out.at_boundary.push_back(l - kLog10LambdaMin < 1e-3 || kLog10LambdaMax - l < 1e-3);
  }
  return out;
}

}  // namespace qegauge
