#pragma once

namespace qegauge {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a), a > 0, x >= 0.
double gamma_q(double a, double x);

/// P(X > x) for X ~ chi-square with `df` degrees of freedom.
double chi_square_sf(double x, double df);

}  // namespace qegauge
