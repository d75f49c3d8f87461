#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qegauge/gam.hpp"

namespace qegauge {

bool is_significant(const PartialEffect& pe) noexcept;

/// `#` stamp lines (edf, p-value, significance) then term,x,effect,se,lower,upper
/// with lower/upper = effect -/+ 2 se.
std::string partial_effect_csv(const PartialEffect& pe);

/// Minimal line plot: axes, +/-2 se band, effect curve.
std::string partial_effect_svg(const PartialEffect& pe, std::string_view title);

struct AicRow {
  std::string model;
  double aic = 0.0;
  double delta_vs_base = 0.0;
  std::size_t n = 0;
};

/// model, aic, delta_aic_vs_base, n (shortest round-trip reals).
std::string delta_aic_table(const std::vector<AicRow>& rows);

}  // namespace qegauge
