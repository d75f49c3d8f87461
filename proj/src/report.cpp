#include "qegauge/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "qegauge/textio.hpp"

namespace qegauge {

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

bool is_significant(const PartialEffect& pe) noexcept { return pe.p_value <= kSignificanceLevel; }

std::string partial_effect_csv(const PartialEffect& pe) {
  using textio::format_shortest;
  std::ostringstream out;
  out << "# term=" << pe.term << '\n'
      << "# edf=" << format_shortest(pe.edf) << '\n'
      << "# p_value=" << format_shortest(pe.p_value) << " (approximate)\n"
      << "# significant=" << (is_significant(pe) ? "yes" : "no") << " (threshold 0.05)\n"
      << "term,x,effect,se,lower,upper\n";
  for (std::size_t i = 0; i < pe.grid_x.size(); ++i) {
    out << pe.term << ',' << format_shortest(pe.grid_x[i]) << ',' << format_shortest(pe.effect[i]) << ','
        << format_shortest(pe.se[i]) << ',' << format_shortest(pe.effect[i] - 2.0 * pe.se[i]) << ','
        << format_shortest(pe.effect[i] + 2.0 * pe.se[i]) << '\n';
  }
  return out.str();
}

std::string partial_effect_svg(const PartialEffect& pe, std::string_view title) {
  constexpr double width = 480, height = 320, left = 60, right = 20, top = 40, bottom = 40;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double x_lo = pe.grid_x.empty() ? 0.0 : pe.grid_x.front();
  double x_hi = pe.grid_x.empty() ? 1.0 : pe.grid_x.back();
  if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
  double y_lo = 0.0, y_hi = 0.0;
  for (std::size_t i = 0; i < pe.effect.size(); ++i) {
    y_lo = std::min(y_lo, pe.effect[i] - 2.0 * pe.se[i]);
    y_hi = std::max(y_hi, pe.effect[i] + 2.0 * pe.se[i]);
  }
  if (!(y_hi > y_lo)) y_hi = y_lo + 1.0;
  const auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  const auto py = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * plot_h; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << xml_escape(title) << "</text>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"34\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
      << "edf=" << fixed(pe.edf) << "  p=" << xml_escape(textio::format_shortest(pe.p_value)) << " (approx.)"
      << (is_significant(pe) ? "" : "  not significant") << "</text>\n";

  out << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < pe.grid_x.size(); ++i) {
    out << fixed(px(pe.grid_x[i])) << ',' << fixed(py(pe.effect[i] + 2.0 * pe.se[i])) << ' ';
  }
  for (std::size_t i = pe.grid_x.size(); i-- > 0;) {
    out << fixed(px(pe.grid_x[i])) << ',' << fixed(py(pe.effect[i] - 2.0 * pe.se[i])) << ' ';
  }
  out << "\"/>\n";

  out << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < pe.grid_x.size(); ++i) out << fixed(px(pe.grid_x[i])) << ',' << fixed(py(pe.effect[i])) << ' ';
  out << "\"/>\n";

  // axes with end labels
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  if (y_lo < 0.0 && y_hi > 0.0) {
    out << "<line x1=\"" << left << "\" y1=\"" << fixed(py(0.0)) << "\" x2=\"" << left + plot_w << "\" y2=\""
        << fixed(py(0.0)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  const auto label = [&](double x, double y, const char* anchor, double v) {
    out << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" text-anchor=\"" << anchor
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << fixed(v, 3) << "</text>\n";
  };
  label(left, top + plot_h + 14, "start", x_lo);
  label(left + plot_w, top + plot_h + 14, "end", x_hi);
  label(left - 4, top + plot_h, "end", y_lo);
  label(left - 4, top + 8, "end", y_hi);
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 6
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(pe.term) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string delta_aic_table(const std::vector<AicRow>& rows) {
  std::ostringstream out;
  out << "model\taic\tdelta_aic_vs_base\tn\n";
  for (const auto& r : rows) {
    out << r.model << '\t' << textio::format_shortest(r.aic) << '\t' << textio::format_shortest(r.delta_vs_base) << '\t'
        << r.n << '\n';
  }
  return out.str();
}

}  // namespace qegauge
