#include "qegauge/stats.hpp"

#include <algorithm>
#include <sstream>

#include "qegauge/textio.hpp"

namespace qegauge {

void MetricFrame::check_rows(std::size_t n, const std::string& name) {
  if (columns_.count(name) || factors_.count(name) || aliases_.count(name)) {
    throw Error(Errc::Config, "duplicate frame column '" + name + "'");
  }
  if (has_rows_ && n != n_rows_) {
    throw Error(Errc::LengthMismatch, "column '" + name + "' has " + std::to_string(n) + " rows, frame has " +
                                          std::to_string(n_rows_));
  }
  n_rows_ = n;
  has_rows_ = true;
}

void MetricFrame::add_column(std::string name, std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(Errc::DegenerateInput, "column '" + name + "' has a non-finite value at row " + std::to_string(i));
    }
  }
  check_rows(values.size(), name);
  names_.push_back(name);
  columns_.emplace(std::move(name), std::move(values));
}

void MetricFrame::add_factor(std::string name, std::vector<std::string> labels) {
  check_rows(labels.size(), name);
  factor_names_.push_back(name);
  factors_.emplace(std::move(name), std::move(labels));
}

void MetricFrame::add_alias(std::string alias, std::string target) {
  if (!columns_.count(target) && !factors_.count(target)) {
    throw Error(Errc::VariableNotFound, "alias target '" + target + "' not in frame");
  }
  if (columns_.count(alias) || factors_.count(alias)) return;
  aliases_[std::move(alias)] = std::move(target);
}

std::string MetricFrame::resolve(std::string_view name) const {
  if (auto it = aliases_.find(name); it != aliases_.end()) return it->second;
  return std::string(name);
}

const std::vector<double>* MetricFrame::find(std::string_view name) const {
  auto it = columns_.find(resolve(name));
  return it == columns_.end() ? nullptr : &it->second;
}

const std::vector<std::string>* MetricFrame::find_factor(std::string_view name) const {
  auto it = factors_.find(resolve(name));
  return it == factors_.end() ? nullptr : &it->second;
}

const std::vector<double>& MetricFrame::column(std::string_view name) const {
  if (auto* c = find(name)) return *c;
  throw Error(Errc::VariableNotFound, "variable '" + std::string(name) + "' not found");
}

MetricFrame MetricFrame::select_rows(std::span<const std::size_t> rows) const {
  MetricFrame out;
  for (const auto& name : names_) {
    const auto& src = columns_.at(name);
    std::vector<double> v;
    v.reserve(rows.size());
    for (auto r : rows) v.push_back(src.at(r));
    out.add_column(name, std::move(v));
  }
  for (const auto& name : factor_names_) {
    const auto& src = factors_.at(name);
    std::vector<std::string> v;
    v.reserve(rows.size());
    for (auto r : rows) v.push_back(src.at(r));
    out.add_factor(name, std::move(v));
  }
  out.aliases_ = aliases_;
  if (!out.has_rows_) out.n_rows_ = rows.size();
  return out;
}

MetricFrame MetricFrame::listwise(const std::vector<std::pair<std::string, std::vector<double>>>& columns) {
  MetricFrame out;
  if (columns.empty()) return out;
  const std::size_t n = columns.front().second.size();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (const auto& [name, values] : columns) {
      if (values.size() != n) throw Error(Errc::LengthMismatch, "column '" + name + "' length differs");
      if (!std::isfinite(values[i])) ok = false;
    }
    if (ok) keep.push_back(i);
  }
  for (const auto& [name, values] : columns) {
    std::vector<double> v;
    v.reserve(keep.size());
    for (auto i : keep) v.push_back(values[i]);
    out.add_column(name, std::move(v));
  }
  return out;
}

CorrelationMatrix correlation_matrix(const MetricFrame& frame) {
  CorrelationMatrix m;
  m.names = frame.names();
  m.n = frame.n_rows();
  const auto p = static_cast<Eigen::Index>(m.names.size());
  m.r = Matrix::Identity(p, p);
  for (const auto& name : m.names) {
    const auto& c = frame.column(name);
    if (c.size() < 2 || sample_sd(c) == 0.0) {
      throw Error(Errc::DegenerateInput, "degenerate column '" + name + "'");
    }
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double r = pearson(frame.column(m.names[i]), frame.column(m.names[j]));
      m.r(i, j) = r;
      m.r(j, i) = r;
    }
  }
  return m;
}

std::string to_matrix_tsv(const CorrelationMatrix& m) {
  std::ostringstream out;
  out << "name";
  for (const auto& n : m.names) out << '\t' << n;
  out << '\n';
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    out << m.names[i];
    for (std::size_t j = 0; j < m.names.size(); ++j) {
      out << '\t' << textio::format_shortest(m.r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
  return out.str();
}

std::string to_long_csv(const CorrelationMatrix& m) {
  std::ostringstream out;
  out << "name_i,name_j,r,n\n";
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    for (std::size_t j = 0; j < m.names.size(); ++j) {
      out << m.names[i] << ',' << m.names[j] << ','
          << textio::format_shortest(m.r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << ',' << m.n
          << '\n';
    }
  }
  return out.str();
}

}  // namespace qegauge
