#include "qegauge/gam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "qegauge/error.hpp"
#include "qegauge/special.hpp"
#include "qegauge/textio.hpp"

namespace qegauge {

namespace {

std::vector<std::string> factor_labels(const MetricFrame& frame, const std::string& name) {
  if (const auto* f = frame.find_factor(name)) return *f;
  if (const auto* c = frame.find(name)) {
    std::vector<std::string> out;
    out.reserve(c->size());
    for (double v : *c) out.push_back(textio::format_shortest(v));
    return out;
  }
  throw Error(Errc::VariableNotFound, "VariableNotFound(\"" + name + "\")");
}

const std::vector<double>& numeric(const MetricFrame& frame, const std::string& name) {
  if (const auto* c = frame.find(name)) return *c;
  if (frame.find_factor(name)) {
    throw Error(Errc::VariableNotFound, "variable '" + name + "' is categorical; use re(" + name + ")");
  }
  throw Error(Errc::VariableNotFound, "VariableNotFound(\"" + name + "\")");
}

template <typename T>
std::vector<T> permute(const std::vector<T>& v, const std::vector<std::size_t>& order) {
  std::vector<T> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(v[i]);
  return out;
}

// Rows sorted on (response, predictors...) so that the fit is a function of the
// row multiset rather than of the input order.
std::vector<std::size_t> canonical_order(const MetricFrame& frame, const ModelFormula& f) {
  std::vector<const std::vector<double>*> reals{&numeric(frame, f.response)};
  std::vector<std::vector<std::string>> labels;
  for (const auto& s : f.smooth_terms) reals.push_back(&numeric(frame, s.var));
  for (const auto& x : f.linear_terms) reals.push_back(&numeric(frame, x));
  for (const auto& g : f.random_terms) labels.push_back(factor_labels(frame, g));

  std::vector<std::size_t> order(frame.n_rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (const auto* c : reals) {
      if ((*c)[a] != (*c)[b]) return (*c)[a] < (*c)[b];
    }
    for (const auto& l : labels) {
      if (l[a] != l[b]) return l[a] < l[b];
    }
    return false;
  });
  return order;
}

double penalty_scale(const Matrix& x, const Matrix& s) {
  const double sn = s.norm();
  if (!(sn > 0)) return 1.0;
  const double xn = (x.transpose() * x).norm();
  return xn > 0 ? xn / sn : 1.0;
}

}  // namespace

RandomEffectBlock build_random_block(std::span<const std::string> labels, std::string factor) {
  RandomEffectBlock block;
  block.factor = std::move(factor);
  if (labels.empty()) throw Error(Errc::DegenerateInput, "random effect '" + block.factor + "' has no observations");
  std::unordered_map<std::string, Eigen::Index> index;
  std::vector<Eigen::Index> row_level;
  row_level.reserve(labels.size());
  for (const auto& l : labels) {
    auto [it, inserted] = index.emplace(l, static_cast<Eigen::Index>(block.levels.size()));
    if (inserted) block.levels.push_back(l);
    row_level.push_back(it->second);
  }
  const auto n_levels = static_cast<Eigen::Index>(block.levels.size());
  block.Z = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), n_levels);
  for (std::size_t i = 0; i < row_level.size(); ++i) block.Z(static_cast<Eigen::Index>(i), row_level[i]) = 1.0;
  block.penalty = Matrix::Identity(n_levels, n_levels);
  return block;
}

const FittedTerm& FittedGam::term(std::string_view var) const {
  for (const auto& t : terms) {
    if (t.var == var) return t;
  }
  throw Error(Errc::TermNotFound, "TermNotFound(\"" + std::string(var) + "\")");
}

std::map<std::string, double> FittedGam::edf_per_term() const {
  std::map<std::string, double> out;
  for (const auto& t : terms) out[t.var] = t.edf;
  return out;
}

std::map<std::string, double> FittedGam::lambda() const {
  std::map<std::string, double> out;
  for (const auto& t : terms) {
    if (t.lambda) out[t.var] = *t.lambda;
  }
  return out;
}

double gaussian_aic(std::size_t n, double rss, double edf_total) {
  const double nn = static_cast<double>(n);
  return nn * std::log(2.0 * std::numbers::pi * rss / nn) + nn + 2.0 * (edf_total + 1.0);
}

FittedGam fit_gam(const MetricFrame& frame, const ModelFormula& formula, const GamOptions& options) {
  FittedGam fit;
  fit.formula = formula;
  fit.n = frame.n_rows();

  const auto order = canonical_order(frame, formula);
  const auto y_sorted = permute(numeric(frame, formula.response), order);
  const Vector y = Eigen::Map<const Vector>(y_sorted.data(), static_cast<Eigen::Index>(y_sorted.size()));

  std::vector<DesignBlock<double>> blocks;
  Eigen::Index offset = 1;
  for (const auto& s : formula.smooth_terms) {
    const auto x = permute(numeric(frame, s.var), order);
    SmoothBasis basis = build_spline_basis(x, s.k, s.var);
    FittedTerm t;
    t.var = s.var;
    t.kind = TermKind::Smooth;
    t.offset = offset;
    t.width = basis.B.cols();
    t.penalty_scale = penalty_scale(basis.B, basis.S);
    for (const auto& w : basis.warnings) fit.diagnostics.warnings.push_back(w);
    blocks.push_back({s.var, basis.B, Matrix(t.penalty_scale * basis.S)});
    basis.B.resize(0, 0);
    t.basis = std::move(basis);
    offset += t.width;
    fit.terms.push_back(std::move(t));
  }
  for (const auto& g : formula.random_terms) {
    const auto labels = permute(factor_labels(frame, g), order);
    auto rb = build_random_block(labels, g);
    FittedTerm t;
    t.var = g;
    t.kind = TermKind::Random;
    t.offset = offset;
    t.width = rb.Z.cols();
    t.penalty_scale = penalty_scale(rb.Z, rb.penalty);
    t.levels = rb.levels;
    if (rb.levels.size() == 1) {
      fit.diagnostics.warnings.push_back("random term '" + g + "' has a single level and is confounded with the intercept");
    }
    blocks.push_back({g, std::move(rb.Z), Matrix(t.penalty_scale * rb.penalty)});
    offset += t.width;
    fit.terms.push_back(std::move(t));
  }
  for (const auto& name : formula.linear_terms) {
    const auto x = permute(numeric(frame, name), order);
    FittedTerm t;
    t.var = name;
    t.kind = TermKind::Linear;
    t.offset = offset;
    t.width = 1;
    blocks.push_back({name, Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())), std::nullopt});
    offset += 1;
    fit.terms.push_back(std::move(t));
  }

  const PenalizedSystem<double> system(y, blocks);
  std::vector<double> lambda;
  if (options.fixed_lambda) {
    lambda = *options.fixed_lambda;
  } else {
    const auto sel = select_lambda(system, options.search);
    lambda = sel.lambda;
    fit.diagnostics.lambda_converged = sel.converged;
    fit.diagnostics.lambda_sweeps = sel.sweeps;
    fit.diagnostics.gcv = sel.gcv;
    std::size_t j = 0;
    for (const auto& t : fit.terms) {
      if (t.kind == TermKind::Linear) continue;
      if (sel.at_boundary[j]) fit.diagnostics.lambda_at_boundary.push_back(t.var);
      ++j;
    }
  }

  const auto pf = system.solve(lambda);
  fit.diagnostics.jitter_applied = pf.jitter_applied;
  if (options.fixed_lambda) fit.diagnostics.gcv = system.gcv(pf);

  fit.beta = pf.beta;
  const Vector fitted_sorted = system.X() * pf.beta;
  fit.rss = (y - fitted_sorted).squaredNorm();
  fit.edf_total = pf.edf;
  fit.intercept_edf = pf.edf_per_coef(0);
  std::size_t j = 0;
  for (auto& t : fit.terms) {
    t.edf = pf.edf_per_coef.segment(t.offset, t.width).sum();
    if (t.kind != TermKind::Linear) t.lambda = lambda[j++];
  }
  const double n = static_cast<double>(fit.n);
  fit.sigma2_hat = fit.rss / (n - fit.edf_total);
  fit.aic = gaussian_aic(fit.n, fit.rss, fit.edf_total);
  fit.Vb = fit.sigma2_hat * pf.inv_penalized;

  fit.fitted.resize(static_cast<Eigen::Index>(fit.n));
  for (std::size_t i = 0; i < order.size(); ++i) fit.fitted(static_cast<Eigen::Index>(order[i])) = fitted_sorted(static_cast<Eigen::Index>(i));
  return fit;
}

double delta_aic(const FittedGam& reduced, const FittedGam& full) {
  if (reduced.formula.response != full.formula.response) {
    throw Error(Errc::IncomparableModels, "IncomparableModels: responses differ ('" + reduced.formula.response +
                                              "' vs '" + full.formula.response + "')");
  }
  if (reduced.n != full.n) {
    throw Error(Errc::IncomparableModels, "IncomparableModels: n differs (" + std::to_string(reduced.n) + " vs " +
                                              std::to_string(full.n) + ")");
  }
  for (const auto& v : reduced.formula.predictors()) {
    if (!full.formula.has_term(v)) {
      throw Error(Errc::IncomparableModels, "IncomparableModels: term '" + v + "' is not in the full model");
    }
  }
  return reduced.aic - full.aic;
}

std::vector<double> smooth_contribution(const FittedGam& fit, std::string_view term, std::span<const double> x) {
  const auto& t = fit.term(term);
  if (t.kind != TermKind::Smooth) throw Error(Errc::TermNotSmooth, "TermNotSmooth(\"" + t.var + "\")");
  const Vector c = t.basis.design(x) * fit.beta.segment(t.offset, t.width);
  return {c.data(), c.data() + c.size()};
}

PartialEffect partial_effect(const FittedGam& fit, std::string_view term, int grid_size) {
  const auto& t = fit.term(term);
  if (t.kind != TermKind::Smooth) throw Error(Errc::TermNotSmooth, "TermNotSmooth(\"" + t.var + "\")");
  if (grid_size < 1) throw Error(Errc::OutOfRange, "grid size must be positive");

  PartialEffect pe;
  pe.term = t.var;
  pe.edf = t.edf;
  pe.grid_x.resize(static_cast<std::size_t>(grid_size));
  const double lo = t.basis.x_min;
  const double hi = t.basis.x_max;
  for (int i = 0; i < grid_size; ++i) {
    pe.grid_x[static_cast<std::size_t>(i)] = grid_size == 1 ? lo : lo + (hi - lo) * i / (grid_size - 1);
  }
  pe.grid_x.back() = grid_size == 1 ? lo : hi;

  const Matrix bg = t.basis.design(pe.grid_x);
  const Vector beta = fit.beta.segment(t.offset, t.width);
  const Matrix vt = fit.Vb.block(t.offset, t.offset, t.width, t.width);
  const Vector effect = bg * beta;
  const Vector var = (bg * vt).cwiseProduct(bg).rowwise().sum();
  pe.effect.assign(effect.data(), effect.data() + effect.size());
  pe.se.resize(pe.effect.size());
  for (Eigen::Index i = 0; i < var.size(); ++i) pe.se[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, var(i)));

  Eigen::SelfAdjointEigenSolver<Matrix> es(vt);
  const Vector ev = es.eigenvalues();
  const double tol = 1e-12 * std::max(ev.maxCoeff(), 0.0);
  const Vector proj = es.eigenvectors().transpose() * beta;
  double stat = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > tol) stat += proj(i) * proj(i) / ev(i);
  }
  pe.wald_statistic = stat;
  pe.wald_df = std::max(1, static_cast<int>(std::lround(t.edf)));
  pe.p_value = chi_square_sf(stat, pe.wald_df);
  return pe;
}

std::vector<double> predict(const FittedGam& fit, const MetricFrame& frame) {
  const std::size_t n = frame.n_rows();
  std::vector<double> out(n, fit.beta(0));
  for (const auto& t : fit.terms) {
    switch (t.kind) {
      case TermKind::Smooth: {
        const auto& x = numeric(frame, t.var);
        const double margin = 0.1 * (t.basis.x_max - t.basis.x_min);
        for (std::size_t i = 0; i < n; ++i) {
          if (x[i] < t.basis.x_min - margin || x[i] > t.basis.x_max + margin) {
            throw Error(Errc::OutOfRange, "covariate '" + t.var + "' value " + textio::format_shortest(x[i]) +
                                              " is too far outside the training range");
          }
        }
        const auto c = smooth_contribution(fit, t.var, x);
        for (std::size_t i = 0; i < n; ++i) out[i] += c[i];
        break;
      }
      case TermKind::Random: {
        const auto labels = factor_labels(frame, t.var);
        std::unordered_map<std::string, Eigen::Index> index;
        for (std::size_t l = 0; l < t.levels.size(); ++l) index.emplace(t.levels[l], static_cast<Eigen::Index>(l));
        for (std::size_t i = 0; i < n; ++i) {
          auto it = index.find(labels[i]);
          if (it == index.end()) {
            throw Error(Errc::UnseenFactorLevel, "UnseenFactorLevel(\"" + labels[i] + "\") for '" + t.var + "'");
          }
          out[i] += fit.beta(t.offset + it->second);
        }
        break;
      }
      case TermKind::Linear: {
        const auto& x = numeric(frame, t.var);
        for (std::size_t i = 0; i < n; ++i) out[i] += x[i] * fit.beta(t.offset);
        break;
      }
    }
  }
  return out;
}

std::string to_json(const FittedGam& fit) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["formula"] = render_formula(fit.formula);
  doc["response"] = fit.formula.response;
  doc["n"] = fit.n;
  doc["aic"] = fit.aic;
  doc["rss"] = fit.rss;
  doc["sigma2_hat"] = fit.sigma2_hat;
  doc["edf_total"] = fit.edf_total;
  ordered_json terms = ordered_json::array();
  for (const auto& t : fit.terms) {
    ordered_json jt;
    jt["term"] = t.var;
    jt["kind"] = t.kind == TermKind::Smooth ? "smooth" : t.kind == TermKind::Random ? "random" : "linear";
    jt["edf"] = t.edf;
    if (t.lambda) {
      jt["lambda"] = *t.lambda;
      jt["penalty_scale"] = t.penalty_scale;
    }
    if (t.kind == TermKind::Smooth) {
      jt["k"] = t.basis.k;
      jt["knots"] = std::vector<double>(t.basis.knots.data(), t.basis.knots.data() + t.basis.knots.size());
    }
    if (t.kind == TermKind::Random) jt["levels"] = t.levels;
    jt["columns"] = {t.offset, t.offset + t.width};
    terms.push_back(std::move(jt));
  }
  doc["terms"] = std::move(terms);
  doc["beta"] = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size());
  ordered_json diag;
  diag["lambda_converged"] = fit.diagnostics.lambda_converged;
  diag["lambda_sweeps"] = fit.diagnostics.lambda_sweeps;
  diag["lambda_at_boundary"] = fit.diagnostics.lambda_at_boundary;
  diag["gcv"] = fit.diagnostics.gcv;
  diag["jitter_applied"] = fit.diagnostics.jitter_applied;
  diag["warnings"] = fit.diagnostics.warnings;
  diag["p_values"] = "approximate";
  doc["diagnostics"] = std::move(diag);
  return doc.dump(2) + "\n";
}

}  // namespace qegauge
