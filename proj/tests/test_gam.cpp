#include <gtest/gtest.h>

#include <numbers>
#include <numeric>
#include <random>

#include "json.hpp"
#include "oracles.hpp"
#include "qegauge/error.hpp"
#include "qegauge/formula.hpp"
#include "qegauge/gam.hpp"
#include "qegauge/textio.hpp"
#include "support.hpp"

using namespace qegauge;

namespace {

const char* kBase = "human_mean ~ s(ml_eval) + s(similarity) + s(sd) + s(hter) + re(evaluator_num) + re(langs)";
const std::vector<std::string> kPairs{"en-de", "en-zh", "ro-en", "et-en", "ne-en", "si-en", "ru-en"};

MetricFrame base_frame(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> e(0.0, 5.0);
  std::vector<double> ml(n), sim(n), sd(n), hter(n), ev(n), y(n);
  std::vector<std::string> langs(n);
  for (std::size_t i = 0; i < n; ++i) {
    ml[i] = -2.0 * u(rng);
    sim[i] = 0.2 + 0.7 * u(rng);
    sd[i] = 20.0 * u(rng);
    hter[i] = 1.2 * u(rng);
    ev[i] = static_cast<double>(3 + rng() % 3);
    langs[i] = kPairs[rng() % 4];
    y[i] = 60 + 8 * ml[i] + 25 * sim[i] * sim[i] - 0.3 * sd[i] - 15 * hter[i] + (langs[i] == "en-de" ? 3 : 0) + e(rng);
  }
  MetricFrame f;
  f.add_column("human_mean", y);
  f.add_column("ml_eval", ml);
  f.add_column("similarity", sim);
  f.add_column("sd", sd);
  f.add_column("hter", hter);
  f.add_column("evaluator_num", ev);
  f.add_factor("langs", langs);
  return f;
}

MetricFrame sine_frame(std::uint64_t seed, std::size_t n, double noise_sd = 0.1) {
  std::mt19937_64 rng(seed);
  const auto x = testsupport::uniform(rng, n);
  const auto z = testsupport::uniform(rng, n);
  const auto e = testsupport::normal(rng, n, noise_sd);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(2 * std::numbers::pi * x[i]) + e[i];
  MetricFrame f;
  f.add_column("y", y);
  f.add_column("x", x);
  f.add_column("z", z);
  return f;
}

void expect_fit_invariants(const FittedGam& fit) {
  const double p = static_cast<double>(fit.beta.size());
  EXPECT_GE(fit.edf_total, 1.0 - 1e-9);
  EXPECT_LE(fit.edf_total, p + 1e-9);
  double sum = fit.intercept_edf;
  for (const auto& t : fit.terms) {
    EXPECT_GE(t.edf, -1e-9) << t.var;
    EXPECT_LE(t.edf, static_cast<double>(t.width) + 1e-9) << t.var;
    sum += t.edf;
  }
  EXPECT_NEAR(sum, fit.edf_total, 1e-8);
  EXPECT_GE(fit.rss, 0.0);
  EXPECT_GT(fit.sigma2_hat, 0.0);
  const double scale = fit.Vb.cwiseAbs().maxCoeff();
  EXPECT_LE((fit.Vb - fit.Vb.transpose()).cwiseAbs().maxCoeff(), 1e-8 * scale);
  Eigen::SelfAdjointEigenSolver<Matrix> es(fit.Vb);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * scale);
  const double n = static_cast<double>(fit.n);
  EXPECT_NEAR(fit.aic, n * std::log(2 * std::numbers::pi * fit.rss / n) + n + 2 * (fit.edf_total + 1), 1e-12);
}

}  // namespace

TEST(RandomBlock, Examples) {
  const std::vector<std::string> abc{"a", "b", "a"};
  const auto rb = build_random_block(abc, "g");
  EXPECT_EQ(rb.levels, (std::vector<std::string>{"a", "b"}));
  Matrix want(3, 2);
  want << 1, 0, 0, 1, 1, 0;
  EXPECT_EQ(rb.Z, want);
  EXPECT_EQ(rb.penalty, Matrix::Identity(2, 2));

  const std::vector<std::string> one{"x", "x", "x", "x"};
  const auto single = build_random_block(one, "g");
  EXPECT_EQ(single.Z, Matrix::Ones(4, 1));
  EXPECT_EQ(single.penalty, Matrix::Identity(1, 1));
}

TEST(RandomBlock, SevenLevelsFullScale) {
  std::mt19937_64 rng(157);
  std::vector<std::string> labels(45886);
  for (auto& l : labels) l = kPairs[rng() % kPairs.size()];
  const auto rb = build_random_block(labels, "langs");
  EXPECT_EQ(rb.levels.size(), 7u);
  for (Eigen::Index i = 0; i < rb.Z.rows(); ++i) {
    int ones = 0;
    double sum = 0.0;
    for (Eigen::Index j = 0; j < rb.Z.cols(); ++j) {
      sum += rb.Z(i, j);
      ones += rb.Z(i, j) == 1.0;
    }
    ASSERT_EQ(sum, 1.0);
    ASSERT_EQ(ones, 1);
  }
  // level order is first appearance
  std::vector<std::string> seen;
  for (const auto& l : labels) {
    if (std::find(seen.begin(), seen.end(), l) == seen.end()) seen.push_back(l);
  }
  EXPECT_EQ(rb.levels, seen);
}

TEST(FitGam, InterceptOnlyClosedForm) {
  MetricFrame f;
  f.add_column("y", {1, 2, 3, 4});
  const auto fit = fit_gam(f, parse_formula("y ~ 1"));
  const double rss = 1.5 * 1.5 + 0.5 * 0.5 + 0.5 * 0.5 + 1.5 * 1.5;
  const double want = 4 * std::log(2 * std::numbers::pi * rss / 4) + 4 + 2 * (1 + 1);
  EXPECT_NEAR(fit.rss, rss, 1e-12);
  EXPECT_NEAR(fit.edf_total, 1.0, 1e-12);
  EXPECT_NEAR(fit.aic, want, 1e-9);
  EXPECT_NEAR(fit.beta(0), 2.5, 1e-12);
}

TEST(FitGam, SingleLevelRandomTermEqualsInterceptOnly) {
  MetricFrame f = sine_frame(163, 80);
  f.add_factor("g", std::vector<std::string>(80, "only"));
  const auto a = fit_gam(f, parse_formula("y ~ re(g)"));
  const auto b = fit_gam(f, parse_formula("y ~ 1"));
  EXPECT_NEAR(a.aic, b.aic, 1e-8);
  EXPECT_NEAR(a.edf_total, 1.0, 1e-8);
  for (Eigen::Index i = 0; i < a.fitted.size(); ++i) EXPECT_NEAR(a.fitted(i), b.fitted(i), 1e-8);
  EXPECT_FALSE(a.diagnostics.warnings.empty());
}

TEST(FitGam, BaseFormulaInvariants) {
  const auto f = base_frame(167, 500);
  const auto fit = fit_gam(f, parse_formula(kBase));
  expect_fit_invariants(fit);
  EXPECT_EQ(fit.terms.size(), 6u);
  EXPECT_EQ(fit.term("langs").levels.size(), 4u);
  EXPECT_EQ(fit.n, 500u);
  EXPECT_EQ(fit.edf_per_term().size(), 6u);
  EXPECT_EQ(fit.lambda().size(), 6u);
}

TEST(FitGam, PermutationInvariance) {
  const auto f = base_frame(173, 500);
  std::vector<std::size_t> perm(500);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(5);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto g = f.select_rows(perm);
  const auto formula = parse_formula(kBase);
  const auto a = fit_gam(f, formula);
  const auto b = fit_gam(g, formula);
  EXPECT_NEAR(a.aic, b.aic, 1e-9);
  ASSERT_EQ(a.beta.size(), b.beta.size());
  for (Eigen::Index i = 0; i < a.beta.size(); ++i) EXPECT_NEAR(a.beta(i), b.beta(i), 1e-9);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    EXPECT_NEAR(b.fitted(static_cast<Eigen::Index>(i)), a.fitted(static_cast<Eigen::Index>(perm[i])), 1e-9);
  }
}

TEST(FitGam, VariableNotFound) {
  const auto f = sine_frame(179, 50);
  try {
    fit_gam(f, parse_formula("y ~ s(missing)"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::VariableNotFound);
  }
}

TEST(FitGam, FixedLambdaAndShrinkage) {
  MetricFrame f = sine_frame(181, 120);
  std::vector<std::string> g(120);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = "L" + std::to_string(i % 5);
  f.add_factor("g", g);
  GamOptions opt;
  opt.fixed_lambda = std::vector<double>{1.0, 1e8};
  const auto fit = fit_gam(f, parse_formula("y ~ s(x) + re(g)"), opt);
  const auto& t = fit.term("g");
  EXPECT_LE(fit.beta.segment(t.offset, t.width).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(*t.lambda, 1e8);
  expect_fit_invariants(fit);
}

TEST(FitGam, LinearTermIsUnpenalized) {
  std::mt19937_64 rng(191);
  const auto x = testsupport::uniform(rng, 60);
  const auto e = testsupport::normal(rng, 60, 0.01);
  std::vector<double> y(60);
  for (std::size_t i = 0; i < 60; ++i) y[i] = 1.0 + 2.0 * x[i] + e[i];
  MetricFrame f;
  f.add_column("y", y);
  f.add_column("x", x);
  const auto fit = fit_gam(f, parse_formula("y ~ x"));
  Matrix X(60, 2);
  X << Vector::Ones(60), testsupport::to_eigen(x);
  const auto ols = oracle::penalized_normal_equations(X, testsupport::to_eigen(y), Matrix::Zero(2, 2));
  EXPECT_NEAR(fit.beta(0), ols.beta(0), 1e-10);
  EXPECT_NEAR(fit.beta(1), ols.beta(1), 1e-10);
  EXPECT_NEAR(fit.edf_total, 2.0, 1e-10);
  EXPECT_FALSE(fit.term("x").lambda);
}

TEST(DeltaAic, Examples) {
  const auto f = sine_frame(193, 500);
  const auto full = fit_gam(f, parse_formula("y ~ s(x)"));
  EXPECT_EQ(delta_aic(full, full), 0.0);
  const auto reduced = fit_gam(f, parse_formula("y ~ 1"));
  EXPECT_GT(delta_aic(reduced, full), 0.0);

  const auto small = fit_gam(sine_frame(193, 400), parse_formula("y ~ 1"));
  EXPECT_THROW(delta_aic(small, full), Error);
  try {
    delta_aic(small, full);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IncomparableModels);
  }
  MetricFrame g = f;
  g.add_alias("w", "z");
  const auto other = fit_gam(g, parse_formula("w ~ 1"));
  EXPECT_THROW(delta_aic(other, full), Error);
  const auto extra = fit_gam(f, parse_formula("y ~ s(z)"));
  EXPECT_THROW(delta_aic(extra, full), Error);
}

TEST(PartialEffectTest, CurveShapeAndCentering) {
  const auto f = sine_frame(197, 300);
  const auto fit = fit_gam(f, parse_formula("y ~ s(x) + s(z)"));
  const auto pe = partial_effect(fit, "x");
  ASSERT_EQ(pe.grid_x.size(), 200u);
  EXPECT_EQ(pe.effect.size(), 200u);
  EXPECT_EQ(pe.se.size(), 200u);
  const auto& x = f.column("x");
  EXPECT_EQ(pe.grid_x.front(), *std::min_element(x.begin(), x.end()));
  EXPECT_EQ(pe.grid_x.back(), *std::max_element(x.begin(), x.end()));
  for (std::size_t i = 1; i < pe.grid_x.size(); ++i) EXPECT_LT(pe.grid_x[i - 1], pe.grid_x[i]);
  for (double s : pe.se) EXPECT_GE(s, 0.0);
  const auto c = smooth_contribution(fit, "x", x);
  EXPECT_LE(std::abs(oracle::mean(c)), 1e-8);
  // sine recovered within a few noise SDs across the grid (effect is centered)
  const double offset = oracle::mean([&] {
    std::vector<double> s;
    for (double v : x) s.push_back(std::sin(2 * std::numbers::pi * v));
    return s;
  }());
  for (std::size_t i = 0; i < pe.grid_x.size(); i += 10) {
    EXPECT_NEAR(pe.effect[i], std::sin(2 * std::numbers::pi * pe.grid_x[i]) - offset, 0.1);
  }
  EXPECT_LT(pe.p_value, 1e-6);
  EXPECT_EQ(partial_effect(fit, "x", 17).grid_x.size(), 17u);
}

TEST(PartialEffectTest, ZeroCoefficientsGiveUnitPValue) {
  const auto f = sine_frame(199, 100);
  auto fit = fit_gam(f, parse_formula("y ~ s(x)"));
  const auto& t = fit.term("x");
  fit.beta.segment(t.offset, t.width).setZero();
  const auto pe = partial_effect(fit, "x");
  EXPECT_EQ(pe.wald_statistic, 0.0);
  EXPECT_EQ(pe.p_value, 1.0);
}

TEST(PartialEffectTest, SignalAndNoise) {
  std::mt19937_64 rng(211);
  const std::size_t n = 500;
  const auto x = testsupport::uniform(rng, n, -1.0, 1.0);
  const auto z = testsupport::uniform(rng, n, -1.0, 1.0);
  const auto e = testsupport::normal(rng, n, 0.01);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 3 * x[i] * x[i] + e[i];
  MetricFrame f;
  f.add_column("y", y);
  f.add_column("x", x);
  f.add_column("z", z);
  const auto fit = fit_gam(f, parse_formula("y ~ s(x) + s(z)"));
  EXPECT_LT(partial_effect(fit, "x").p_value, 1e-6);
  EXPECT_GE(partial_effect(fit, "z").wald_df, 1);
}

TEST(PartialEffectTest, Errors) {
  MetricFrame f = sine_frame(223, 60);
  f.add_factor("g", std::vector<std::string>(60, "a"));
  const auto fit = fit_gam(f, parse_formula("y ~ s(x) + re(g) + z"));
  auto code = [&](std::string_view term) {
    try {
      partial_effect(fit, term);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  EXPECT_EQ(code("nope"), Errc::TermNotFound);
  EXPECT_EQ(code("g"), Errc::TermNotSmooth);
  EXPECT_EQ(code("z"), Errc::TermNotSmooth);
}

TEST(Predict, TrainingDataAndDecomposition) {
  const auto f = base_frame(227, 400);
  const auto fit = fit_gam(f, parse_formula(kBase));
  const auto p = predict(fit, f);
  std::vector<double> sum(f.n_rows(), fit.beta(0));
  for (const auto& s : fit.formula.smooth_terms) {
    const auto c = smooth_contribution(fit, s.var, f.column(s.var));
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += c[i];
  }
  for (const auto& g : fit.formula.random_terms) {
    const auto& t = fit.term(g);
    for (std::size_t i = 0; i < sum.size(); ++i) {
      std::string label = f.find_factor(g) ? (*f.find_factor(g))[i] : textio::format_shortest(f.column(g)[i]);
      const auto at = std::find(t.levels.begin(), t.levels.end(), label) - t.levels.begin();
      sum[i] += fit.beta(t.offset + at);
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(p[i], fit.fitted(static_cast<Eigen::Index>(i)), 1e-10);
    EXPECT_NEAR(sum[i], fit.fitted(static_cast<Eigen::Index>(i)), 1e-8);
  }
}

TEST(Predict, HoldoutMatchesManualBasisEvaluation) {
  const auto train = sine_frame(229, 300);
  const auto fit = fit_gam(train, parse_formula("y ~ s(x, k=8) + s(z)"));
  std::mt19937_64 rng(233);
  MetricFrame holdout;
  const auto& tx = fit.term("x").basis;
  const auto& tz = fit.term("z").basis;
  const auto hx = testsupport::uniform(rng, 10, tx.x_min, tx.x_max);
  const auto hz = testsupport::uniform(rng, 10, tz.x_min, tz.x_max);
  holdout.add_column("x", hx);
  holdout.add_column("z", hz);
  const auto p = predict(fit, holdout);
  for (std::size_t i = 0; i < 10; ++i) {
    double want = fit.beta(0);
    for (const auto* name : {"x", "z"}) {
      const auto& t = fit.term(name);
      const std::vector<double> knots(t.basis.knots.data(), t.basis.knots.data() + t.basis.knots.size());
      const double v = std::string(name) == "x" ? hx[i] : hz[i];
      Vector raw(t.basis.k);
      for (int j = 0; j < t.basis.k; ++j) raw(j) = oracle::bspline(knots, j, t.basis.degree, v);
      want += raw.dot(t.basis.constraint * fit.beta.segment(t.offset, t.width));
    }
    EXPECT_NEAR(p[i], want, 1e-8);
  }
}

TEST(Predict, Errors) {
  MetricFrame f = sine_frame(239, 80);
  std::vector<std::string> g(80);
  for (std::size_t i = 0; i < 80; ++i) g[i] = i % 2 ? "en-de" : "ro-en";
  f.add_factor("langs", g);
  const auto fit = fit_gam(f, parse_formula("y ~ s(x) + re(langs)"));
  MetricFrame unseen;
  unseen.add_column("x", {0.5});
  unseen.add_factor("langs", {"si-en"});
  try {
    predict(fit, unseen);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnseenFactorLevel);
    EXPECT_NE(std::string(e.what()).find("si-en"), std::string::npos);
  }
  const auto& b = fit.term("x").basis;
  const double range = b.x_max - b.x_min;
  MetricFrame near;
  near.add_column("x", {b.x_max + 0.05 * range, b.x_min - 0.09 * range});
  near.add_factor("langs", {"en-de", "ro-en"});
  EXPECT_NO_THROW(predict(fit, near));
  MetricFrame far;
  far.add_column("x", {b.x_max + 0.2 * range});
  far.add_factor("langs", {"en-de"});
  EXPECT_THROW(predict(fit, far), Error);
  MetricFrame missing;
  missing.add_column("x", {0.5});
  EXPECT_THROW(predict(fit, missing), Error);
}

TEST(FitGamJson, ArchiveFields) {
  MetricFrame f = sine_frame(241, 100);
  const auto fit = fit_gam(f, parse_formula("y ~ s(x, k=6) + z"));
  const auto doc = nlohmann::json::parse(to_json(fit));
  EXPECT_EQ(doc["formula"], "y ~ s(x, k=6) + z");
  EXPECT_EQ(doc["n"], 100);
  EXPECT_EQ(doc["aic"].get<double>(), fit.aic);
  EXPECT_EQ(doc["beta"].size(), static_cast<std::size_t>(fit.beta.size()));
  EXPECT_EQ(doc["terms"][0]["term"], "x");
  EXPECT_EQ(doc["terms"][0]["lambda"].get<double>(), *fit.term("x").lambda);
  EXPECT_EQ(doc["terms"][1]["kind"], "linear");
  EXPECT_EQ(doc["diagnostics"]["p_values"], "approximate");
  EXPECT_EQ(to_json(fit), to_json(fit_gam(f, parse_formula("y ~ s(x, k=6) + z"))));
}
