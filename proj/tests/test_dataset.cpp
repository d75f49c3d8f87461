#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "qegauge/dataset.hpp"
#include "qegauge/error.hpp"
#include "qegauge/stats.hpp"
#include "qegauge/textio.hpp"
#include "support.hpp"

using namespace qegauge;
using testsupport::TempDir;

namespace {

const LangPair kEnDe{"en", "de"};

const char* kHeader = "index\toriginal\ttranslation\tscores\tmean\tz_scores\tz_mean\tmodel_scores\thter\n";

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::Io;
}

}  // namespace

TEST(LangPairTest, ParseAndRender) {
  const auto lp = LangPair::parse("en-de");
  EXPECT_EQ(lp.source, "en");
  EXPECT_EQ(lp.target, "de");
  EXPECT_EQ(lp.str(), "en-de");
  EXPECT_EQ(code_of([] { LangPair::parse("EN-de"); }), Errc::Config);
  EXPECT_EQ(code_of([] { LangPair::parse("ende"); }), Errc::Config);
  EXPECT_EQ(code_of([] { LangPair::parse("-de"); }), Errc::Config);
}

TEST(ParseMlqepe, DerivedFieldsFromScoreList) {
  TempDir dir("mlqepe");
  const auto p = dir.write("d.tsv", std::string(kHeader) +
                                        "0\tHello\tHallo\t[70, 80, 90]\t80\t[0.1, 0.2, 0.3]\t0.2\t-0.5\t0.1\n"
                                        "1\tBye\tTschuess\t[55]\t55\t[-0.4]\t-0.4\t-1.25\t0\n");
  const auto recs = parse_mlqepe(p, kEnDe);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].da_mean, 80.0);
  EXPECT_EQ(recs[0].n_annotators, 3);
  EXPECT_NEAR(recs[0].score_sd, 10.0, 1e-12);
  EXPECT_FALSE(recs[0].sd_degenerate);
  EXPECT_EQ(recs[1].n_annotators, 1);
  EXPECT_EQ(recs[1].score_sd, 0.0);
  EXPECT_TRUE(recs[1].sd_degenerate);
  EXPECT_EQ(recs[1].model_score, -1.25);
  EXPECT_EQ(recs[0].source_text, "Hello");
  EXPECT_EQ(recs[0].lang_pair, kEnDe);
  EXPECT_FALSE(recs[0].similarity);
}

TEST(ParseMlqepe, MissingHterColumn) {
  TempDir dir("mlqepe");
  const auto p = dir.write("d.tsv", "original\ttranslation\tmean\tz_mean\tmodel_scores\nA\tB\t50\t0\t-1\n");
  try {
    parse_mlqepe(p, kEnDe);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingColumn);
    EXPECT_NE(std::string(e.what()).find("MissingColumn(\"hter\")"), std::string::npos);
  }
}

TEST(ParseMlqepe, EmptyFileAndHeaderOnly) {
  TempDir dir("mlqepe");
  EXPECT_EQ(code_of([&] { parse_mlqepe(dir.write("a.tsv", ""), kEnDe); }), Errc::EmptyFile);
  EXPECT_EQ(code_of([&] { parse_mlqepe(dir.write("b.tsv", kHeader), kEnDe); }), Errc::EmptyFile);
}

TEST(ParseMlqepe, InvariantViolationsAreRejected) {
  TempDir dir("mlqepe");
  const std::string h = kHeader;
  // mean disagrees with the listed scores
  EXPECT_EQ(code_of([&] { parse_mlqepe(dir.write("a.tsv", h + "0\ta\tb\t[70, 80]\t80\t[]\t0\t-1\t0.2\n"), kEnDe); }),
            Errc::MalformedRow);
  // score outside [0, 100]
  EXPECT_EQ(code_of([&] { parse_mlqepe(dir.write("b.tsv", h + "0\ta\tb\t[170]\t170\t[]\t0\t-1\t0.2\n"), kEnDe); }),
            Errc::MalformedRow);
  // negative hter
  EXPECT_EQ(code_of([&] { parse_mlqepe(dir.write("c.tsv", h + "0\ta\tb\t[70]\t70\t[]\t0\t-1\t-0.2\n"), kEnDe); }),
            Errc::MalformedRow);
  // wrong field count, reported with its line number
  try {
    parse_mlqepe(dir.write("d.tsv", h + "0\ta\tb\t[70]\t70\t[]\t0\t-1\t0.2\n1\ta\tb\n"), kEnDe);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedRow);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  // non-numeric cell
  EXPECT_EQ(code_of([&] { parse_mlqepe(dir.write("e.tsv", h + "0\ta\tb\t[70]\t70\t[]\tzz\t-1\t0.2\n"), kEnDe); }),
            Errc::MalformedRow);
  // ids must increase
  EXPECT_EQ(code_of([&] {
              parse_mlqepe(dir.write("f.tsv", h + "3\ta\tb\t[70]\t70\t[]\t0\t-1\t0.2\n2\ta\tb\t[70]\t70\t[]\t0\t-1\t0.2\n"),
                           kEnDe);
            }),
            Errc::MalformedRow);
}

TEST(ParseMlqepe, HterAboveOneIsPreserved) {
  TempDir dir("mlqepe");
  const auto recs = parse_mlqepe(dir.write("d.tsv", std::string(kHeader) + "0\ta\tb\t[70]\t70\t[]\t0\t-1\t1.75\n"), kEnDe);
  EXPECT_EQ(recs[0].hter, 1.75);
}

TEST(ParseMlqepe, RowOrderIdsWithoutIdColumn) {
  TempDir dir("mlqepe");
  std::string text = "original\ttranslation\tmean\tz_mean\tmodel_scores\thter\n";
  for (int i = 0; i < 5; ++i) text += "s\tt\t" + std::to_string(50 + i) + "\t0\t-1\t0.1\n";
  const auto recs = parse_mlqepe(dir.write("d.tsv", text), kEnDe);
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i].segment_id, i);
}

TEST(ParseMlqepe, ZMeanStandardizedWhenColumnAbsent) {
  TempDir dir("mlqepe");
  std::string text = "original\ttranslation\tmean\tmodel_scores\thter\n";
  const std::vector<double> means{10, 20, 40, 70};
  for (double m : means) text += "s\tt\t" + textio::format_shortest(m) + "\t-1\t0.1\n";
  const auto recs = parse_mlqepe(dir.write("d.tsv", text), kEnDe);
  const double mu = oracle::mean(means);
  const double sd = oracle::sd(means);
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_NEAR(recs[i].da_z_mean, (means[i] - mu) / sd, 1e-12);
}

TEST(ParseMlqepe, ColumnOverrides) {
  TempDir dir("mlqepe");
  MlqepeColumns cols;
  cols.set("model_score", "ml_eval");
  cols.set("mean", "human_mean");
  EXPECT_THROW(cols.set("bogus", "x"), Error);
  const auto recs = parse_mlqepe(
      dir.write("d.tsv", "original\ttranslation\thuman_mean\tz_mean\tml_eval\thter\na\tb\t60\t0.3\t-0.7\t0.2\n"), kEnDe,
      cols);
  EXPECT_EQ(recs[0].model_score, -0.7);
  EXPECT_EQ(recs[0].da_mean, 60.0);
}

TEST(ParseMlqepe, RoundTripThroughCanonicalTsv) {
  TempDir dir("mlqepe");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> score(0.0, 100.0);
  std::uniform_real_distribution<double> unit(0.0, 1.3);
  std::string text = kHeader;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> s(1 + rng() % 4);
    for (auto& v : s) v = std::round(score(rng) * 8) / 8;
    double m = 0;
    for (double v : s) m += v;
    m /= static_cast<double>(s.size());
    text += std::to_string(i * 2) + "\tsrc " + std::to_string(i) + "\ttgt\t" + textio::format_list(s) + "\t" +
            textio::format_g17(m) + "\t[0.5]\t" + textio::format_g17(unit(rng) - 0.6) + "\t" +
            textio::format_g17(-unit(rng)) + "\t" + textio::format_g17(unit(rng)) + "\n";
  }
  auto recs = parse_mlqepe(dir.write("a.tsv", text), kEnDe);
  recs[3].similarity = 0.25;
  const auto again = parse_mlqepe(dir.write("b.tsv", to_tsv(recs)), kEnDe);
  ASSERT_EQ(again.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& a = recs[i];
    const auto& b = again[i];
    EXPECT_EQ(a.segment_id, b.segment_id);
    EXPECT_EQ(a.source_text, b.source_text);
    EXPECT_EQ(a.target_text, b.target_text);
    EXPECT_EQ(a.da_scores, b.da_scores);
    EXPECT_EQ(a.da_z_scores, b.da_z_scores);
    EXPECT_LE(testsupport::rel_err(a.da_mean, b.da_mean), 1e-12);
    EXPECT_LE(testsupport::rel_err(a.da_z_mean, b.da_z_mean), 1e-12);
    EXPECT_LE(testsupport::rel_err(a.model_score, b.model_score), 1e-12);
    EXPECT_LE(testsupport::rel_err(a.hter, b.hter), 1e-12);
    EXPECT_EQ(a.n_annotators, b.n_annotators);
    EXPECT_EQ(a.score_sd, b.score_sd);
    EXPECT_EQ(a.similarity, b.similarity);
    // stored mean and SD agree with the score list
    EXPECT_NEAR(oracle::mean(b.da_scores), b.da_mean, 1e-6);
    EXPECT_NEAR(b.da_scores.size() > 1 ? oracle::sd(b.da_scores) : 0.0, b.score_sd, 1e-6);
    if (i > 0) EXPECT_LT(again[i - 1].segment_id, b.segment_id);
  }
}

namespace {

std::string prequel_text(int rows, int levels) {
  std::string text = "original\ttranslation\tprob_1\tprob_2\tprob_3\tprob_4\tprob_5\tlm_score\thter\tz_mean\n";
  for (int i = 0; i < rows; ++i) {
    text += "s\tt\t-1." + std::to_string(i) + "\t-2\t-3." + std::to_string(i) + "\t-4\t-5\tL" +
            std::to_string(i % levels) + "\t0.3\t0.1\n";
  }
  return text;
}

}  // namespace

TEST(ParsePrequel, NgramProbabilitiesRetrievable) {
  TempDir dir("prequel");
  const auto recs = parse_prequel(dir.write("p.tsv", prequel_text(4, 4)), kEnDe);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[2].ngram_sent_prob.at(3), -3.2);
  EXPECT_EQ(recs[2].ngram_sent_prob.size(), 5u);
  EXPECT_EQ(recs[1].lm_score, "L1");
}

TEST(ParsePrequel, FiveLevelsAreTooMany) {
  TempDir dir("prequel");
  EXPECT_EQ(code_of([&] { parse_prequel(dir.write("p.tsv", prequel_text(10, 5)), kEnDe); }), Errc::TooManyLevels);
}

TEST(ParsePrequel, EmptyFile) {
  TempDir dir("prequel");
  EXPECT_EQ(code_of([&] { parse_prequel(dir.write("p.tsv", ""), kEnDe); }), Errc::EmptyFile);
}

TEST(ParsePrequel, SubsetOfNgramColumns) {
  TempDir dir("prequel");
  const auto recs = parse_prequel(
      dir.write("p.tsv", "original\ttranslation\tprob_3\tlm_score\thter\tz_mean\na\tb\t-3\tx\t0.1\t0.2\n"), kEnDe);
  EXPECT_EQ(recs[0].ngram_sent_prob.size(), 1u);
  EXPECT_EQ(recs[0].ngram_sent_prob.at(3), -3.0);
  EXPECT_EQ(code_of([&] {
              parse_prequel(dir.write("q.tsv", "original\ttranslation\tlm_score\thter\tz_mean\na\tb\tx\t0.1\t0.2\n"), kEnDe);
            }),
            Errc::MissingColumn);
}

TEST(ParsePrequel, RoundTrip) {
  TempDir dir("prequel");
  auto recs = parse_prequel(dir.write("p.tsv", prequel_text(12, 3)), kEnDe);
  recs[0].similarity = -0.5;
  const auto again = parse_prequel(dir.write("q.tsv", to_tsv(recs)), kEnDe);
  ASSERT_EQ(again.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].ngram_sent_prob, again[i].ngram_sent_prob);
    EXPECT_EQ(recs[i].lm_score, again[i].lm_score);
    EXPECT_EQ(recs[i].hter, again[i].hter);
    EXPECT_EQ(recs[i].da_z_mean, again[i].da_z_mean);
    EXPECT_EQ(recs[i].similarity, again[i].similarity);
    EXPECT_EQ(recs[i].segment_id, again[i].segment_id);
  }
}
