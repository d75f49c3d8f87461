#include "qegauge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "qegauge/error.hpp"
#include "qegauge/stats.hpp"
#include "qegauge/textio.hpp"

namespace qegauge {

namespace {

bool lower_ascii(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

struct TsvTable {
  std::string file;
  std::vector<std::string> header;
  // (1-based line number, cells)
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;

  std::optional<std::size_t> index_of(std::string_view name) const {
    if (name.empty()) return std::nullopt;
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }

  std::size_t require(std::string_view name) const {
    if (auto i = index_of(name)) return *i;
    throw Error(Errc::MissingColumn, "MissingColumn(\"" + std::string(name) + "\") in " + file);
  }
};

TsvTable read_table(const std::filesystem::path& path) {
  TsvTable t;
  t.file = path.string();
  auto lines = textio::read_lines(path);
  while (!lines.empty() && textio::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(Errc::EmptyFile, "EmptyFile: " + t.file);
  for (auto cell : textio::split(lines.front(), '\t')) t.header.emplace_back(textio::trim(cell));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cells = textio::split(lines[i], '\t');
    if (cells.size() != t.header.size()) {
      throw Error(Errc::MalformedRow, "MalformedRow(line " + std::to_string(i + 1) + ": expected " +
                                          std::to_string(t.header.size()) + " fields, found " +
                                          std::to_string(cells.size()) + ") in " + t.file);
    }
    t.rows.emplace_back(i + 1, std::vector<std::string>(cells.begin(), cells.end()));
  }
  if (t.rows.empty()) throw Error(Errc::EmptyFile, "EmptyFile: no data rows in " + t.file);
  return t;
}

[[noreturn]] void malformed(const TsvTable& t, std::size_t line, const std::string& cause) {
  throw Error(Errc::MalformedRow, "MalformedRow(line " + std::to_string(line) + ": " + cause + ") in " + t.file);
}

double real_cell(const TsvTable& t, std::size_t line, const std::vector<std::string>& cells, std::size_t col) {
  auto v = textio::parse_double(cells[col]);
  if (!v) malformed(t, line, "column '" + t.header[col] + "' is not a finite real: '" + cells[col] + "'");
  return *v;
}

std::optional<double> similarity_cell(const TsvTable& t, std::size_t line, const std::vector<std::string>& cells,
                                      std::optional<std::size_t> col) {
  if (!col) return std::nullopt;
  const auto cell = textio::trim(cells[*col]);
  if (cell.empty() || cell == "NA" || cell == "nan") return std::nullopt;
  const double v = real_cell(t, line, cells, *col);
  if (v < -1.0 || v > 1.0) malformed(t, line, "similarity outside [-1, 1]");
  return v;
}

// Segment ids come from the id column when configured and present, else row order.
class SegmentIds {
 public:
  SegmentIds(const TsvTable& t, std::string_view id_name) : t_(t), col_(t.index_of(id_name)) {}

  std::uint64_t next(std::size_t line, const std::vector<std::string>& cells) {
    std::uint64_t id = row_++;
    if (col_) {
      auto v = textio::parse_int(cells[*col_]);
      if (!v || *v < 0) malformed(t_, line, "segment id is not a non-negative integer");
      id = static_cast<std::uint64_t>(*v);
      if (last_ && id <= *last_) malformed(t_, line, "segment ids must be strictly increasing");
    }
    last_ = id;
    return id;
  }

 private:
  const TsvTable& t_;
  std::optional<std::size_t> col_;
  std::uint64_t row_ = 0;
  std::optional<std::uint64_t> last_;
};

void check_text(const std::string& s) {
  if (s.find_first_of("\t\n\r") != std::string::npos) {
    throw Error(Errc::Io, "text cell contains a tab or newline and cannot be written as TSV");
  }
}

}  // namespace

LangPair LangPair::parse(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) throw Error(Errc::Config, "language pair '" + std::string(text) + "' is not src-tgt");
  LangPair lp{std::string(text.substr(0, dash)), std::string(text.substr(dash + 1))};
  if (!lower_ascii(lp.source) || !lower_ascii(lp.target)) {
    throw Error(Errc::Config, "language pair '" + std::string(text) + "' must use lowercase ASCII codes");
  }
  return lp;
}

void MlqepeColumns::set(std::string_view key, std::string value) {
  if (key == "id") id = std::move(value);
  else if (key == "original") original = std::move(value);
  else if (key == "translation") translation = std::move(value);
  else if (key == "scores") scores = std::move(value);
  else if (key == "mean") mean = std::move(value);
  else if (key == "z_scores") z_scores = std::move(value);
  else if (key == "z_mean") z_mean = std::move(value);
  else if (key == "model_score") model_score = std::move(value);
  else if (key == "hter") hter = std::move(value);
  else if (key == "similarity") similarity = std::move(value);
  else throw Error(Errc::Config, "unknown MLQE-PE column key '" + std::string(key) + "'");
}

void PrequelColumns::set(std::string_view key, std::string value) {
  if (key == "id") id = std::move(value);
  else if (key == "original") original = std::move(value);
  else if (key == "translation") translation = std::move(value);
  else if (key == "lm_score") lm_score = std::move(value);
  else if (key == "hter") hter = std::move(value);
  else if (key == "z_mean") z_mean = std::move(value);
  else if (key == "similarity") similarity = std::move(value);
  else if (key.size() == 6 && key.substr(0, 5) == "prob_" && key[5] >= '1' && key[5] <= '5') {
    ngram_prob[key[5] - '0'] = std::move(value);
  } else {
    throw Error(Errc::Config, "unknown PreQuEL column key '" + std::string(key) + "'");
  }
}

std::vector<QERecord> parse_mlqepe(const std::filesystem::path& path, const LangPair& lang_pair,
                                   const MlqepeColumns& columns) {
  const auto t = read_table(path);
  const auto c_orig = t.require(columns.original);
  const auto c_trans = t.require(columns.translation);
  const auto c_mean = t.require(columns.mean);
  const auto c_model = t.require(columns.model_score);
  const auto c_hter = t.require(columns.hter);
  const auto c_scores = t.index_of(columns.scores);
  const auto c_zscores = t.index_of(columns.z_scores);
  const auto c_zmean = t.index_of(columns.z_mean);
  const auto c_sim = t.index_of(columns.similarity);

  SegmentIds ids(t, columns.id);
  std::vector<QERecord> out;
  out.reserve(t.rows.size());
  for (const auto& [line, cells] : t.rows) {
    QERecord r;
    r.segment_id = ids.next(line, cells);
    r.lang_pair = lang_pair;
    r.source_text = cells[c_orig];
    r.target_text = cells[c_trans];
    r.da_mean = real_cell(t, line, cells, c_mean);
    r.model_score = real_cell(t, line, cells, c_model);
    r.hter = real_cell(t, line, cells, c_hter);
    if (r.hter < 0.0) malformed(t, line, "hter is negative");

    if (c_scores) {
      auto scores = textio::parse_list(cells[*c_scores]);
      if (!scores) malformed(t, line, "scores cell is not a bracketed list");
      r.da_scores = std::move(*scores);
    }
    if (!r.da_scores.empty()) {
      for (double s : r.da_scores) {
        if (s < 0.0 || s > 100.0) malformed(t, line, "DA score outside [0, 100]");
      }
      const double m = detail::mean(std::span<const double>(r.da_scores));
      if (std::abs(m - r.da_mean) > 1e-6) malformed(t, line, "mean does not match the listed scores");
      r.n_annotators = static_cast<int>(r.da_scores.size());
      r.score_sd = sample_sd(r.da_scores);
    }
    r.sd_degenerate = r.n_annotators == 1;

    if (c_zscores) {
      auto z = textio::parse_list(cells[*c_zscores]);
      if (!z) malformed(t, line, "z_scores cell is not a bracketed list");
      r.da_z_scores = std::move(*z);
    }
    if (c_zmean) r.da_z_mean = real_cell(t, line, cells, *c_zmean);
    r.similarity = similarity_cell(t, line, cells, c_sim);
    out.push_back(std::move(r));
  }

  if (!c_zmean) {
    std::vector<double> means;
    means.reserve(out.size());
    for (const auto& r : out) means.push_back(r.da_mean);
    const auto z = zstandardize(means);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].da_z_mean = z[i];
  }
  return out;
}

std::vector<PreQuelRecord> parse_prequel(const std::filesystem::path& path, const LangPair& lang_pair,
                                         const PrequelColumns& columns) {
  const auto t = read_table(path);
  const auto c_orig = t.require(columns.original);
  const auto c_trans = t.require(columns.translation);
  const auto c_lm = t.require(columns.lm_score);
  const auto c_hter = t.require(columns.hter);
  const auto c_zmean = t.require(columns.z_mean);
  const auto c_sim = t.index_of(columns.similarity);
  std::map<int, std::size_t> c_prob;
  for (const auto& [n, name] : columns.ngram_prob) {
    if (auto i = t.index_of(name)) c_prob[n] = *i;
  }
  if (c_prob.empty()) {
    const auto& want = columns.ngram_prob.count(3) ? columns.ngram_prob.at(3) : std::string("prob_3");
    throw Error(Errc::MissingColumn, "MissingColumn(\"" + want + "\") in " + t.file + ": no n-gram probability columns");
  }

  SegmentIds ids(t, columns.id);
  std::set<std::string> levels;
  std::vector<PreQuelRecord> out;
  out.reserve(t.rows.size());
  for (const auto& [line, cells] : t.rows) {
    PreQuelRecord r;
    r.segment_id = ids.next(line, cells);
    r.lang_pair = lang_pair;
    r.source_text = cells[c_orig];
    r.target_text = cells[c_trans];
    for (const auto& [n, col] : c_prob) r.ngram_sent_prob[n] = real_cell(t, line, cells, col);
    r.lm_score = std::string(textio::trim(cells[c_lm]));
    if (r.lm_score.empty()) malformed(t, line, "empty lm_score");
    levels.insert(r.lm_score);
    r.hter = real_cell(t, line, cells, c_hter);
    if (r.hter < 0.0) malformed(t, line, "hter is negative");
    r.da_z_mean = real_cell(t, line, cells, c_zmean);
    r.similarity = similarity_cell(t, line, cells, c_sim);
    out.push_back(std::move(r));
  }
  if (levels.size() > kMaxLmScoreLevels) {
    throw Error(Errc::TooManyLevels, "TooManyLevels(lm_score): " + std::to_string(levels.size()) +
                                         " distinct values in " + t.file + ", at most 4 allowed");
  }
  return out;
}

std::string to_tsv(const std::vector<QERecord>& records, const MlqepeColumns& columns) {
  const bool with_sim = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.similarity.has_value(); });
  std::ostringstream out;
  out << columns.id << '\t' << columns.original << '\t' << columns.translation << '\t' << columns.scores << '\t'
      << columns.mean << '\t' << columns.z_scores << '\t' << columns.z_mean << '\t' << columns.model_score << '\t'
      << columns.hter;
  if (with_sim) out << '\t' << columns.similarity;
  out << '\n';
  for (const auto& r : records) {
    check_text(r.source_text);
    check_text(r.target_text);
    out << r.segment_id << '\t' << r.source_text << '\t' << r.target_text << '\t' << textio::format_list(r.da_scores)
        << '\t' << textio::format_g17(r.da_mean) << '\t' << textio::format_list(r.da_z_scores) << '\t'
        << textio::format_g17(r.da_z_mean) << '\t' << textio::format_g17(r.model_score) << '\t'
        << textio::format_g17(r.hter);
    if (with_sim) out << '\t' << (r.similarity ? textio::format_g17(*r.similarity) : std::string("NA"));
    out << '\n';
  }
  return out.str();
}

std::string to_tsv(const std::vector<PreQuelRecord>& records, const PrequelColumns& columns) {
  const bool with_sim = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.similarity.has_value(); });
  std::set<int> grams;
  for (const auto& r : records) {
    for (const auto& [n, v] : r.ngram_sent_prob) grams.insert(n);
  }
  std::ostringstream out;
  out << columns.id << '\t' << columns.original << '\t' << columns.translation;
  for (int n : grams) out << '\t' << columns.ngram_prob.at(n);
  out << '\t' << columns.lm_score << '\t' << columns.hter << '\t' << columns.z_mean;
  if (with_sim) out << '\t' << columns.similarity;
  out << '\n';
  for (const auto& r : records) {
    check_text(r.source_text);
    check_text(r.target_text);
    out << r.segment_id << '\t' << r.source_text << '\t' << r.target_text;
    for (int n : grams) out << '\t' << textio::format_g17(r.ngram_sent_prob.at(n));
    out << '\t' << r.lm_score << '\t' << textio::format_g17(r.hter) << '\t' << textio::format_g17(r.da_z_mean);
    if (with_sim) out << '\t' << (r.similarity ? textio::format_g17(*r.similarity) : std::string("NA"));
    out << '\n';
  }
  return out.str();
}

}  // namespace qegauge
