#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qegauge {

/// Source/target language codes, rendered "src-tgt".
struct LangPair {
  std::string source;
  std::string target;

  /// Throws Config unless both halves are non-empty lowercase ASCII letters.
  static LangPair parse(std::string_view text);
  std::string str() const { return source + "-" + target; }
  friend bool operator==(const LangPair&, const LangPair&) = default;
  friend auto operator<=>(const LangPair&, const LangPair&) = default;
};

struct QERecord {
  std::uint64_t segment_id = 0;
  LangPair lang_pair;
  std::string source_text;
  std::string target_text;
  std::vector<double> da_scores;
  double da_mean = 0.0;
  std::vector<double> da_z_scores;
  double da_z_mean = 0.0;
  double model_score = 0.0;
  double hter = 0.0;
  int n_annotators = 1;
  double score_sd = 0.0;
  // set when score_sd is 0 only because a single score (or none) was available
  bool sd_degenerate = false;
  std::optional<double> similarity;
};

struct PreQuelRecord {
  std::uint64_t segment_id = 0;
  LangPair lang_pair;
  std::string source_text;
  std::string target_text;
  std::map<int, double> ngram_sent_prob;
  std::string lm_score;
  double hter = 0.0;
  double da_z_mean = 0.0;
  std::optional<double> similarity;
};

/// Header names for MLQE-PE files. Empty optional names disable that column.
struct MlqepeColumns {
  std::string id = "index";              // optional
  std::string original = "original";
  std::string translation = "translation";
  std::string scores = "scores";         // optional
  std::string mean = "mean";
  std::string z_scores = "z_scores";     // optional
  std::string z_mean = "z_mean";         // optional; standardized from mean when absent
  std::string model_score = "model_scores";
  std::string hter = "hter";
  std::string similarity = "similarity"; // optional

  /// Overrides a field by its key (e.g. "model_score"); throws Config on unknown keys.
  void set(std::string_view key, std::string value);
};

struct PrequelColumns {
  std::string id = "index";
  std::string original = "original";
  std::string translation = "translation";
  std::map<int, std::string> ngram_prob = {
      {1, "prob_1"}, {2, "prob_2"}, {3, "prob_3"}, {4, "prob_4"}, {5, "prob_5"}};
  std::string lm_score = "lm_score";
  std::string hter = "hter";
  std::string z_mean = "z_mean";
  std::string similarity = "similarity";

  void set(std::string_view key, std::string value);
};

inline constexpr std::size_t kMaxLmScoreLevels = 4;

std::vector<QERecord> parse_mlqepe(const std::filesystem::path& path, const LangPair& lang_pair,
                                   const MlqepeColumns& columns = {});
std::vector<PreQuelRecord> parse_prequel(const std::filesystem::path& path, const LangPair& lang_pair,
                                         const PrequelColumns& columns = {});

/// Canonical TSV: header in column-map order, reals with 17 significant digits.
/// The similarity column is appended when any record carries a value.
std::string to_tsv(const std::vector<QERecord>& records, const MlqepeColumns& columns = {});
std::string to_tsv(const std::vector<PreQuelRecord>& records, const PrequelColumns& columns = {});

}  // namespace qegauge
