#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qegauge/dataset.hpp"

namespace qegauge {

enum class DatasetKind { Mlqepe, Prequel };

/// Everything one analysis run needs. Relative paths are resolved against the
/// directory of the config file.
struct AnalysisConfig {
  DatasetKind kind = DatasetKind::Mlqepe;
  std::map<LangPair, std::filesystem::path> datasets;
  std::map<LangPair, std::filesystem::path> embeddings;
  std::vector<std::pair<std::string, std::string>> models;  // name -> formula text, file order
  std::string response;
  std::filesystem::path out_dir = "qe-gauge-out";
  bool per_pair = false;
  int ngram = 3;
  int grid_size = 200;
  bool svg = true;
  std::optional<std::uint64_t> seed;
  MlqepeColumns mlqepe_columns;
  PrequelColumns prequel_columns;
};

/// Parses the TOML-style document:
///
///   kind = "mlqepe"          # or "prequel"
///   response = "da_mean"     # default per kind
///   out = "results"
///   per_pair = false
///   ngram = 3                # PreQuEL n-gram order used by `ngram_prob`
///   [datasets]    en-de = "data/en-de.tsv"
///   [embeddings]  en-de = "data/en-de.emb"
///   [models]      base = "da_mean ~ s(ml_eval) + ..."
///   [columns]     model_score = "model_scores"
///
/// A missing [models] section selects the default base/m1-m3 (or base/t1-t3) set.
/// Throws Error(Errc::Config) on any validation failure.
AnalysisConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
AnalysisConfig load_config(const std::filesystem::path& path);

/// Variable names formulas may reference (canonical names and their aliases).
std::vector<std::string> analysis_variables(DatasetKind kind);
std::string default_response(DatasetKind kind);
std::vector<std::pair<std::string, std::string>> default_models(DatasetKind kind, const std::string& response);

}  // namespace qegauge
