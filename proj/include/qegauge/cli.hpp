#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qegauge/config.hpp"

namespace qegauge::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2, kFitError = 3 };

/// A failure already classified into one of the documented exit codes.
class CommandError : public std::runtime_error {
 public:
  CommandError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Writes <out>/similarity/<pair>.tsv with the similarity column filled.
void cmd_similarity(const AnalysisConfig& config, std::ostream& out, std::ostream& log);
/// Writes <out>/correlation/pooled.{tsv,csv} and, in per-pair mode, <pair>.{tsv,csv}.
void cmd_correlate(const AnalysisConfig& config, std::ostream& out, std::ostream& log);
/// Writes <out>/fit/<model>.json and <out>/fit/delta_aic.tsv (plus per_pair/<pair>/...).
void cmd_fit_compare(const AnalysisConfig& config, std::ostream& out, std::ostream& log);
/// Writes <out>/partials/<model>/<term>.{csv,svg} (plus per_pair/<pair>/...).
void cmd_partials(const AnalysisConfig& config, std::ostream& out, std::ostream& log);

/// `qe-gauge similarity|correlate|fit|partials --config <path> [--out <dir>] [--per-pair] [--seed <u64>]`
/// Errors are reported on `err` as one line: `qe-gauge: error[<config|data|fit>]: <Code>: <message>`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count: QE_GAUGE_THREADS when set to a positive integer, else hardware concurrency.
unsigned worker_count();

}  // namespace qegauge::cli
