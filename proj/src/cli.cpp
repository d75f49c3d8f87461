#include "qegauge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "qegauge/dataset.hpp"
#include "qegauge/embedding.hpp"
#include "qegauge/error.hpp"
#include "qegauge/formula.hpp"
#include "qegauge/gam.hpp"
#include "qegauge/report.hpp"
#include "qegauge/stats.hpp"
#include "qegauge/textio.hpp"

namespace qegauge::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string describe(const Error& e) { return std::string(errc_name(e.code())) + ": " + e.what(); }

[[noreturn]] void data_error(const Error& e) { throw CommandError(kDataError, describe(e)); }

// Analysis columns for every record of every language pair; reals may be NaN
// where a record has no value (e.g. similarity not yet computed).
class RecordTable {
 public:
  void add_real(const std::string& name) { reals_.emplace_back(name, std::vector<double>{}); }
  void add_factor(const std::string& name) { factors_.emplace_back(name, std::vector<std::string>{}); }
  void alias(const std::string& a, const std::string& target) { aliases_[a] = target; }

  std::vector<double>& real(const std::string& name) {
    for (auto& [n, v] : reals_) {
      if (n == name) return v;
    }
    throw Error(Errc::VariableNotFound, name);
  }
  std::vector<std::string>& factor(const std::string& name) {
    for (auto& [n, v] : factors_) {
      if (n == name) return v;
    }
    throw Error(Errc::VariableNotFound, name);
  }
  std::vector<LangPair>& pairs() { return pairs_; }
  const std::vector<LangPair>& pairs() const { return pairs_; }

  std::string canonical(const std::string& name) const {
    auto it = aliases_.find(name);
    return it == aliases_.end() ? name : it->second;
  }

  bool all_missing(const std::string& name) const {
    for (const auto& [n, v] : reals_) {
      if (n == canonical(name)) return std::none_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    }
    return false;
  }

  /// Frame over the given variables, rows restricted to `pair` when set and
  /// dropped listwise on any missing real.
  MetricFrame frame(const std::vector<std::string>& vars, const std::optional<LangPair>& pair) const {
    std::vector<const std::pair<std::string, std::vector<double>>*> need_real;
    std::vector<const std::pair<std::string, std::vector<std::string>>*> need_factor;
    for (const auto& v : vars) {
      const std::string c = canonical(v);
      bool found = false;
      for (const auto& col : reals_) {
        if (col.first == c) {
          if (std::find(need_real.begin(), need_real.end(), &col) == need_real.end()) need_real.push_back(&col);
          found = true;
        }
      }
      for (const auto& col : factors_) {
        if (col.first == c) {
          if (std::find(need_factor.begin(), need_factor.end(), &col) == need_factor.end()) need_factor.push_back(&col);
          found = true;
        }
      }
      if (!found) throw Error(Errc::VariableNotFound, "VariableNotFound(\"" + v + "\")");
      if (all_missing(c)) {
        throw Error(Errc::DegenerateInput, "variable '" + c + "' has no values" +
                                               (c == "similarity" ? "; run `qe-gauge similarity` or configure [embeddings]"
                                                                  : std::string()));
      }
    }

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      if (pair && pairs_[i] != *pair) continue;
      bool ok = true;
      for (const auto* col : need_real) ok = ok && std::isfinite(col->second[i]);
      if (ok) keep.push_back(i);
    }

    MetricFrame f;
    for (const auto* col : need_real) {
      std::vector<double> v;
      v.reserve(keep.size());
      for (auto i : keep) v.push_back(col->second[i]);
      f.add_column(col->first, std::move(v));
    }
    for (const auto* col : need_factor) {
      std::vector<std::string> v;
      v.reserve(keep.size());
      for (auto i : keep) v.push_back(col->second[i]);
      f.add_factor(col->first, std::move(v));
    }
    for (const auto& [a, target] : aliases_) {
      if (f.find(target) || f.find_factor(target)) f.add_alias(a, target);
    }
    return f;
  }

 private:
  std::vector<std::pair<std::string, std::vector<double>>> reals_;
  std::vector<std::pair<std::string, std::vector<std::string>>> factors_;
  std::map<std::string, std::string> aliases_;
  std::vector<LangPair> pairs_;
};

fs::path annotated_path(const AnalysisConfig& cfg, const LangPair& lp) {
  return cfg.out_dir / "similarity" / (lp.str() + ".tsv");
}

// Loads every configured embedding store, enforcing one model tag across them.
std::map<LangPair, EmbeddingStore> load_stores(const AnalysisConfig& cfg, const std::set<LangPair>& wanted) {
  std::map<LangPair, EmbeddingStore> stores;
  for (const auto& [lp, path] : cfg.embeddings) {
    if (!wanted.count(lp)) continue;
    try {
      stores.emplace(lp, load_embeddings(path));
    } catch (const Error& e) {
      data_error(e);
    }
  }
  std::vector<const EmbeddingStore*> all;
  for (const auto& [lp, s] : stores) all.push_back(&s);
  try {
    if (!all.empty()) require_same_model(all);
  } catch (const Error& e) {
    data_error(e);
  }
  return stores;
}

template <typename Record>
std::vector<Record> annotate_or_fail(std::vector<Record> records, const EmbeddingStore& store, const LangPair& lp,
                                     const fs::path& store_path) {
  try {
    return annotate_similarity(std::move(records), store);
  } catch (const Error& e) {
    throw CommandError(kDataError, describe(e) + " for " + lp.str() + " (embeddings " + store_path.string() + ")");
  }
}

template <typename Record>
std::vector<Record> parse_records(const AnalysisConfig& cfg, const fs::path& path, const LangPair& lp) {
  try {
    if constexpr (std::is_same_v<Record, QERecord>) {
      return parse_mlqepe(path, lp, cfg.mlqepe_columns);
    } else {
      return parse_prequel(path, lp, cfg.prequel_columns);
    }
  } catch (const Error& e) {
    data_error(e);
  }
}

// Prefers the annotated file from a previous `similarity` run; otherwise parses the
// raw dataset and annotates in memory when embeddings are configured.
template <typename Record>
std::map<LangPair, std::vector<Record>> load_records(const AnalysisConfig& cfg) {
  std::map<LangPair, std::vector<Record>> out;
  std::set<LangPair> need_embeddings;
  for (const auto& [lp, dataset] : cfg.datasets) {
    const auto annotated = annotated_path(cfg, lp);
    auto records = parse_records<Record>(cfg, fs::exists(annotated) ? annotated : dataset, lp);
    const bool complete = std::all_of(records.begin(), records.end(), [](const auto& r) { return r.similarity.has_value(); });
    if (!complete && cfg.embeddings.count(lp)) need_embeddings.insert(lp);
    out.emplace(lp, std::move(records));
  }
  if (!need_embeddings.empty()) {
    const auto stores = load_stores(cfg, need_embeddings);
    for (const auto& [lp, store] : stores) out[lp] = annotate_or_fail(std::move(out[lp]), store, lp, cfg.embeddings.at(lp));
  }
  return out;
}

struct AnalysisData {
  RecordTable table;
  std::vector<std::string> correlation_columns;
};

AnalysisData load_analysis_data(const AnalysisConfig& cfg) {
  AnalysisData d;
  auto& t = d.table;
  t.add_factor("langs");
  if (cfg.kind == DatasetKind::Mlqepe) {
    for (const char* n : {"da_mean", "da_z_mean", "model_score", "hter", "score_sd", "similarity", "n_annotators"}) {
      t.add_real(n);
    }
    t.alias("human_mean", "da_mean");
    t.alias("z_mean", "da_z_mean");
    t.alias("ml_eval", "model_score");
    t.alias("sd", "score_sd");
    t.alias("evaluator_num", "n_annotators");
    for (const auto& [lp, records] : load_records<QERecord>(cfg)) {
      for (const auto& r : records) {
        t.pairs().push_back(lp);
        t.factor("langs").push_back(lp.str());
        t.real("da_mean").push_back(r.da_mean);
        t.real("da_z_mean").push_back(r.da_z_mean);
        t.real("model_score").push_back(r.model_score);
        t.real("hter").push_back(r.hter);
        t.real("score_sd").push_back(r.score_sd);
        t.real("similarity").push_back(r.similarity.value_or(kMissing));
        t.real("n_annotators").push_back(r.n_annotators);
      }
    }
    d.correlation_columns = {"similarity", "model_score", "hter", "da_mean", "da_z_mean", "score_sd"};
  } else {
    for (const char* n : {"da_z_mean", "prob_1", "prob_2", "prob_3", "prob_4", "prob_5", "hter", "similarity"}) {
      t.add_real(n);
    }
    t.add_factor("lm_score");
    t.alias("z_mean", "da_z_mean");
    t.alias("trigram_prob", "prob_3");
    t.alias("ngram_prob", "prob_" + std::to_string(cfg.ngram));
    for (const auto& [lp, records] : load_records<PreQuelRecord>(cfg)) {
      for (const auto& r : records) {
        t.pairs().push_back(lp);
        t.factor("langs").push_back(lp.str());
        t.factor("lm_score").push_back(r.lm_score);
        t.real("da_z_mean").push_back(r.da_z_mean);
        for (int n = 1; n <= 5; ++n) {
          auto it = r.ngram_sent_prob.find(n);
          t.real("prob_" + std::to_string(n)).push_back(it == r.ngram_sent_prob.end() ? kMissing : it->second);
        }
        t.real("hter").push_back(r.hter);
        t.real("similarity").push_back(r.similarity.value_or(kMissing));
      }
    }
    d.correlation_columns = {"similarity"};
    for (int n = 1; n <= 5; ++n) {
      const std::string name = "prob_" + std::to_string(n);
      if (!t.all_missing(name)) d.correlation_columns.push_back(name);
    }
    d.correlation_columns.push_back("hter");
    d.correlation_columns.push_back("da_z_mean");
  }
  return d;
}

// Runs fn(i) for i in [0, count) on a worker pool; rethrows the lowest-index failure.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  const std::size_t workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct NamedModel {
  std::string name;
  ModelFormula formula;
};

std::vector<NamedModel> parse_models(const AnalysisConfig& cfg) {
  std::vector<NamedModel> out;
  for (const auto& [name, text] : cfg.models) {
    try {
      out.push_back({name, parse_formula(text)});
    } catch (const Error& e) {
      throw CommandError(kConfigError, "model '" + name + "': " + describe(e));
    }
  }
  return out;
}

std::vector<std::string> model_variables(const std::vector<NamedModel>& models) {
  std::vector<std::string> vars;
  for (const auto& m : models) {
    if (std::find(vars.begin(), vars.end(), m.formula.response) == vars.end()) vars.push_back(m.formula.response);
    for (const auto& v : m.formula.predictors()) {
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
  }
  return vars;
}

// One unit of fitting work: every model over one frame (pooled or one pair).
struct FitGroup {
  std::optional<LangPair> pair;
  MetricFrame frame;
  std::vector<NamedModel> models;
  std::vector<FittedGam> fits;
  std::vector<std::string> warnings;
};

// Drops random terms that take a single value inside the frame.
std::vector<NamedModel> drop_constant_factors(std::vector<NamedModel> models, const MetricFrame& frame,
                                              const std::string& where, std::vector<std::string>& warnings) {
  std::set<std::string> warned;
  for (auto& m : models) {
    auto& terms = m.formula.random_terms;
    std::vector<std::string> kept;
    for (const auto& g : terms) {
      std::set<std::string> levels;
      if (const auto* f = frame.find_factor(g)) levels.insert(f->begin(), f->end());
      else if (const auto* c = frame.find(g)) {
        for (double v : *c) levels.insert(textio::format_shortest(v));
      }
      if (levels.size() <= 1) {
        if (warned.insert(g).second) {
          warnings.push_back("warning: " + where + ": dropping re(" + g + "), constant within the language pair");
        }
        continue;
      }
      kept.push_back(g);
    }
    terms = std::move(kept);
  }
  return models;
}

std::vector<FitGroup> build_fit_groups(const AnalysisConfig& cfg, bool per_pair) {
  AnalysisData data;
  data = load_analysis_data(cfg);
  const auto models = parse_models(cfg);
  const auto vars = model_variables(models);

  std::vector<FitGroup> groups;
  try {
    groups.push_back({std::nullopt, data.table.frame(vars, std::nullopt), models, {}, {}});
    if (per_pair) {
      for (const auto& [lp, path] : cfg.datasets) {
        FitGroup g{lp, data.table.frame(vars, lp), {}, {}, {}};
        g.models = drop_constant_factors(models, g.frame, lp.str(), g.warnings);
        groups.push_back(std::move(g));
      }
    }
  } catch (const Error& e) {
    data_error(e);
  }

  struct Job {
    std::size_t group;
    std::size_t model;
  };
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g].fits.resize(groups[g].models.size());
    for (std::size_t m = 0; m < groups[g].models.size(); ++m) jobs.push_back({g, m});
  }
  parallel_for(jobs.size(), [&](std::size_t i) {
    auto& g = groups[jobs[i].group];
    const auto& m = g.models[jobs[i].model];
    try {
      g.fits[jobs[i].model] = fit_gam(g.frame, m.formula);
    } catch (const Error& e) {
      throw CommandError(kFitError, "model '" + m.name + "'" + (g.pair ? " (" + g.pair->str() + ")" : std::string()) +
                                        ": " + describe(e));
    }
  });
  return groups;
}

fs::path group_dir(const AnalysisConfig& cfg, const std::string& what, const FitGroup& g) {
  const fs::path base = cfg.out_dir / what;
  return g.pair ? base / "per_pair" / g.pair->str() : base;
}

}  // namespace

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QE_GAUGE_THREADS")) {
    if (auto v = textio::parse_int(env); v && *v > 0) n = std::min<unsigned>(n, static_cast<unsigned>(*v));
  }
  return n;
}

void cmd_similarity(const AnalysisConfig& cfg, std::ostream& out, std::ostream& /*log*/) {
  std::set<LangPair> pairs;
  for (const auto& [lp, path] : cfg.datasets) {
    if (!cfg.embeddings.count(lp)) {
      throw CommandError(kConfigError, "Config: no [embeddings] entry for " + lp.str());
    }
    pairs.insert(lp);
  }
  const auto stores = load_stores(cfg, pairs);

  std::vector<std::pair<fs::path, std::string>> outputs;
  for (const auto& [lp, dataset] : cfg.datasets) {
    const auto& store = stores.at(lp);
    std::string tsv;
    std::vector<double> values;
    if (cfg.kind == DatasetKind::Mlqepe) {
      auto records = annotate_or_fail(parse_records<QERecord>(cfg, dataset, lp), store, lp, cfg.embeddings.at(lp));
      for (const auto& r : records) values.push_back(*r.similarity);
      tsv = to_tsv(records, cfg.mlqepe_columns);
    } else {
      auto records = annotate_or_fail(parse_records<PreQuelRecord>(cfg, dataset, lp), store, lp, cfg.embeddings.at(lp));
      for (const auto& r : records) values.push_back(*r.similarity);
      tsv = to_tsv(records, cfg.prequel_columns);
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    out << lp.str() << ": " << values.size() << " rows, similarity min=" << textio::format_shortest(*lo)
        << " mean=" << textio::format_shortest(sum / static_cast<double>(values.size()))
        << " max=" << textio::format_shortest(*hi) << " (model " << store.model_tag() << ")\n";
    outputs.emplace_back(annotated_path(cfg, lp), std::move(tsv));
  }
  for (const auto& [path, contents] : outputs) textio::write_file(path, contents);
}

void cmd_correlate(const AnalysisConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto data = load_analysis_data(cfg);
  std::vector<std::string> columns;
  for (const auto& c : data.correlation_columns) {
    if (data.table.all_missing(c)) {
      log << "warning: column '" << c << "' has no values and is left out of the correlation matrix\n";
      continue;
    }
    columns.push_back(c);
  }

  std::vector<std::pair<std::string, CorrelationMatrix>> results;
  std::vector<std::pair<std::string, std::optional<LangPair>>> scopes{{"pooled", std::nullopt}};
  if (cfg.per_pair) {
    for (const auto& [lp, path] : cfg.datasets) scopes.emplace_back(lp.str(), lp);
  }
  for (const auto& [name, pair] : scopes) {
    try {
      results.emplace_back(name, correlation_matrix(data.table.frame(columns, pair)));
    } catch (const Error& e) {
      throw CommandError(kDataError, describe(e) + (name == "pooled" ? std::string() : " (" + name + ")"));
    }
  }
  for (const auto& [name, m] : results) {
    const fs::path dir = cfg.out_dir / "correlation";
    textio::write_file(dir / (name + ".tsv"), to_matrix_tsv(m));
    textio::write_file(dir / (name + ".csv"), to_long_csv(m));
    out << name << ": " << m.names.size() << "x" << m.names.size() << " correlation matrix, n=" << m.n << '\n';
  }
}

void cmd_fit_compare(const AnalysisConfig& cfg, std::ostream& out, std::ostream& log) {
  if (cfg.models.size() < 2) throw CommandError(kConfigError, "Config: fit needs at least two models including 'base'");
  const auto groups = build_fit_groups(cfg, cfg.per_pair);
  for (const auto& g : groups) {
    for (const auto& w : g.warnings) log << w << '\n';
    const auto base = std::find_if(g.models.begin(), g.models.end(), [](const auto& m) { return m.name == "base"; });
    const double base_aic = g.fits[static_cast<std::size_t>(base - g.models.begin())].aic;
    std::vector<AicRow> rows;
    const fs::path dir = group_dir(cfg, "fit", g);
    for (std::size_t i = 0; i < g.models.size(); ++i) {
      const auto& fit = g.fits[i];
      rows.push_back({g.models[i].name, fit.aic, fit.aic - base_aic, fit.n});
      textio::write_file(dir / (g.models[i].name + ".json"), to_json(fit));
    }
    textio::write_file(dir / "delta_aic.tsv", delta_aic_table(rows));
    out << (g.pair ? g.pair->str() : std::string("pooled")) << ":\n";
    for (const auto& r : rows) {
      out << "  " << r.model << " aic=" << textio::format_shortest(r.aic)
          << " delta_vs_base=" << textio::format_shortest(r.delta_vs_base) << " n=" << r.n << '\n';
    }
  }
}

void cmd_partials(const AnalysisConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto groups = build_fit_groups(cfg, cfg.per_pair);
  for (const auto& g : groups) {
    for (const auto& w : g.warnings) log << w << '\n';
    const std::string scope = g.pair ? g.pair->str() : std::string("pooled");
    for (std::size_t i = 0; i < g.models.size(); ++i) {
      const auto& model = g.models[i];
      const fs::path dir = group_dir(cfg, "partials", g) / model.name;
      for (const auto& s : model.formula.smooth_terms) {
        PartialEffect pe;
        try {
          pe = partial_effect(g.fits[i], s.var, cfg.grid_size);
        } catch (const Error& e) {
          throw CommandError(kFitError, "model '" + model.name + "': " + describe(e));
        }
        textio::write_file(dir / (s.var + ".csv"), partial_effect_csv(pe));
        if (cfg.svg) {
          textio::write_file(dir / (s.var + ".svg"),
                             partial_effect_svg(pe, scope + " / " + model.name + ": s(" + s.var + ")"));
        }
        out << scope << ' ' << model.name << ' ' << s.var << " edf=" << textio::format_shortest(pe.edf)
            << " p=" << textio::format_shortest(pe.p_value) << (is_significant(pe) ? " significant" : " not-significant")
            << '\n';
      }
    }
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qe-gauge: textual-similarity QE analysis (correlations, additive models, partial effects)"};
  app.name("qe-gauge");
  std::string command;
  std::string config_path;
  std::string out_dir;
  bool per_pair = false;
  std::uint64_t seed = 0;
  app.add_option("command", command, "similarity | correlate | fit | partials")
      ->required()
      ->check(CLI::IsMember({"similarity", "correlate", "fit", "partials"}));
  app.add_option("--config", config_path, "analysis config file")->required();
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_flag("--per-pair", per_pair, "also run each language pair separately");
  app.add_option("--seed", seed, "accepted for compatibility; no step of the pipeline is random");

  std::vector<const char*> argv;
  argv.push_back("qe-gauge");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "qe-gauge: error[config]: Usage: " << e.what() << '\n';
    return kConfigError;
  }

  const auto report = [&](const char* category, const std::string& msg) {
    std::string line = msg;
    std::replace(line.begin(), line.end(), '\n', ' ');
    err << "qe-gauge: error[" << category << "]: " << line << '\n';
  };

  AnalysisConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    report("config", describe(e));
    return kConfigError;
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (per_pair) cfg.per_pair = true;
  if (app.count("--seed")) cfg.seed = seed;

  try {
    if (command == "similarity") cmd_similarity(cfg, out, err);
    else if (command == "correlate") cmd_correlate(cfg, out, err);
    else if (command == "fit") cmd_fit_compare(cfg, out, err);
    else cmd_partials(cfg, out, err);
  } catch (const CommandError& e) {
    report(e.code() == kConfigError ? "config" : e.code() == kDataError ? "data" : "fit", e.what());
    return e.code();
  } catch (const Error& e) {
    report("data", describe(e));
    return kDataError;
  } catch (const std::exception& e) {
    report("data", e.what());
    return kDataError;
  }
  return kOk;
}

}  // namespace qegauge::cli
