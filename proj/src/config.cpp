#include "qegauge/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "qegauge/error.hpp"
#include "qegauge/formula.hpp"
#include "qegauge/textio.hpp"

namespace qegauge {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw Error(Errc::Config, "config line " + std::to_string(line) + ": " + what);
}

// Strips a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

std::string unquote(std::string_view v, std::size_t line) {
  v = textio::trim(v);
  if (!v.empty() && v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') fail(line, "unterminated string");
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

bool boolean(const std::string& v, std::size_t line) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line, "expected true or false, got '" + v + "'");
}

}  // namespace

std::vector<std::string> analysis_variables(DatasetKind kind) {
  if (kind == DatasetKind::Mlqepe) {
    return {"da_mean", "human_mean", "da_z_mean", "z_mean", "model_score", "ml_eval", "hter",
            "score_sd",  "sd",       "similarity", "n_annotators", "evaluator_num", "langs"};
  }
  return {"da_z_mean", "z_mean", "prob_1", "prob_2", "prob_3", "prob_4", "prob_5", "ngram_prob",
          "trigram_prob", "hter", "similarity", "lm_score", "langs"};
}

std::string default_response(DatasetKind kind) { return kind == DatasetKind::Mlqepe ? "da_mean" : "da_z_mean"; }

std::vector<std::pair<std::string, std::string>> default_models(DatasetKind kind, const std::string& response) {
  const std::string lhs = response + " ~ ";
  if (kind == DatasetKind::Mlqepe) {
    const std::string tail = " + re(evaluator_num) + re(langs)";
    return {
        {"base", lhs + "s(ml_eval) + s(similarity) + s(sd) + s(hter)" + tail},
        {"m1", lhs + "s(ml_eval) + s(sd) + s(hter)" + tail},
        {"m2", lhs + "s(similarity) + s(sd) + s(hter)" + tail},
        {"m3", lhs + "s(ml_eval) + s(similarity) + s(sd)" + tail},
    };
  }
  const std::string tail = " + re(lm_score) + re(langs)";
  return {
      {"base", lhs + "s(ngram_prob) + s(similarity) + s(hter)" + tail},
      {"t1", lhs + "s(ngram_prob) + s(hter)" + tail},
      {"t2", lhs + "s(similarity) + s(hter)" + tail},
      {"t3", lhs + "s(ngram_prob) + s(similarity)" + tail},
  };
}

AnalysisConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  AnalysisConfig cfg;
  std::string section;
  std::optional<std::string> kind_text;
  std::optional<std::string> response;
  bool have_models = false;
  std::vector<std::pair<std::string, std::string>> column_overrides;
  std::set<std::string> model_names;

  const auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto body = textio::trim(strip_comment(raw));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail(line, "malformed section header");
      section = std::string(textio::trim(body.substr(1, body.size() - 2)));
      if (section != "datasets" && section != "embeddings" && section != "models" && section != "columns") {
        fail(line, "unknown section [" + section + "]");
      }
      if (section == "models") have_models = true;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) fail(line, "expected key = value");
    const std::string key = unquote(body.substr(0, eq), line);
    const std::string value = unquote(body.substr(eq + 1), line);
    if (key.empty()) fail(line, "empty key");

    if (section.empty()) {
      if (key == "kind") kind_text = value;
      else if (key == "response") response = value;
      else if (key == "out") cfg.out_dir = resolve(value);
      else if (key == "per_pair") cfg.per_pair = boolean(value, line);
      else if (key == "svg") cfg.svg = boolean(value, line);
      else if (key == "ngram" || key == "grid_size" || key == "seed") {
        const auto v = textio::parse_int(value);
        if (!v || *v < 0) fail(line, key + " must be a non-negative integer");
        if (key == "ngram") {
          if (*v < 1 || *v > 5) fail(line, "ngram must be in 1..5");
          cfg.ngram = static_cast<int>(*v);
        } else if (key == "grid_size") {
          if (*v < 2 || *v > 100000) fail(line, "grid_size must be in 2..100000");
          cfg.grid_size = static_cast<int>(*v);
        } else {
          cfg.seed = static_cast<std::uint64_t>(*v);
        }
      } else {
        fail(line, "unknown key '" + key + "'");
      }
    } else if (section == "datasets" || section == "embeddings") {
      LangPair lp;
      try {
        lp = LangPair::parse(key);
      } catch (const Error& e) {
        fail(line, e.what());
      }
      auto& target = section == "datasets" ? cfg.datasets : cfg.embeddings;
      if (!target.emplace(lp, resolve(value)).second) fail(line, "duplicate language pair " + key);
    } else if (section == "models") {
      if (!model_names.insert(key).second) fail(line, "duplicate model name '" + key + "'");
      cfg.models.emplace_back(key, value);
    } else {
      column_overrides.emplace_back(key, value);
    }
  }

  if (!kind_text) throw Error(Errc::Config, "config: missing 'kind'");
  if (*kind_text == "mlqepe") cfg.kind = DatasetKind::Mlqepe;
  else if (*kind_text == "prequel") cfg.kind = DatasetKind::Prequel;
  else throw Error(Errc::Config, "config: kind must be mlqepe or prequel");

  for (auto& [k, v] : column_overrides) {
    if (cfg.kind == DatasetKind::Mlqepe) cfg.mlqepe_columns.set(k, v);
    else cfg.prequel_columns.set(k, v);
  }

  cfg.response = response.value_or(default_response(cfg.kind));
  if (!have_models) cfg.models = default_models(cfg.kind, cfg.response);
  if (cfg.datasets.empty()) throw Error(Errc::Config, "config: no [datasets] entries");
  for (const auto& [lp, path] : cfg.embeddings) {
    if (!cfg.datasets.count(lp)) throw Error(Errc::Config, "config: embeddings for " + lp.str() + " have no dataset");
  }

  if (std::count_if(cfg.models.begin(), cfg.models.end(), [](const auto& m) { return m.first == "base"; }) != 1) {
    throw Error(Errc::Config, "config: exactly one model must be named 'base'");
  }
  for (const auto& [name, text_formula] : cfg.models) {
    ModelFormula f;
    try {
      f = parse_formula(text_formula);
    } catch (const Error& e) {
      throw Error(Errc::Config, "config: model '" + name + "': " + e.what());
    }
    const auto known = analysis_variables(cfg.kind);
    auto vars = f.predictors();
    vars.push_back(f.response);
    for (const auto& v : vars) {
      if (std::find(known.begin(), known.end(), v) == known.end()) {
        throw Error(Errc::Config, "config: model '" + name + "' uses unknown variable '" + v + "'");
      }
    }
    if (f.response != cfg.response) {
      throw Error(Errc::Config, "config: model '" + name + "' has response '" + f.response + "', expected '" +
                                    cfg.response + "'");
    }
  }
  return cfg;
}

AnalysisConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Config, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace qegauge
