#include "qegauge/formula.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "qegauge/error.hpp"

namespace qegauge {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ModelFormula parse() {
    ModelFormula f;
    f.response = ident("response variable");
    expect('~');
    skip_ws();
    if (peek() == '1') {
      ++pos_;
      skip_ws();
      if (pos_ != text_.size()) fail("'1' must be the only term");
      return f;
    }
    term(f);
    while (true) {
      skip_ws();
      if (pos_ == text_.size()) break;
      expect('+');
      term(f);
    }
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::SyntaxError, "SyntaxError(position " + std::to_string(pos_) + "): " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string ident(const char* what) {
    skip_ws();
    const std::size_t start = pos_;
    auto is_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    auto is_body = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    if (!is_start(peek())) fail(std::string("expected ") + what);
    while (pos_ < text_.size() && is_body(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  int integer() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an integer");
    if (pos_ - start > 6) fail("basis size too large");
    return std::stoi(std::string(text_.substr(start, pos_ - start)));
  }

  void term(ModelFormula& f) {
    const std::size_t term_start = (skip_ws(), pos_);
    const std::string name = ident("term");
    skip_ws();
    if (peek() != '(') {
      f.linear_terms.push_back(name);
      return;
    }
    ++pos_;
    if (name == "s") {
      SmoothTerm s{ident("variable"), kDefaultBasisSize};
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        const std::string key = ident("'k'");
        if (key != "k") fail("only the k= argument is supported");
        expect('=');
        const std::size_t k_pos = (skip_ws(), pos_);
        s.k = integer();
        expect(')');
        if (s.k < 3) {
          throw Error(Errc::InvalidBasisSize, "InvalidBasisSize(position " + std::to_string(k_pos) + "): k must be >= 3");
        }
      } else {
        expect(')');
      }
      f.smooth_terms.push_back(std::move(s));
    } else if (name == "re") {
      f.random_terms.push_back(ident("factor name"));
      expect(')');
    } else {
      pos_ = term_start;
      fail("unknown term function '" + name + "'");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string> ModelFormula::predictors() const {
  std::vector<std::string> out;
  for (const auto& s : smooth_terms) out.push_back(s.var);
  out.insert(out.end(), random_terms.begin(), random_terms.end());
  out.insert(out.end(), linear_terms.begin(), linear_terms.end());
  return out;
}

bool ModelFormula::has_term(std::string_view var) const {
  const auto p = predictors();
  return std::find(p.begin(), p.end(), var) != p.end();
}

ModelFormula parse_formula(std::string_view text) {
  ModelFormula f = Parser(text).parse();
  std::set<std::string> seen;
  for (const auto& v : f.predictors()) {
    if (v == f.response) throw Error(Errc::ResponseInPredictors, "ResponseInPredictors(\"" + v + "\")");
    if (!seen.insert(v).second) throw Error(Errc::DuplicateTerm, "DuplicateTerm(\"" + v + "\")");
  }
  return f;
}

std::string render_formula(const ModelFormula& f) {
  std::vector<std::string> terms;
  for (const auto& s : f.smooth_terms) {
    terms.push_back(s.k == kDefaultBasisSize ? "s(" + s.var + ")" : "s(" + s.var + ", k=" + std::to_string(s.k) + ")");
  }
  for (const auto& g : f.random_terms) terms.push_back("re(" + g + ")");
  for (const auto& x : f.linear_terms) terms.push_back(x);
  std::string out = f.response + " ~ ";
  if (terms.empty()) return out + "1";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += " + ";
    out += terms[i];
  }
  return out;
}

}  // namespace qegauge
