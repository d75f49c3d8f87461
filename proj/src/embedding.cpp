#include "qegauge/embedding.hpp"

#include <sstream>

#include "qegauge/textio.hpp"

namespace qegauge {

std::string_view side_name(Side s) noexcept { return s == Side::Source ? "source" : "target"; }

EmbeddingStore::EmbeddingStore(int dim, std::string model_tag) : dim_(dim), model_tag_(std::move(model_tag)) {
  if (dim <= 0) throw Error(Errc::BadHeader, "embedding dimension must be positive");
}

void EmbeddingStore::insert(std::uint64_t segment_id, Side side, EmbeddingVector v) {
  if (v.size() != dim_) {
    throw Error(Errc::DimensionMismatch, "vector of length " + std::to_string(v.size()) + " in a store of dim " +
                                             std::to_string(dim_));
  }
  if (!v.allFinite()) throw Error(Errc::DegenerateInput, "non-finite embedding value");
  auto [it, inserted] = entries_.emplace(Key{segment_id, side}, std::move(v));
  if (!inserted) {
    throw Error(Errc::DuplicateKey, "DuplicateKey(" + std::to_string(segment_id) + ", " + std::string(side_name(side)) + ")");
  }
}

const EmbeddingVector* EmbeddingStore::find(std::uint64_t segment_id, Side side) const {
  auto it = entries_.find(Key{segment_id, side});
  return it == entries_.end() ? nullptr : &it->second;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  const auto lines = textio::read_lines(path);
  const std::string file = path.string();
  if (lines.size() < 2 || lines[0].rfind("#dim=", 0) != 0 || lines[1].rfind("#model=", 0) != 0) {
    throw Error(Errc::BadHeader, "BadHeader: expected '#dim=<d>' and '#model=<tag>' in " + file);
  }
  const auto dim = textio::parse_int(std::string_view(lines[0]).substr(5));
  if (!dim || *dim <= 0 || *dim > 1'000'000) throw Error(Errc::BadHeader, "BadHeader: invalid dim in " + file);
  EmbeddingStore store(static_cast<int>(*dim), lines[1].substr(7));

  for (std::size_t i = 2; i < lines.size(); ++i) {
    const std::string line_no = std::to_string(i + 1);
    if (textio::trim(lines[i]).empty()) continue;
    const auto fields = textio::split(lines[i], '\t');
    if (fields.size() != 3) {
      throw Error(Errc::MalformedRow, "MalformedRow(line " + line_no + ": expected 3 tab-separated fields) in " + file);
    }
    const auto id = textio::parse_int(fields[0]);
    if (!id || *id < 0) throw Error(Errc::MalformedRow, "MalformedRow(line " + line_no + ": bad segment id) in " + file);
    Side side;
    if (fields[1] == "source") side = Side::Source;
    else if (fields[1] == "target") side = Side::Target;
    else throw Error(Errc::MalformedRow, "MalformedRow(line " + line_no + ": side must be source or target) in " + file);

    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(store.dim()));
    for (auto token : textio::split(textio::trim(fields[2]), ' ')) {
      if (token.empty()) continue;
      auto v = textio::parse_double(token);
      if (!v) throw Error(Errc::MalformedRow, "MalformedRow(line " + line_no + ": bad float '" + std::string(token) + "') in " + file);
      values.push_back(*v);
    }
    if (static_cast<int>(values.size()) != store.dim()) {
      throw Error(Errc::DimensionMismatch, "DimensionMismatch(line " + line_no + "): " + std::to_string(values.size()) +
                                               " values, expected " + std::to_string(store.dim()) + " in " + file);
    }
    try {
      store.insert(static_cast<std::uint64_t>(*id), side, Eigen::Map<const Vector>(values.data(), store.dim()));
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " at line " + line_no + " in " + file);
    }
  }
  return store;
}

std::string to_exchange_format(const EmbeddingStore& store) {
  std::ostringstream out;
  out << "#dim=" << store.dim() << '\n' << "#model=" << store.model_tag() << '\n';
  for (const auto& [key, v] : store.entries()) {
    out << key.first << '\t' << side_name(key.second) << '\t';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) out << ' ';
      out << textio::format_shortest(v(i));
    }
    out << '\n';
  }
  return out.str();
}

void require_same_model(const std::vector<const EmbeddingStore*>& stores) {
  for (const auto* s : stores) {
    if (s->model_tag() != stores.front()->model_tag()) {
      throw Error(Errc::ModelTagMismatch, "embedding stores come from different models: '" +
                                              stores.front()->model_tag() + "' vs '" + s->model_tag() + "'");
    }
  }
}

}  // namespace qegauge
