#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qegauge/error.hpp"
#include "qegauge/types.hpp"

namespace qegauge {

enum class Side { Source, Target };

std::string_view side_name(Side s) noexcept;

using EmbeddingVector = Vector;

namespace detail {

// Neumaier-compensated accumulator.
template <typename Scalar>
struct CompensatedSum {
  Scalar sum = 0;
  Scalar carry = 0;

  void add(Scalar x) {
    const Scalar t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  Scalar value() const { return sum + carry; }
};

}  // namespace detail

/// <u,v> / (|u| |v|) without clamping. Throws DimensionMismatch or ZeroVector.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar raw_cosine(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  if (u.size() != v.size()) {
    throw Error(Errc::DimensionMismatch,
                "cosine: dimensions " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  detail::CompensatedSum<Scalar> uv, uu, vv;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const Scalar a = u(i);
    const Scalar b = v(i);
    uv.add(a * b);
    uu.add(a * a);
    vv.add(b * b);
  }
  if (!(uu.value() > 0) || !(vv.value() > 0)) throw Error(Errc::ZeroVector, "cosine of a zero vector");
  return uv.value() / (std::sqrt(uu.value()) * std::sqrt(vv.value()));
}

/// Cosine similarity clamped into [-1, 1] against rounding overshoot.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  return std::clamp(raw_cosine(u, v), Scalar(-1), Scalar(1));
}

/// Immutable after load.
class EmbeddingStore {
 public:
  using Key = std::pair<std::uint64_t, Side>;

  EmbeddingStore(int dim, std::string model_tag);

  /// Throws DimensionMismatch, DuplicateKey, or DegenerateInput for non-finite values.
  void insert(std::uint64_t segment_id, Side side, EmbeddingVector v);

  int dim() const noexcept { return dim_; }
  const std::string& model_tag() const noexcept { return model_tag_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const EmbeddingVector* find(std::uint64_t segment_id, Side side) const;
  const std::map<Key, EmbeddingVector>& entries() const noexcept { return entries_; }

 private:
  int dim_;
  std::string model_tag_;
  std::map<Key, EmbeddingVector> entries_;
};

EmbeddingStore load_embeddings(const std::filesystem::path& path);
/// Exchange-format text, rows ordered by (segment_id, source before target).
std::string to_exchange_format(const EmbeddingStore& store);

/// Throws ModelTagMismatch unless every store has the same model tag.
void require_same_model(const std::vector<const EmbeddingStore*>& stores);

/// Returns a copy of `records` with `similarity` set from the store; no other field changes.
template <typename Record>
std::vector<Record> annotate_similarity(std::vector<Record> records, const EmbeddingStore& store) {
  for (auto& r : records) {
    const auto* src = store.find(r.segment_id, Side::Source);
    if (!src) {
      throw Error(Errc::MissingEmbedding, "MissingEmbedding(segment_id=" + std::to_string(r.segment_id) + ", source)");
    }
    const auto* tgt = store.find(r.segment_id, Side::Target);
    if (!tgt) {
      throw Error(Errc::MissingEmbedding, "MissingEmbedding(segment_id=" + std::to_string(r.segment_id) + ", target)");
    }
    r.similarity = cosine(*src, *tgt);
  }
  return records;
}

}  // namespace qegauge
