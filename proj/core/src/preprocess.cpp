#include "dwe/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "dwe/error.hpp"

namespace dwe {

bool is_zero_row(std::span<const float> row) noexcept {
  return std::all_of(row.begin(), row.end(), [](float v) { return v == 0.0f; });
}

CleanResult drop_zero_rows(const EpochEmbedding& e) {
  const std::size_t dim = e.dim();
  Vocabulary::Builder vocab;
  std::vector<float> values;
  vocab.reserve(e.size());
  values.reserve(e.matrix().values().size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    auto row = e.matrix().row(i);
    if (is_zero_row(row)) continue;
    vocab.add(e.vocab()[i]);
    values.insert(values.end(), row.begin(), row.end());
  }
  const std::size_t kept = vocab.size();
  return {EpochEmbedding(e.epoch(), std::move(vocab).build(), EmbeddingMatrix(kept, dim, std::move(values))),
          e.size() - kept};
}

EpochEmbedding normalize_rows(const EpochEmbedding& e) {
  auto src = e.matrix().values();
  std::vector<float> values(src.begin(), src.end());
  const std::size_t dim = e.dim();
  for (std::size_t i = 0; i < e.size(); ++i) {
    float* row = values.data() + i * dim;
    double sq = 0.0;
    for (std::size_t j = 0; j < dim; ++j) sq += static_cast<double>(row[j]) * row[j];
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < dim; ++j) row[j] = static_cast<float>(row[j] * inv);
  }
  return EpochEmbedding(e.epoch(), e.vocab(), EmbeddingMatrix(e.size(), dim, std::move(values)));
}

std::vector<std::string> shared_vocabulary(const EpochEmbedding& source, const EpochEmbedding& target) {
  std::vector<std::string> shared;
  for (const auto& w : target.vocab().words()) {
    if (source.vocab().contains(w)) shared.push_back(w);
  }
  return shared;
}

PairedRows paired_submatrices(const EpochEmbedding& source, const EpochEmbedding& target,
                              std::span<const std::string> shared) {
  if (source.dim() != target.dim()) {
    throw Error(ErrorKind::shape_mismatch, "paired_submatrices: dims " + std::to_string(source.dim()) + " and " +
                                               std::to_string(target.dim()));
  }
  const std::size_t dim = source.dim();
  std::vector<float> a;
  std::vector<float> b;
  a.reserve(shared.size() * dim);
  b.reserve(shared.size() * dim);
  for (const auto& w : shared) {
    auto ra = vector_of(source, w);
    auto rb = vector_of(target, w);
    if (!ra || !rb) {
      throw Error(ErrorKind::precondition, "shared token '" + w + "' missing from epoch " +
                                               to_string(!ra ? source.epoch() : target.epoch()));
    }
    a.insert(a.end(), ra->begin(), ra->end());
    b.insert(b.end(), rb->begin(), rb->end());
  }
  return {EmbeddingMatrix(shared.size(), dim, std::move(a)), EmbeddingMatrix(shared.size(), dim, std::move(b))};
}

VocabStats vocab_stats(const EmbeddingSeries& series) {
  VocabStats stats;
  for (const auto& [epoch, e] : series) stats.per_epoch.emplace_back(epoch, e.size());
  return stats;
}

}  // namespace dwe
