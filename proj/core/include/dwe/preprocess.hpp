#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dwe/store.hpp"

namespace dwe {

/// True iff every component is +0.0f or -0.0f.
bool is_zero_row(std::span<const float> row) noexcept;

struct CleanResult {
  EpochEmbedding embedding;
  std::size_t removed = 0;
};

/// Removes untrained words (all-zero vectors), keeping survivors in their original order.
CleanResult drop_zero_rows(const EpochEmbedding& e);

/// Scales every nonzero row to unit L2 norm (norm computed in 64-bit). Zero rows stay zero.
EpochEmbedding normalize_rows(const EpochEmbedding& e);

/// Words present in both epochs, in `target`'s vocabulary order.
std::vector<std::string> shared_vocabulary(const EpochEmbedding& source, const EpochEmbedding& target);

struct PairedRows {
  EmbeddingMatrix source;
  EmbeddingMatrix target;
};

/// Row i of each block is that epoch's vector for shared[i].
/// Throws Error(precondition) if a token is missing, Error(shape_mismatch) on differing dims.
PairedRows paired_submatrices(const EpochEmbedding& source, const EpochEmbedding& target,
                              std::span<const std::string> shared);

struct VocabStats {
  std::vector<std::pair<Epoch, std::size_t>> per_epoch;

  friend bool operator==(const VocabStats&, const VocabStats&) = default;
};

/// Word count per epoch, ascending. Expects an already-cleaned series.
VocabStats vocab_stats(const EmbeddingSeries& series);

}  // namespace dwe
