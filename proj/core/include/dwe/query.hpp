#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dwe/align.hpp"
#include "dwe/store.hpp"

namespace dwe {

struct Neighbor {
  std::string word;
  double score = 0.0;
  /// Row in the epoch's vocabulary; ties in score are ordered by ascending index.
  std::size_t index = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Cosine score used everywhere: dot / (sqrt(q·q) * sqrt(r·r)), each sum accumulated in
/// 64-bit in component order.
double cosine(std::span<const float> q, std::span<const float> r);

/// Top-n rows of `e` by cosine to `q`; zero rows and words in `exclude` are skipped.
/// Throws Error(zero_query), Error(shape_mismatch), Error(precondition) for n == 0.
std::vector<Neighbor> similar_by_vector(const EpochEmbedding& e, std::span<const float> q, std::size_t n,
                                        std::span<const std::string> exclude = {});

struct AnalogyRow {
  Epoch epoch;
  std::vector<Neighbor> neighbors;
};

/// Per-epoch neighbours of one concept_word vector.
struct AnalogyTable {
  std::string concept_word;
  Epoch reference;
  std::vector<AnalogyRow> per_epoch;
};

struct AnalogyOptions {
  /// Epoch the concept_word vector is taken from; the alignment reference when unset.
  std::optional<Epoch> query_epoch;
  bool exclude_self = false;
};

/// The concept_word's vector queried against every epoch of the series (its own word included
/// unless exclude_self). Throws Error(out_of_vocabulary) naming the epoch if the concept_word is
/// absent or zero there.
AnalogyTable temporal_analogues(const AlignedSeries& s, std::string_view concept_word, std::size_t n,
                                const AnalogyOptions& options = {});

/// Cosine between two aligned word vectors, possibly from different epochs.
double cross_epoch_pair(const AlignedSeries& s, std::string_view word_a, Epoch epoch_a, std::string_view word_b,
                        Epoch epoch_b);

/// The word's nonzero aligned vector in `epoch`, or Error(out_of_vocabulary).
std::span<const float> require_vector(const AlignedSeries& s, std::string_view word, Epoch epoch);

}  // namespace dwe
