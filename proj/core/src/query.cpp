#include "dwe/query.hpp"

#include <algorithm>
#include <cmath>

#include "dwe/error.hpp"
#include "dwe/preprocess.hpp"

namespace dwe {

double cosine(std::span<const float> q, std::span<const float> r) {
  double dot = 0.0;
  double qq = 0.0;
  double rr = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double a = q[j];
    const double b = r[j];
    dot += a * b;
    qq += a * a;
    rr += b * b;
  }
  return dot / (std::sqrt(qq) * std::sqrt(rr));
}

namespace {

struct Candidate {
  double score;
  std::size_t index;
};

// Strict total order: higher score first, then lower vocabulary index.
bool ranks_before(const Candidate& a, const Candidate& b) noexcept {
  return a.score > b.score || (a.score == b.score && a.index < b.index);
}

}  // namespace

std::vector<Neighbor> similar_by_vector(const EpochEmbedding& e, std::span<const float> q, std::size_t n,
                                        std::span<const std::string> exclude) {
  if (n == 0) throw Error(ErrorKind::precondition, "similar_by_vector: n must be at least 1");
  if (q.size() != e.dim()) {
    throw Error(ErrorKind::shape_mismatch,
                "query has dim " + std::to_string(q.size()) + ", epoch has dim " + std::to_string(e.dim()));
  }
  double qq = 0.0;
  for (float v : q) qq += static_cast<double>(v) * v;
  if (qq == 0.0) throw Error(ErrorKind::zero_query, "query vector is all zeros");
  const double qnorm = std::sqrt(qq);

  std::vector<char> skip;
  if (!exclude.empty()) {
    skip.assign(e.size(), 0);
    for (const auto& w : exclude)
      if (auto idx = e.vocab().find(w)) skip[*idx] = 1;
  }

  // Max-heap under ranks_before: the front is the weakest of the current top n.
  std::vector<Candidate> heap;
  heap.reserve(std::min(n, e.size()) + 1);
  const std::size_t dim = e.dim();
  const float* data = e.matrix().values().data();
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!skip.empty() && skip[i]) continue;
    const float* row = data + i * dim;
    double dot = 0.0;
    double rr = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double b = row[j];
      dot += static_cast<double>(q[j]) * b;
      rr += b * b;
    }
    if (rr == 0.0) continue;
    const Candidate c{dot / (qnorm * std::sqrt(rr)), i};
    if (heap.size() < n) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end(), ranks_before);
    } else if (ranks_before(c, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), ranks_before);
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end(), ranks_before);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), ranks_before);

  std::vector<Neighbor> out;
  out.reserve(heap.size());
  for (const auto& c : heap) out.push_back({e.vocab()[c.index], c.score, c.index});
  return out;
}

std::span<const float> require_vector(const AlignedSeries& s, std::string_view word, Epoch epoch) {
  const EpochEmbedding* e = s.find(epoch);
  if (!e) throw Error(ErrorKind::precondition, "epoch " + to_string(epoch) + " not in aligned series");
  auto v = vector_of(*e, word);
  if (!v) {
    throw Error(ErrorKind::out_of_vocabulary, "'" + std::string(word) + "' not in epoch " + to_string(epoch));
  }
  if (is_zero_row(*v)) {
    throw Error(ErrorKind::out_of_vocabulary, "'" + std::string(word) + "' has a zero vector in epoch " +
                                                  to_string(epoch));
  }
  return *v;
}

AnalogyTable temporal_analogues(const AlignedSeries& s, std::string_view concept_word, std::size_t n,
                                const AnalogyOptions& options) {
  const Epoch from = options.query_epoch.value_or(s.reference());
  const auto q = require_vector(s, concept_word, from);
  std::vector<std::string> exclude;
  if (options.exclude_self) exclude.emplace_back(concept_word);

  AnalogyTable table{std::string(concept_word), from, {}};
  for (const auto& [epoch, e] : s.epochs()) {
    table.per_epoch.push_back({epoch, similar_by_vector(e, q, n, exclude)});
  }
  return table;
}

double cross_epoch_pair(const AlignedSeries& s, std::string_view word_a, Epoch epoch_a, std::string_view word_b,
                        Epoch epoch_b) {
  return cosine(require_vector(s, word_a, epoch_a), require_vector(s, word_b, epoch_b));
}

}  // namespace dwe
