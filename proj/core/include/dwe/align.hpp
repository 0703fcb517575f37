#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dwe/linalg.hpp"
#include "dwe/store.hpp"

namespace dwe {

/// Orthogonal map from source_epoch's coordinates into target_epoch's: aligned_row = row · q.
struct RotationMatrix {
  linalg::Matrix q;
  Epoch source_epoch;
  Epoch target_epoch;
};

struct ProcrustesFit {
  linalg::Matrix q;
  /// Singular values of AᵀB, descending.
  std::vector<double> singular_values;
  /// Number of singular values above the relative null threshold.
  std::size_t rank = 0;

  /// The minimiser is unique only when AᵀB has full rank.
  bool rank_deficient() const noexcept { return rank < singular_values.size(); }
};

/// Orthogonal Q minimising ‖A·Q − B‖_F: with AᵀB = U·Σ·Vᵀ, Q = U·Vᵀ.
/// Throws Error(shape_mismatch) on differing shapes or zero rows; SVD failures propagate.
ProcrustesFit procrustes(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

/// Replaces each row by row · Q. Throws Error(shape_mismatch | epoch_mismatch).
EpochEmbedding apply_rotation(const EpochEmbedding& e, const RotationMatrix& r);

struct AlignOptions {
  /// Re-normalise rows after rotation.
  bool renormalize = true;
  /// Epochs sharing fewer words than this with the reference get a warning.
  std::size_t min_shared = 0;
};

struct EpochDiagnostics {
  std::size_t shared = 0;
  std::size_t rank = 0;
  double min_singular_value = 0.0;
  double orthogonality_defect = 0.0;
  std::vector<std::string> warnings;
};

/// Every epoch rotated into the reference epoch's coordinates.
class AlignedSeries {
 public:
  AlignedSeries() = default;
  /// Throws Error(missing_reference_epoch) or Error(precondition) when rotations and epochs disagree.
  AlignedSeries(Epoch reference, EmbeddingSeries epochs, std::map<Epoch, RotationMatrix> rotations,
                std::map<Epoch, EpochDiagnostics> diagnostics = {});

  Epoch reference() const noexcept { return reference_; }
  const EmbeddingSeries& epochs() const noexcept { return epochs_; }
  const std::map<Epoch, RotationMatrix>& rotations() const noexcept { return rotations_; }
  /// Empty for series read back from disk.
  const std::map<Epoch, EpochDiagnostics>& diagnostics() const noexcept { return diagnostics_; }

  const EpochEmbedding* find(Epoch epoch) const { return epochs_.find(epoch); }
  const RotationMatrix& rotation(Epoch epoch) const;

 private:
  Epoch reference_;
  EmbeddingSeries epochs_;
  std::map<Epoch, RotationMatrix> rotations_;
  std::map<Epoch, EpochDiagnostics> diagnostics_;
};

/// Aligns every epoch directly to `reference`, fitting on the shared vocabulary and rotating all rows.
/// Throws Error(missing_reference_epoch) and Error(alignment_impossible) (no shared words).
AlignedSeries align_series(const EmbeddingSeries& series, Epoch reference, const AlignOptions& options = {});

// "ROT1" rotation file: magic | u32 LE dim | dim*dim binary64 LE, row-major.
void save_rotation(const linalg::Matrix& q, std::ostream& out);
linalg::Matrix load_rotation(std::istream& in);

/// Directory layout: manifest.tsv, reference.txt, <year>.dwe and <year>.rot per epoch.
void save_aligned(const AlignedSeries& aligned, const std::filesystem::path& dir);
AlignedSeries load_aligned(const std::filesystem::path& dir);

}  // namespace dwe
