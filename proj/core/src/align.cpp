#include "dwe/align.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

#include "dwe/error.hpp"
#include "dwe/preprocess.hpp"

namespace dwe {

ProcrustesFit procrustes(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.rows() != b.rows() || a.dim() != b.dim()) {
    throw Error(ErrorKind::shape_mismatch, "procrustes: " + std::to_string(a.rows()) + "x" + std::to_string(a.dim()) +
                                               " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.dim()));
  }
  if (a.rows() == 0) throw Error(ErrorKind::shape_mismatch, "procrustes needs at least one paired row");

  const linalg::Matrix m = linalg::matmul_t(a, b);
  linalg::SvdResult s = linalg::svd(m);

  ProcrustesFit fit;
  fit.q = linalg::multiply(s.u, linalg::transpose(s.v));
  const double threshold = (s.sigma.empty() ? 0.0 : s.sigma.front()) * static_cast<double>(s.sigma.size()) *
                           std::numeric_limits<double>::epsilon() * 16.0;
  for (double sv : s.sigma)
    if (sv > threshold) ++fit.rank;
  fit.singular_values = std::move(s.sigma);
  return fit;
}

EpochEmbedding apply_rotation(const EpochEmbedding& e, const RotationMatrix& r) {
  const std::size_t d = e.dim();
  if (r.q.rows() != d || r.q.cols() != d) {
    throw Error(ErrorKind::shape_mismatch, "rotation is " + std::to_string(r.q.rows()) + "x" +
                                               std::to_string(r.q.cols()) + ", embedding dim is " + std::to_string(d));
  }
  if (r.source_epoch != e.epoch()) {
    throw Error(ErrorKind::epoch_mismatch, "rotation for epoch " + to_string(r.source_epoch) +
                                               " applied to epoch " + to_string(e.epoch()));
  }
  std::vector<float> out(e.size() * d);
  std::vector<double> acc(d);
  for (std::size_t row = 0; row < e.size(); ++row) {
    auto src = e.matrix().row(row);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double x = src[i];
      auto qrow = r.q.row(i);
      for (std::size_t j = 0; j < d; ++j) acc[j] += x * qrow[j];
    }
    float* dst = out.data() + row * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] = static_cast<float>(acc[j]);
  }
  return EpochEmbedding(e.epoch(), e.vocab(), EmbeddingMatrix(e.size(), d, std::move(out)));
}

// ---------------------------------------------------------------------------

AlignedSeries::AlignedSeries(Epoch reference, EmbeddingSeries epochs, std::map<Epoch, RotationMatrix> rotations,
                             std::map<Epoch, EpochDiagnostics> diagnostics)
    : reference_(reference),
      epochs_(std::move(epochs)),
      rotations_(std::move(rotations)),
      diagnostics_(std::move(diagnostics)) {
  if (!epochs_.find(reference_)) {
    throw Error(ErrorKind::missing_reference_epoch, "reference epoch " + to_string(reference_) + " not in series");
  }
  if (rotations_.size() != epochs_.size()) {
    throw Error(ErrorKind::precondition, "aligned series needs exactly one rotation per epoch");
  }
  for (const auto& [epoch, e] : epochs_) {
    auto it = rotations_.find(epoch);
    if (it == rotations_.end()) throw Error(ErrorKind::precondition, "no rotation for epoch " + to_string(epoch));
    if (it->second.q.rows() != e.dim() || it->second.q.cols() != e.dim()) {
      throw Error(ErrorKind::shape_mismatch, "rotation for epoch " + to_string(epoch) + " has the wrong size");
    }
  }
}

const RotationMatrix& AlignedSeries::rotation(Epoch epoch) const {
  auto it = rotations_.find(epoch);
  if (it == rotations_.end()) throw Error(ErrorKind::precondition, "no rotation for epoch " + to_string(epoch));
  return it->second;
}

AlignedSeries align_series(const EmbeddingSeries& series, Epoch reference, const AlignOptions& options) {
  const EpochEmbedding* target = series.find(reference);
  if (!target) {
    throw Error(ErrorKind::missing_reference_epoch, "reference epoch " + to_string(reference) + " not in series");
  }
  const std::size_t d = target->dim();

  EmbeddingSeries aligned;
  std::map<Epoch, RotationMatrix> rotations;
  std::map<Epoch, EpochDiagnostics> diagnostics;

  for (const auto& [epoch, source] : series) {
    EpochDiagnostics diag;
    if (epoch == reference) {
      rotations.emplace(epoch, RotationMatrix{linalg::Matrix::identity(d), epoch, reference});
      aligned.insert(options.renormalize ? normalize_rows(source) : source);
      diag.shared = source.size();
      diag.rank = d;
      diag.min_singular_value = 1.0;
      diagnostics.emplace(epoch, std::move(diag));
      continue;
    }

    const auto shared = shared_vocabulary(source, *target);
    if (shared.empty()) {
      throw Error(ErrorKind::alignment_impossible,
                  "epoch " + to_string(epoch) + " shares no words with reference " + to_string(reference));
    }
    const auto pair = paired_submatrices(source, *target, shared);
    ProcrustesFit fit = procrustes(pair.source, pair.target);

    diag.shared = shared.size();
    diag.rank = fit.rank;
    diag.min_singular_value = fit.singular_values.back();
    diag.orthogonality_defect = linalg::orthogonality_defect(fit.q);
    if (fit.rank_deficient()) {
      diag.warnings.push_back("epoch " + to_string(epoch) + ": cross-covariance has rank " + std::to_string(fit.rank) +
                              " < " + std::to_string(d) + "; rotation is not unique");
    }
    if (shared.size() < options.min_shared) {
      diag.warnings.push_back("epoch " + to_string(epoch) + ": only " + std::to_string(shared.size()) +
                              " shared words with the reference");
    }

    RotationMatrix r{std::move(fit.q), epoch, reference};
    EpochEmbedding rotated = apply_rotation(source, r);
    aligned.insert(options.renormalize ? normalize_rows(rotated) : std::move(rotated));
    rotations.emplace(epoch, std::move(r));
    diagnostics.emplace(epoch, std::move(diag));
  }
  return AlignedSeries(reference, std::move(aligned), std::move(rotations), std::move(diagnostics));
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr std::array<char, 4> kRotMagic{'R', 'O', 'T', '1'};

}  // namespace

void save_rotation(const linalg::Matrix& q, std::ostream& out) {
  if (!q.is_square()) throw Error(ErrorKind::shape_mismatch, "rotation must be square");
  std::string buf(kRotMagic.begin(), kRotMagic.end());
  const auto dim = static_cast<std::uint32_t>(q.rows());
  for (int i = 0; i < 4; ++i) buf += static_cast<char>((dim >> (8 * i)) & 0xFF);
  for (double v : q.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf += static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::io, "rotation write failed");
}

linalg::Matrix load_rotation(std::istream& in) {
  auto read = [&](void* dst, std::size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw Error(ErrorKind::truncated, std::string("rotation file ended inside ") + what);
    }
  };
  std::array<char, 4> magic{};
  read(magic.data(), magic.size(), "magic");
  if (magic != kRotMagic) throw Error(ErrorKind::bad_magic, "not a ROT1 file");
  std::array<unsigned char, 4> db{};
  read(db.data(), db.size(), "header");
  std::uint32_t dim = 0;
  for (int i = 0; i < 4; ++i) dim |= static_cast<std::uint32_t>(db[i]) << (8 * i);

  const std::size_t n = static_cast<std::size_t>(dim) * dim;
  std::vector<unsigned char> raw(n * 8);
  read(raw.data(), raw.size(), "matrix");
  std::vector<double> values(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(raw[k * 8 + i]) << (8 * i);
    values[k] = std::bit_cast<double>(bits);
    if (!std::isfinite(values[k])) throw Error(ErrorKind::non_finite, "rotation contains NaN or Inf");
  }
  return linalg::Matrix(dim, dim, std::move(values));
}

void save_aligned(const AlignedSeries& aligned, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (const auto& [epoch, e] : aligned.epochs()) {
    const std::string stem = to_string(epoch);
    save_embedding_file(e, dir / (stem + ".dwe"));
    std::ofstream rot(dir / (stem + ".rot"), std::ios::binary | std::ios::trunc);
    if (!rot) throw Error(ErrorKind::io, "cannot create " + (dir / (stem + ".rot")).string());
    save_rotation(aligned.rotation(epoch).q, rot);
    entries.push_back({epoch, stem + ".dwe"});
  }
  std::ofstream manifest(dir / "manifest.tsv", std::ios::trunc);
  if (!manifest) throw Error(ErrorKind::io, "cannot create " + (dir / "manifest.tsv").string());
  write_manifest(entries, manifest);
  std::ofstream ref(dir / "reference.txt", std::ios::trunc);
  ref << aligned.reference().start_year << '\n';
  if (!ref) throw Error(ErrorKind::io, "cannot write " + (dir / "reference.txt").string());
}

AlignedSeries load_aligned(const std::filesystem::path& dir) {
  std::ifstream ref(dir / "reference.txt");
  if (!ref) throw Error(ErrorKind::io, "not an aligned-series directory: " + dir.string());
  int year = 0;
  if (!(ref >> year)) throw Error(ErrorKind::malformed_record, (dir / "reference.txt").string() + ": bad year");
  const Epoch reference{year};

  EmbeddingSeries series = load_series(dir / "manifest.tsv");
  std::map<Epoch, RotationMatrix> rotations;
  for (const auto& [epoch, e] : series) {
    const auto path = dir / (to_string(epoch) + ".rot");
    std::ifstream rot(path, std::ios::binary);
    if (!rot) throw Error(ErrorKind::io, "cannot open " + path.string());
    rotations.emplace(epoch, RotationMatrix{load_rotation(rot), epoch, reference});
  }
  return AlignedSeries(reference, std::move(series), std::move(rotations));
}

}  // namespace dwe
