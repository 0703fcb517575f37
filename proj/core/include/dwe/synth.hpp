#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dwe/linalg.hpp"
#include "dwe/query.hpp"
#include "dwe/store.hpp"

/// Seeded synthetic series with planted rotations and analogues, plus brute-force oracles.
///
/// Randomness is std::mt19937_64 (its output sequence is fixed by the C++ standard), turned
/// into doubles as (x >> 11) * 2^-53 and into normals by Box-Muller using both outputs.
/// docs/synth.md lists the stream order and test vectors.
namespace dwe::synth {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Haar-style random orthogonal matrix: Gram-Schmidt QR of a seeded Gaussian matrix with
/// the sign convention diag(R) > 0.
linalg::Matrix random_orthogonal(std::uint64_t seed, std::size_t d);

enum class RotationMode { random, identity };

struct SynthPlan {
  std::uint64_t seed = 0;
  std::size_t epochs = 20;
  int first_year = 1800;
  int year_step = 10;
  std::size_t vocab_size = 1000;
  std::size_t dim = 50;
  double noise_sigma = 0.0;
  /// How planted rotations are drawn when planted_rotations is empty.
  RotationMode rotation_mode = RotationMode::random;
  /// Explicit per-epoch rotations (one per epoch) overriding rotation_mode.
  std::vector<linalg::Matrix> planted_rotations;
  /// Named tokens placed at the front of the vocabulary; the rest are "w0", "w1", ...
  std::vector<std::string> words;
  /// concept -> token per epoch; the planted token's row is the rotated image of the concept.
  std::map<std::string, std::vector<std::string>> planted_analogues;
  /// Rows zeroed in every non-reference epoch (untrained words).
  std::size_t zero_rows = 0;
  /// Index of the reference epoch; the last epoch when unset.
  std::optional<std::size_t> reference_index;
};

/// Throws Error(invalid_plan).
void validate(const SynthPlan& plan);

Epoch epoch_at(const SynthPlan& plan, std::size_t t);
std::size_t reference_index(const SynthPlan& plan);
Epoch reference_epoch(const SynthPlan& plan);
std::vector<std::string> vocabulary(const SynthPlan& plan);

/// Seed of epoch t's random rotation: seed + 0x9E3779B97F4A7C15 * (t + 1), mod 2^64.
std::uint64_t rotation_seed(const SynthPlan& plan, std::size_t t);

/// One orthogonal matrix per epoch; identity at the reference epoch.
std::vector<linalg::Matrix> planted_rotations(const SynthPlan& plan);

/// Reference rows are unit Gaussians; epoch t is normalise(ref · R_tᵀ + noise) with planted
/// analogue and zero-row overrides. Aligning epoch t back onto the reference recovers R_t.
EmbeddingSeries gen_series(const SynthPlan& plan);

/// Full-sort top-n with the production score formula and tie rule; zero rows skipped.
std::vector<Neighbor> knn_oracle(const EpochEmbedding& e, std::span<const float> q, std::size_t n);

/// key = value text ("#" starts a comment). See docs/synth.md for keys.
SynthPlan parse_plan(std::istream& in);
SynthPlan load_plan(const std::string& path);
void write_plan(const SynthPlan& plan, std::ostream& out);

}  // namespace dwe::synth
