#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dwe {

/// A time slice, labelled by its first year ("1800" is the 1800s decade).
struct Epoch {
  int start_year = 0;

  friend auto operator<=>(const Epoch&, const Epoch&) = default;
};

std::string to_string(Epoch epoch);

/// Tokens are non-empty and contain no ASCII whitespace.
bool is_valid_token(std::string_view token) noexcept;

/// Ordered, duplicate-free word list with O(1) lookup.
class Vocabulary {
 public:
  class Builder;

  Vocabulary() = default;

  /// Throws Error(duplicate_token | invalid_token).
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::string& operator[](std::size_t i) const { return words_[i]; }

  std::optional<std::size_t> find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };

  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

/// Incremental construction for loaders that must report where a duplicate occurred.
class Vocabulary::Builder {
 public:
  void reserve(std::size_t n);
  /// False when the token is already present. Token validity is the caller's concern.
  bool add(std::string token);
  std::size_t size() const noexcept { return vocab_.words_.size(); }
  Vocabulary build() &&;

 private:
  Vocabulary vocab_;
};

/// Row-major rows x dim block of finite 32-bit floats.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// Zero-filled.
  EmbeddingMatrix(std::size_t rows, std::size_t dim);
  /// Throws Error(shape_mismatch) on size or dim errors, Error(non_finite) on NaN/Inf.
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<const float> values() const noexcept { return values_; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 1;
  std::vector<float> values_;
};

/// Same shape and identical float bit patterns (distinguishes -0 from 0).
bool bit_equal(const EmbeddingMatrix& a, const EmbeddingMatrix& b) noexcept;

/// One epoch's vocabulary and its embedding rows; matrix.rows() == vocab.size().
class EpochEmbedding {
 public:
  EpochEmbedding() = default;
  EpochEmbedding(Epoch epoch, Vocabulary vocab, EmbeddingMatrix matrix);

  Epoch epoch() const noexcept { return epoch_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  const EmbeddingMatrix& matrix() const noexcept { return matrix_; }
  std::size_t size() const noexcept { return vocab_.size(); }
  std::size_t dim() const noexcept { return matrix_.dim(); }

  friend bool operator==(const EpochEmbedding&, const EpochEmbedding&) = default;

 private:
  Epoch epoch_;
  Vocabulary vocab_;
  EmbeddingMatrix matrix_;
};

/// The word's row, or nullopt when the word is not in the vocabulary.
std::optional<std::span<const float>> vector_of(const EpochEmbedding& e, std::string_view word);

/// Epoch-ordered embeddings sharing one dimension.
class EmbeddingSeries {
 public:
  using Map = std::map<Epoch, EpochEmbedding>;

  /// Throws Error(shape_mismatch) on a dim clash, Error(precondition) on a repeated epoch.
  void insert(EpochEmbedding e);

  const Map& epochs() const noexcept { return epochs_; }
  const EpochEmbedding* find(Epoch epoch) const;
  std::size_t size() const noexcept { return epochs_.size(); }
  bool empty() const noexcept { return epochs_.empty(); }
  std::optional<std::size_t> dim() const;

  Map::const_iterator begin() const { return epochs_.begin(); }
  Map::const_iterator end() const { return epochs_.end(); }

 private:
  Map epochs_;
};

// Text interchange format:
//   "<count> <dim>\n" then count lines "<token> <f1> ... <fdim>\n", single spaces.
EpochEmbedding load_text(std::istream& in, Epoch epoch);
void save_text(const EpochEmbedding& e, std::ostream& out);

// Native binary format "DWE1", all integers little-endian:
//   magic "DWE1" | u16 version=1 | u32 dim | u64 count |
//   count x (u16 token length | token bytes | dim x binary32)
inline constexpr std::uint16_t kNativeVersion = 1;
EpochEmbedding load_native(std::istream& in, Epoch epoch);
void save_native(const EpochEmbedding& e, std::ostream& out);

enum class FileFormat { text, native };

/// Peeks the stream's first bytes; native iff they are the DWE1 magic.
FileFormat detect_format(std::istream& in);

/// Loads either format, chosen by content.
EpochEmbedding load_embedding_file(const std::filesystem::path& path, Epoch epoch);
/// ".dwe" paths are written native, everything else as text.
void save_embedding_file(const EpochEmbedding& e, const std::filesystem::path& path);
FileFormat format_for_path(const std::filesystem::path& path);

/// One manifest line: "<start_year>\t<relative path>\n", ascending years.
struct ManifestEntry {
  Epoch epoch;
  std::filesystem::path path;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

std::vector<ManifestEntry> read_manifest(std::istream& in);
void write_manifest(std::span<const ManifestEntry> entries, std::ostream& out);

/// Reads the manifest and every file it names (relative to the manifest's directory).
EmbeddingSeries load_series(const std::filesystem::path& manifest_path);
/// Writes one file per epoch as "<year><ext>" next to the manifest.
void save_series(const EmbeddingSeries& series, const std::filesystem::path& manifest_path,
                 FileFormat format = FileFormat::native);

}  // namespace dwe
