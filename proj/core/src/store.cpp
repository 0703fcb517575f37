#include "dwe/store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

#include "dwe/error.hpp"

namespace dwe {

std::string to_string(Epoch epoch) { return std::to_string(epoch.start_year); }

bool is_valid_token(std::string_view token) noexcept {
  if (token.empty()) return false;
  return std::none_of(token.begin(), token.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  });
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> words) {
  Builder builder;
  builder.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!is_valid_token(words[i])) {
      throw Error(ErrorKind::invalid_token, "token #" + std::to_string(i) + " is empty or contains whitespace");
    }
    std::string copy = words[i];
    if (!builder.add(std::move(words[i]))) {
      throw Error(ErrorKind::duplicate_token, "token '" + copy + "' appears more than once");
    }
  }
  *this = std::move(builder).build();
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::Builder::reserve(std::size_t n) {
  vocab_.words_.reserve(n);
  vocab_.index_.reserve(n);
}

bool Vocabulary::Builder::add(std::string token) {
  auto [it, inserted] = vocab_.index_.try_emplace(token, vocab_.words_.size());
  if (!inserted) return false;
  vocab_.words_.push_back(std::move(token));
  return true;
}

Vocabulary Vocabulary::Builder::build() && { return std::move(vocab_); }

// ---------------------------------------------------------------------------
// EmbeddingMatrix

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim)
    : EmbeddingMatrix(rows, dim, std::vector<float>(rows * dim, 0.0f)) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw Error(ErrorKind::shape_mismatch, "embedding dim must be at least 1");
  if (values_.size() != rows_ * dim_) {
    throw Error(ErrorKind::shape_mismatch, "expected " + std::to_string(rows_ * dim_) + " values for " +
                                               std::to_string(rows_) + "x" + std::to_string(dim_) + ", got " +
                                               std::to_string(values_.size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorKind::non_finite, "row " + std::to_string(i / dim_) + " component " +
                                             std::to_string(i % dim_) + " is not finite");
    }
  }
}

bool bit_equal(const EmbeddingMatrix& a, const EmbeddingMatrix& b) noexcept {
  if (a.rows() != b.rows() || a.dim() != b.dim()) return false;
  auto va = a.values();
  auto vb = b.values();
  return va.empty() || std::memcmp(va.data(), vb.data(), va.size_bytes()) == 0;
}

// ---------------------------------------------------------------------------
// EpochEmbedding / EmbeddingSeries

EpochEmbedding::EpochEmbedding(Epoch epoch, Vocabulary vocab, EmbeddingMatrix matrix)
    : epoch_(epoch), vocab_(std::move(vocab)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != vocab_.size()) {
    throw Error(ErrorKind::shape_mismatch, "epoch " + to_string(epoch_) + ": " + std::to_string(matrix_.rows()) +
                                               " rows for " + std::to_string(vocab_.size()) + " words");
  }
}

std::optional<std::span<const float>> vector_of(const EpochEmbedding& e, std::string_view word) {
  auto idx = e.vocab().find(word);
  if (!idx) return std::nullopt;
  return e.matrix().row(*idx);
}

void EmbeddingSeries::insert(EpochEmbedding e) {
  if (auto d = dim(); d && *d != e.dim()) {
    throw Error(ErrorKind::shape_mismatch, "epoch " + to_string(e.epoch()) + " has dim " + std::to_string(e.dim()) +
                                               ", series has dim " + std::to_string(*d));
  }
  const Epoch key = e.epoch();
  auto [it, inserted] = epochs_.try_emplace(key, std::move(e));
  if (!inserted) throw Error(ErrorKind::precondition, "epoch " + to_string(key) + " already present in series");
}

const EpochEmbedding* EmbeddingSeries::find(Epoch epoch) const {
  auto it = epochs_.find(epoch);
  return it == epochs_.end() ? nullptr : &it->second;
}

std::optional<std::size_t> EmbeddingSeries::dim() const {
  if (epochs_.empty()) return std::nullopt;
  return epochs_.begin()->second.dim();
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string slurp(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::io, "read failed");
  return std::move(ss).str();
}

template <class Int>
bool parse_uint(std::string_view s, Int& out) {
  if (s.empty() || s.front() < '0' || s.front() > '9') return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// Parses one float that must end at `end` or at a ' '. Returns pointer past the value.
const char* parse_component(const char* first, const char* last, float& out, std::size_t line) {
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec == std::errc::result_out_of_range) {
    // Overflow is non-finite; underflow rounds to a denormal or zero.
    double wide = 0.0;
    auto [wptr, wec] = std::from_chars(first, last, wide);
    if (wec != std::errc{} || !std::isfinite(wide) ||
        std::fabs(wide) > static_cast<double>(std::numeric_limits<float>::max())) {
      throw ParseError(ErrorKind::non_finite, line, "value out of 32-bit float range");
    }
    out = static_cast<float>(wide);
    ptr = wptr;
  } else if (ec != std::errc{} || ptr == first) {
    throw ParseError(ErrorKind::malformed_record, line, "cannot parse value '" +
                                                            std::string(first, std::find(first, last, ' ')) + "'");
  }
  if (!std::isfinite(out)) throw ParseError(ErrorKind::non_finite, line, "value is NaN or Inf");
  return ptr;
}

}  // namespace

EpochEmbedding load_text(std::istream& in, Epoch epoch) {
  const std::string data = slurp(in);
  const char* cur = data.data();
  const char* const end = data.data() + data.size();

  auto next_line = [&](std::string_view& line) -> bool {
    if (cur == end) return false;
    const char* nl = static_cast<const char*>(std::memchr(cur, '\n', static_cast<std::size_t>(end - cur)));
    const char* stop = nl ? nl : end;
    line = std::string_view(cur, static_cast<std::size_t>(stop - cur));
    cur = nl ? nl + 1 : end;
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError(ErrorKind::malformed_header, 1, "empty input");
  const auto space = line.find(' ');
  std::uint64_t count = 0;
  std::size_t dim = 0;
  if (space == std::string_view::npos || !parse_uint(line.substr(0, space), count) ||
      !parse_uint(line.substr(space + 1), dim)) {
    throw ParseError(ErrorKind::malformed_header, 1, "expected '<count> <dim>', got '" + std::string(line) + "'");
  }
  if (dim == 0) throw ParseError(ErrorKind::malformed_header, 1, "dim must be at least 1");

  Vocabulary::Builder vocab;
  std::vector<float> values;
  const auto hint = static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20));
  vocab.reserve(hint);
  values.reserve(hint * dim);

  std::size_t line_no = 1;
  for (std::uint64_t r = 0; r < count; ++r) {
    ++line_no;
    if (!next_line(line)) {
      throw ParseError(ErrorKind::count_mismatch, line_no,
                       "header declares " + std::to_string(count) + " words, found " + std::to_string(r));
    }
    const auto tok_end = line.find(' ');
    const std::string_view token = line.substr(0, tok_end);
    if (!is_valid_token(token)) {
      throw ParseError(ErrorKind::invalid_token, line_no, "token is empty or contains whitespace");
    }
    const char* p = tok_end == std::string_view::npos ? line.data() + line.size() : line.data() + tok_end;
    const char* const lend = line.data() + line.size();
    std::size_t n = 0;
    while (p != lend) {
      ++p;  // the single separating space
      if (p == lend || *p == ' ') throw ParseError(ErrorKind::malformed_record, line_no, "empty field");
      if (n == dim) {
        throw ParseError(ErrorKind::dim_mismatch, line_no, "more than " + std::to_string(dim) + " values");
      }
      float v = 0.0f;
      p = parse_component(p, lend, v, line_no);
      if (p != lend && *p != ' ') {
        throw ParseError(ErrorKind::malformed_record, line_no, "unexpected character after value");
      }
      values.push_back(v);
      ++n;
    }
    if (n != dim) {
      throw ParseError(ErrorKind::dim_mismatch, line_no,
                       "expected " + std::to_string(dim) + " values, found " + std::to_string(n));
    }
    if (!vocab.add(std::string(token))) {
      throw ParseError(ErrorKind::duplicate_token, line_no, "token '" + std::string(token) + "' repeated");
    }
  }
  if (next_line(line)) {
    throw ParseError(ErrorKind::count_mismatch, line_no + 1,
                     "content after the " + std::to_string(count) + " declared words");
  }
  const std::size_t rows = vocab.size();
  return EpochEmbedding(epoch, std::move(vocab).build(), EmbeddingMatrix(rows, dim, std::move(values)));
}

void save_text(const EpochEmbedding& e, std::ostream& out) {
  std::string buf;
  buf += std::to_string(e.size());
  buf += ' ';
  buf += std::to_string(e.dim());
  buf += '\n';
  std::array<char, 64> num{};
  for (std::size_t i = 0; i < e.size(); ++i) {
    buf += e.vocab()[i];
    for (float v : e.matrix().row(i)) {
      auto [ptr, ec] = std::to_chars(num.data(), num.data() + num.size(), v);
      buf += ' ';
      buf.append(num.data(), ptr);
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::io, "write failed");
}

// ---------------------------------------------------------------------------
// Native format

namespace {

constexpr std::array<char, 4> kNativeMagic{'D', 'W', 'E', '1'};

template <class UInt>
void put_le(std::string& buf, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) buf += static_cast<char>((v >> (8 * i)) & 0xFF);
}

template <class UInt>
UInt get_le(const unsigned char* p) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(p[i]) << (8 * i);
  return v;
}

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  void read(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      if (in_.bad()) throw Error(ErrorKind::io, "read failed");
      throw Error(ErrorKind::truncated, std::string("stream ended inside ") + what);
    }
  }

  template <class UInt>
  UInt read_le(const char* what) {
    std::array<unsigned char, sizeof(UInt)> b{};
    read(b.data(), b.size(), what);
    return get_le<UInt>(b.data());
  }

 private:
  std::istream& in_;
};

}  // namespace

EpochEmbedding load_native(std::istream& in, Epoch epoch) {
  ByteReader reader(in);
  std::array<char, 4> magic{};
  reader.read(magic.data(), magic.size(), "magic");
  if (magic != kNativeMagic) throw Error(ErrorKind::bad_magic, "not a DWE1 file");
  const auto version = reader.read_le<std::uint16_t>("header");
  if (version != kNativeVersion) {
    throw Error(ErrorKind::unsupported_version, "DWE1 version " + std::to_string(version));
  }
  const auto dim = reader.read_le<std::uint32_t>("header");
  const auto count = reader.read_le<std::uint64_t>("header");
  if (dim == 0) throw Error(ErrorKind::shape_mismatch, "dim must be at least 1");

  Vocabulary::Builder vocab;
  std::vector<float> values;
  const auto hint = static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20));
  vocab.reserve(hint);
  values.reserve(hint * dim);
  std::vector<unsigned char> raw(static_cast<std::size_t>(dim) * 4);

  for (std::uint64_t r = 0; r < count; ++r) {
    const auto len = reader.read_le<std::uint16_t>("record");
    std::string token(len, '\0');
    reader.read(token.data(), len, "token");
    if (!is_valid_token(token)) {
      throw Error(ErrorKind::invalid_token, "record " + std::to_string(r) + ": token is empty or contains whitespace");
    }
    reader.read(raw.data(), raw.size(), "vector");
    for (std::size_t j = 0; j < dim; ++j) {
      const float v = std::bit_cast<float>(get_le<std::uint32_t>(raw.data() + 4 * j));
      if (!std::isfinite(v)) throw Error(ErrorKind::non_finite, "record " + std::to_string(r) + " has NaN or Inf");
      values.push_back(v);
    }
    if (!vocab.add(std::move(token))) {
      throw Error(ErrorKind::duplicate_token, "record " + std::to_string(r) + ": token repeated");
    }
  }
  const std::size_t rows = vocab.size();
  return EpochEmbedding(epoch, std::move(vocab).build(), EmbeddingMatrix(rows, dim, std::move(values)));
}

void save_native(const EpochEmbedding& e, std::ostream& out) {
  if (e.dim() > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorKind::precondition, "dim exceeds u32");
  std::string buf(kNativeMagic.begin(), kNativeMagic.end());
  put_le<std::uint16_t>(buf, kNativeVersion);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(e.dim()));
  put_le<std::uint64_t>(buf, e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const std::string& token = e.vocab()[i];
    if (token.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorKind::precondition, "token longer than 65535 bytes");
    }
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(token.size()));
    buf += token;
    for (float v : e.matrix().row(i)) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::io, "write failed");
}

FileFormat detect_format(std::istream& in) {
  std::array<char, 4> head{};
  const auto start = in.tellg();
  in.read(head.data(), head.size());
  const bool native = in.gcount() == 4 && head == kNativeMagic;
  in.clear();
  in.seekg(start);
  return native ? FileFormat::native : FileFormat::text;
}

FileFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".dwe" ? FileFormat::native : FileFormat::text;
}

EpochEmbedding load_embedding_file(const std::filesystem::path& path, Epoch epoch) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  try {
    return detect_format(in) == FileFormat::native ? load_native(in, epoch) : load_text(in, epoch);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.line(), path.string() + ": " + e.detail());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

void save_embedding_file(const EpochEmbedding& e, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot create " + path.string());
  if (format_for_path(path) == FileFormat::native) {
    save_native(e, out);
  } else {
    save_text(e, out);
  }
}

// ---------------------------------------------------------------------------
// Manifest

std::vector<ManifestEntry> read_manifest(std::istream& in) {
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    int year = 0;
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw ParseError(ErrorKind::malformed_record, line_no, "expected '<year>\\t<path>'");
    }
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, year);
    if (ec != std::errc{} || ptr != line.data() + tab) {
      throw ParseError(ErrorKind::malformed_record, line_no, "bad year '" + line.substr(0, tab) + "'");
    }
    if (!entries.empty() && !(entries.back().epoch.start_year < year)) {
      throw ParseError(ErrorKind::malformed_record, line_no, "years must be strictly ascending");
    }
    entries.push_back({Epoch{year}, std::filesystem::path(line.substr(tab + 1))});
  }
  if (in.bad()) throw Error(ErrorKind::io, "manifest read failed");
  return entries;
}

void write_manifest(std::span<const ManifestEntry> entries, std::ostream& out) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && !(entries[i - 1].epoch < entries[i].epoch)) {
      throw Error(ErrorKind::precondition, "manifest epochs must be strictly ascending");
    }
    out << entries[i].epoch.start_year << '\t' << entries[i].path.generic_string() << '\n';
  }
  out.flush();
  if (!out) throw Error(ErrorKind::io, "manifest write failed");
}

EmbeddingSeries load_series(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::io, "cannot open manifest " + manifest_path.string());
  const auto base = manifest_path.parent_path();
  EmbeddingSeries series;
  for (const auto& entry : read_manifest(in)) {
    const auto path = entry.path.is_absolute() ? entry.path : base / entry.path;
    series.insert(load_embedding_file(path, entry.epoch));
  }
  return series;
}

void save_series(const EmbeddingSeries& series, const std::filesystem::path& manifest_path, FileFormat format) {
  const auto base = manifest_path.parent_path();
  if (!base.empty()) std::filesystem::create_directories(base);
  std::vector<ManifestEntry> entries;
  for (const auto& [epoch, e] : series) {
    std::filesystem::path name = to_string(epoch) + (format == FileFormat::native ? ".dwe" : ".txt");
    save_embedding_file(e, base / name);
    entries.push_back({epoch, name});
  }
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot create manifest " + manifest_path.string());
  write_manifest(entries, out);
}

}  // namespace dwe
