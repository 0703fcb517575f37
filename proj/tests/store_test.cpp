#include "dwe/store.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "dwe/error.hpp"
#include "test_support.hpp"

namespace dwe {
namespace {

using testing::make_embedding;
using testing::random_embedding;
using testing::TempDir;

EpochEmbedding parse(const std::string& text, Epoch epoch = {1800}) {
  std::istringstream in(text);
  return load_text(in, epoch);
}

std::string to_text(const EpochEmbedding& e) {
  std::ostringstream out;
  save_text(e, out);
  return out.str();
}

std::string to_native(const EpochEmbedding& e) {
  std::ostringstream out(std::ios::binary);
  save_native(e, out);
  return out.str();
}

EpochEmbedding from_native(const std::string& bytes, Epoch epoch = {}) {
  std::istringstream in(bytes, std::ios::binary);
  return load_native(in, epoch);
}

template <class Fn>
void expect_parse_error(Fn&& fn, ErrorKind kind, std::size_t line) {
  try {
    fn();
    FAIL() << "expected " << to_string(kind);
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
    EXPECT_EQ(e.line(), line) << e.what();
  }
}

template <class Fn>
void expect_error(Fn&& fn, ErrorKind kind) {
  try {
    fn();
    FAIL() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

// Random finite floats from raw bit patterns: denormals, -0, huge and tiny magnitudes.
EpochEmbedding random_bits_embedding(std::mt19937_64& gen, std::size_t rows, std::size_t dim) {
  std::vector<std::string> words;
  std::vector<float> values;
  for (std::size_t i = 0; i < rows; ++i) {
    words.push_back("w" + std::to_string(i) + "_\xc3\xa9");
    for (std::size_t j = 0; j < dim; ++j) {
      float v;
      do {
        v = std::bit_cast<float>(static_cast<std::uint32_t>(gen()));
      } while (!std::isfinite(v));
      values.push_back(v);
    }
  }
  return make_embedding(std::move(words), dim, std::move(values));
}

// ---------------------------------------------------------------------------

TEST(Vocabulary, IndexMatchesPosition) {
  Vocabulary v({"a", "b", "c"});
  ASSERT_EQ(v.size(), 3u);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.find(v[i]), i);
  EXPECT_FALSE(v.find("zzz"));
}

TEST(Vocabulary, RejectsDuplicatesAndWhitespace) {
  expect_error([] { Vocabulary({"a", "b", "a"}); }, ErrorKind::duplicate_token);
  expect_error([] { Vocabulary({"a", "b c"}); }, ErrorKind::invalid_token);
  expect_error([] { Vocabulary({""}); }, ErrorKind::invalid_token);
  expect_error([] { Vocabulary({"tab\there"}); }, ErrorKind::invalid_token);
}

TEST(EmbeddingMatrix, RejectsNonFiniteAndBadShape) {
  expect_error([] { EmbeddingMatrix(1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()}); }, ErrorKind::non_finite);
  expect_error([] { EmbeddingMatrix(1, 2, {1.0f, std::numeric_limits<float>::infinity()}); }, ErrorKind::non_finite);
  expect_error([] { EmbeddingMatrix(2, 2, {1.0f, 2.0f, 3.0f}); }, ErrorKind::shape_mismatch);
  expect_error([] { EmbeddingMatrix(0, 0, {}); }, ErrorKind::shape_mismatch);
}

TEST(EpochEmbedding, RowsMustMatchVocabulary) {
  expect_error([] { EpochEmbedding({1800}, Vocabulary({"a"}), EmbeddingMatrix(2, 3)); }, ErrorKind::shape_mismatch);
}

TEST(EmbeddingSeries, SharedDimAndAscendingOrder) {
  EmbeddingSeries s;
  s.insert(make_embedding({"a"}, 2, {1, 0}, {1990}));
  s.insert(make_embedding({"a"}, 2, {0, 1}, {1800}));
  expect_error([&] { s.insert(make_embedding({"a"}, 3, {1, 0, 0}, {1850})); }, ErrorKind::shape_mismatch);
  expect_error([&] { s.insert(make_embedding({"b"}, 2, {1, 0}, {1800})); }, ErrorKind::precondition);
  std::vector<int> years;
  for (const auto& [epoch, e] : s) years.push_back(epoch.start_year);
  EXPECT_EQ(years, (std::vector<int>{1800, 1990}));
  EXPECT_EQ(s.dim(), 2u);
}

// ---------------------------------------------------------------------------
// Text format

TEST(TextFormat, LoadsLiteralExample) {
  const auto e = parse("2 3\na 1 0 0\nb 0 1 0\n");
  EXPECT_EQ(e.epoch(), Epoch{1800});
  EXPECT_EQ(e.vocab().words(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(e.matrix(), EmbeddingMatrix(2, 3, {1, 0, 0, 0, 1, 0}));
}

TEST(TextFormat, LoadsEmptyEmbedding) {
  const auto e = parse("0 5\n");
  EXPECT_EQ(e.size(), 0u);
  EXPECT_EQ(e.dim(), 5u);
}

TEST(TextFormat, KeepsFileOrder) {
  const auto e = parse("3 1\nzeta 1\nalpha 2\nmid 3\n");
  EXPECT_EQ(e.vocab().words(), (std::vector<std::string>{"zeta", "alpha", "mid"}));
}

TEST(TextFormat, DuplicateTokenReportsLine) {
  expect_parse_error([] { parse("2 2\na 1 2\na 3 4\n"); }, ErrorKind::duplicate_token, 3);
}

TEST(TextFormat, MalformedHeader) {
  for (const char* text : {"", "2\n", "x 3\n", "2  3\n", "2 3 4\n", "-1 3\n", "2 0\n", " 2 3\n"}) {
    expect_parse_error([&] { parse(text); }, ErrorKind::malformed_header, 1);
  }
}

TEST(TextFormat, CountMismatch) {
  expect_parse_error([] { parse("3 1\na 1\nb 2\n"); }, ErrorKind::count_mismatch, 4);
  expect_parse_error([] { parse("1 1\na 1\nb 2\n"); }, ErrorKind::count_mismatch, 3);
}

TEST(TextFormat, DimMismatch) {
  expect_parse_error([] { parse("1 3\na 1 2\n"); }, ErrorKind::dim_mismatch, 2);
  expect_parse_error([] { parse("2 2\na 1 2\nb 1 2 3\n"); }, ErrorKind::dim_mismatch, 3);
  expect_parse_error([] { parse("1 2\na\n"); }, ErrorKind::dim_mismatch, 2);
}

TEST(TextFormat, NonFiniteValuesRejected) {
  expect_parse_error([] { parse("1 2\na nan 1\n"); }, ErrorKind::non_finite, 2);
  expect_parse_error([] { parse("2 2\na 1 1\nb 1 inf\n"); }, ErrorKind::non_finite, 3);
  expect_parse_error([] { parse("1 1\na 1e50\n"); }, ErrorKind::non_finite, 2);
}

TEST(TextFormat, UnderflowRoundsToFloat) {
  const auto e = parse("1 2\na 1e-50 1e-40\n");
  EXPECT_EQ(e.matrix().row(0)[0], 0.0f);
  EXPECT_EQ(e.matrix().row(0)[1], static_cast<float>(1e-40));
}

TEST(TextFormat, SeparatorsAreStrict) {
  expect_parse_error([] { parse("1 2\na 1  2\n"); }, ErrorKind::malformed_record, 2);
  expect_parse_error([] { parse("1 2\na 1 2 \n"); }, ErrorKind::malformed_record, 2);
  expect_parse_error([] { parse("1 2\na 1 2\r\n"); }, ErrorKind::malformed_record, 2);
  expect_parse_error([] { parse("1 2\na 1 x\n"); }, ErrorKind::malformed_record, 2);
  expect_parse_error([] { parse("1 2\n 1 2\n"); }, ErrorKind::invalid_token, 2);
}

TEST(TextFormat, AcceptsMissingFinalNewline) {
  EXPECT_EQ(parse("1 2\na 1 2").size(), 1u);
}

TEST(TextFormat, SaveExamples) {
  EXPECT_EQ(to_text(EpochEmbedding({}, Vocabulary(), EmbeddingMatrix(0, 3))), "0 3\n");
  EXPECT_EQ(to_text(make_embedding({"a"}, 3, {1, 2, 3})), "1 3\na 1 2 3\n");
  EXPECT_EQ(to_text(make_embedding({"a"}, 3, {0.1f, -0.0f, 1e-3f})), "1 3\na 0.1 -0 0.001\n");
}

TEST(TextFormat, RandomInstancesAreByteStableAcrossRoundTrip) {
  std::mt19937_64 gen(20240101);
  const auto e = random_embedding(gen, 50, 10);
  const std::string first = to_text(e);
  const auto back = parse(first, e.epoch());
  EXPECT_EQ(to_text(back), first);
  EXPECT_TRUE(bit_equal(back.matrix(), e.matrix()));
  EXPECT_EQ(back.vocab(), e.vocab());
}

TEST(TextFormat, RoundTripPropertyOverSizesAndBitPatterns) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<std::size_t> rows(0, 1000);
  std::uniform_int_distribution<std::size_t> dims(1, 400);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = trial == 0 ? 0 : rows(gen);
    const std::size_t d = trial == 1 ? 400 : dims(gen);
    const auto e = random_bits_embedding(gen, n, d);
    const std::string text = to_text(e);
    const auto back = parse(text, e.epoch());
    ASSERT_TRUE(bit_equal(back.matrix(), e.matrix())) << n << "x" << d;
    ASSERT_EQ(back.vocab(), e.vocab());
    ASSERT_EQ(to_text(back), text);
  }
}

// ---------------------------------------------------------------------------
// Native format

TEST(NativeFormat, ExactByteLayout) {
  const auto e = make_embedding({"ab"}, 2, {1.0f, -2.0f});
  const std::string bytes = to_native(e);
  const unsigned char expected[] = {
      'D', 'W', 'E', '1',                      // magic
      0x01, 0x00,                              // version
      0x02, 0x00, 0x00, 0x00,                  // dim
      0x01, 0, 0, 0, 0, 0, 0, 0,               // count
      0x02, 0x00, 'a', 'b',                    // token
      0x00, 0x00, 0x80, 0x3F,                  // 1.0f
      0x00, 0x00, 0x00, 0xC0,                  // -2.0f
  };
  ASSERT_EQ(bytes.size(), sizeof expected);
  EXPECT_EQ(std::memcmp(bytes.data(), expected, sizeof expected), 0);
}

TEST(NativeFormat, RoundTripPropertyIsBitExact) {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<std::size_t> rows(0, 1000);
  std::uniform_int_distribution<std::size_t> dims(1, 400);
  for (int trial = 0; trial < 12; ++trial) {
    const auto e = random_bits_embedding(gen, trial == 0 ? 0 : rows(gen), dims(gen));
    const std::string bytes = to_native(e);
    const auto back = from_native(bytes, e.epoch());
    ASSERT_TRUE(bit_equal(back.matrix(), e.matrix()));
    ASSERT_EQ(back.vocab(), e.vocab());
    ASSERT_EQ(to_native(back), bytes);
  }
}

TEST(NativeFormat, BadMagic) {
  std::string bytes = to_native(make_embedding({"a"}, 1, {1}));
  bytes[0] = 'X';
  expect_error([&] { from_native(bytes); }, ErrorKind::bad_magic);
  expect_error([&] { from_native("1 1\na 1\n"); }, ErrorKind::bad_magic);
}

TEST(NativeFormat, UnsupportedVersion) {
  std::string bytes = to_native(make_embedding({"a"}, 1, {1}));
  bytes[4] = 2;
  expect_error([&] { from_native(bytes); }, ErrorKind::unsupported_version);
}

TEST(NativeFormat, EveryStrictPrefixIsTruncated) {
  const std::string bytes = to_native(make_embedding({"a", "bc"}, 3, {1, 2, 3, 4, 5, 6}));
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    expect_error([&] { from_native(bytes.substr(0, len)); }, ErrorKind::truncated);
  }
}

TEST(NativeFormat, DuplicateToken) {
  // Two records both named "a".
  std::string bytes = to_native(make_embedding({"a", "b"}, 1, {1, 2}));
  const auto pos = bytes.rfind('b');
  bytes[pos] = 'a';
  expect_error([&] { from_native(bytes); }, ErrorKind::duplicate_token);
}

TEST(NativeFormat, NonFinitePayloadRejected) {
  std::string bytes = to_native(make_embedding({"a"}, 1, {1}));
  const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int i = 0; i < 4; ++i) bytes[bytes.size() - 4 + i] = static_cast<char>((nan_bits >> (8 * i)) & 0xFF);
  expect_error([&] { from_native(bytes); }, ErrorKind::non_finite);
}

TEST(FileFormats, DetectAndDispatchByContent) {
  TempDir dir;
  const auto e = make_embedding({"a", "b"}, 2, {1, 2, 3, 4}, {1850});
  save_embedding_file(e, dir / "x.dwe");
  save_embedding_file(e, dir / "x.txt");
  std::ifstream native(dir / "x.dwe", std::ios::binary);
  EXPECT_EQ(detect_format(native), FileFormat::native);
  std::ifstream text(dir / "x.txt", std::ios::binary);
  EXPECT_EQ(detect_format(text), FileFormat::text);
  EXPECT_EQ(load_embedding_file(dir / "x.dwe", {1850}), e);
  EXPECT_EQ(load_embedding_file(dir / "x.txt", {1850}), e);
}

// ---------------------------------------------------------------------------

TEST(VectorOf, PresentAndAbsent) {
  const auto e = make_embedding({"a", "b"}, 2, {1, 2, 3, 4});
  auto a = vector_of(e, "a");
  ASSERT_TRUE(a);
  EXPECT_EQ(std::vector<float>(a->begin(), a->end()), (std::vector<float>{1, 2}));
  EXPECT_FALSE(vector_of(e, "zzz"));
}

TEST(VectorOf, MatchesMatrixRowForEveryWord) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto e = random_embedding(gen, 200, 7);
    for (std::size_t i = 0; i < e.size(); ++i) {
      auto v = vector_of(e, e.vocab()[i]);
      ASSERT_TRUE(v);
      EXPECT_EQ(v->data(), e.matrix().row(i).data());
    }
  }
}

// ---------------------------------------------------------------------------
// Manifest

TEST(Manifest, ReadWrite) {
  std::istringstream in("1800\ta.txt\n1810\tsub/b.dwe\n");
  const auto entries = read_manifest(in);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[1].epoch, Epoch{1810});
  EXPECT_EQ(entries[1].path, std::filesystem::path("sub/b.dwe"));
  std::ostringstream out;
  write_manifest(entries, out);
  EXPECT_EQ(out.str(), "1800\ta.txt\n1810\tsub/b.dwe\n");
}

TEST(Manifest, RejectsMalformedAndUnordered) {
  for (const char* text : {"1800 a.txt\n", "18x0\ta\n", "1810\ta\n1800\tb\n", "1800\ta\n1800\tb\n", "1800\t\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_manifest(in), ParseError) << text;
  }
}

TEST(Manifest, SeriesRoundTripResolvesRelativePaths) {
  TempDir dir;
  std::mt19937_64 gen(11);
  EmbeddingSeries s;
  s.insert(random_embedding(gen, 20, 4, {1800}));
  s.insert(random_embedding(gen, 25, 4, {1810}));
  save_series(s, dir / "series" / "manifest.tsv", FileFormat::text);
  const auto back = load_series(dir / "series" / "manifest.tsv");
  ASSERT_EQ(back.size(), 2u);
  for (const auto& [epoch, e] : s) {
    ASSERT_TRUE(back.find(epoch));
    EXPECT_TRUE(bit_equal(back.find(epoch)->matrix(), e.matrix()));
  }
}

}  // namespace
}  // namespace dwe
