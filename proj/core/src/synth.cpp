#include "dwe/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "dwe/error.hpp"
#include "dwe/preprocess.hpp"

namespace dwe::synth {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::gaussian() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

linalg::Matrix random_orthogonal(std::uint64_t seed, std::size_t d) {
  if (d == 0) throw Error(ErrorKind::precondition, "random_orthogonal: d must be at least 1");
  Rng rng(seed);
  // Row j of `cols` is column j of the Gaussian matrix.
  linalg::Matrix g(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) g(i, j) = rng.gaussian();
  linalg::Matrix cols = linalg::transpose(g);

  for (std::size_t j = 0; j < d; ++j) {
    auto v = cols.row(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        auto u = cols.row(k);
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += u[i] * v[i];
        for (std::size_t i = 0; i < d; ++i) v[i] -= proj * u[i];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw Error(ErrorKind::numerical_failure, "random_orthogonal: degenerate Gaussian draw");
    for (double& x : v) x /= norm;
  }
  return linalg::transpose(cols);
}

// ---------------------------------------------------------------------------
// Plan

Epoch epoch_at(const SynthPlan& plan, std::size_t t) {
  return Epoch{plan.first_year + plan.year_step * static_cast<int>(t)};
}

std::size_t reference_index(const SynthPlan& plan) {
  return plan.reference_index.value_or(plan.epochs == 0 ? 0 : plan.epochs - 1);
}

Epoch reference_epoch(const SynthPlan& plan) { return epoch_at(plan, reference_index(plan)); }

std::vector<std::string> vocabulary(const SynthPlan& plan) {
  std::vector<std::string> words(plan.words.begin(), plan.words.end());
  std::set<std::string, std::less<>> taken(words.begin(), words.end());
  for (std::size_t i = 0; words.size() < plan.vocab_size; ++i) {
    std::string w = "w" + std::to_string(i);
    if (!taken.contains(w)) words.push_back(std::move(w));
  }
  return words;
}

void validate(const SynthPlan& plan) {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::invalid_plan, why); };
  if (plan.epochs == 0) fail("epochs must be at least 1");
  if (plan.vocab_size == 0) fail("vocab_size must be at least 1");
  if (plan.dim == 0) fail("dim must be at least 1");
  if (plan.year_step < 1) fail("year_step must be positive");
  if (!(plan.noise_sigma >= 0.0) || !std::isfinite(plan.noise_sigma)) fail("noise_sigma must be finite and >= 0");
  if (reference_index(plan) >= plan.epochs) fail("reference index outside the epoch range");
  if (plan.words.size() > plan.vocab_size) fail("more named words than vocab_size");
  {
    std::set<std::string, std::less<>> seen;
    for (const auto& w : plan.words) {
      if (!is_valid_token(w)) fail("invalid word '" + w + "'");
      if (!seen.insert(w).second) fail("duplicate word '" + w + "'");
    }
  }
  if (!plan.planted_rotations.empty()) {
    if (plan.planted_rotations.size() != plan.epochs) fail("need one planted rotation per epoch");
    for (const auto& r : plan.planted_rotations) {
      if (r.rows() != plan.dim || r.cols() != plan.dim) fail("planted rotation has the wrong size");
      if (linalg::orthogonality_defect(r) > 1e-6) fail("planted rotation is not orthogonal");
    }
  }

  const auto vocab = vocabulary(plan);
  const std::set<std::string, std::less<>> in_vocab(vocab.begin(), vocab.end());
  const std::size_t ref = reference_index(plan);
  for (const auto& [concept_word, tokens] : plan.planted_analogues) {
    if (!in_vocab.contains(concept_word)) fail("analogue concept '" + concept_word + "' not in vocab");
    if (tokens.size() != plan.epochs) fail("analogue '" + concept_word + "' needs one token per epoch");
    for (const auto& t : tokens)
      if (!in_vocab.contains(t)) fail("analogue token '" + t + "' not in vocab");
    if (tokens[ref] != concept_word) fail("analogue '" + concept_word + "' must plant the concept itself at the reference epoch");
  }
  for (std::size_t t = 0; t < plan.epochs; ++t) {
    std::set<std::string, std::less<>> planted;
    for (const auto& [concept_word, tokens] : plan.planted_analogues) {
      if (!planted.insert(tokens[t]).second) fail("token '" + tokens[t] + "' planted twice in one epoch");
    }
    std::set<std::string, std::less<>> reserved = planted;
    for (const auto& [concept_word, tokens] : plan.planted_analogues) reserved.insert(concept_word);
    if (t != ref && plan.zero_rows > vocab.size() - reserved.size()) fail("zero_rows exceeds the free vocabulary");
  }
}

std::uint64_t rotation_seed(const SynthPlan& plan, std::size_t t) {
  return plan.seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(t) + 1);
}

std::vector<linalg::Matrix> planted_rotations(const SynthPlan& plan) {
  if (!plan.planted_rotations.empty()) return plan.planted_rotations;
  std::vector<linalg::Matrix> out;
  const std::size_t ref = reference_index(plan);
  for (std::size_t t = 0; t < plan.epochs; ++t) {
    if (t == ref || plan.rotation_mode == RotationMode::identity) {
      out.push_back(linalg::Matrix::identity(plan.dim));
    } else {
      out.push_back(random_orthogonal(rotation_seed(plan, t), plan.dim));
    }
  }
  return out;
}

namespace {

void normalize(std::span<double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  if (s > 0.0)
    for (double& x : v) x /= s;
}

// out = row · Rᵀ
void rotate_transposed(std::span<const double> row, const linalg::Matrix& r, std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    double s = 0.0;
    auto rr = r.row(j);
    for (std::size_t i = 0; i < row.size(); ++i) s += row[i] * rr[i];
    out[j] = s;
  }
}

}  // namespace

EmbeddingSeries gen_series(const SynthPlan& plan) {
  validate(plan);
  const std::size_t n = plan.vocab_size;
  const std::size_t d = plan.dim;
  const std::size_t ref = reference_index(plan);
  const auto words = vocabulary(plan);
  const Vocabulary vocab(words);
  const auto rotations = planted_rotations(plan);

  Rng rng(plan.seed);
  linalg::Matrix base(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& x : base.row(i)) x = rng.gaussian();
    normalize(base.row(i));
  }

  auto narrow = [&](const linalg::Matrix& m, Epoch epoch) {
    std::vector<float> values(m.values().begin(), m.values().end());
    return EpochEmbedding(epoch, vocab, EmbeddingMatrix(n, d, std::move(values)));
  };

  EmbeddingSeries series;
  for (std::size_t t = 0; t < plan.epochs; ++t) {
    if (t == ref) {
      series.insert(narrow(base, epoch_at(plan, t)));
      continue;
    }
    const auto& r = rotations[t];
    linalg::Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = m.row(i);
      rotate_transposed(base.row(i), r, row);
      for (double& x : row) x += plan.noise_sigma * rng.gaussian();
      normalize(row);
    }

    std::set<std::size_t> reserved;
    std::set<std::size_t> planted;
    for (const auto& [concept_word, tokens] : plan.planted_analogues) {
      reserved.insert(*vocab.find(concept_word));
      planted.insert(*vocab.find(tokens[t]));
    }
    reserved.insert(planted.begin(), planted.end());
    // A concept whose row is not planted this epoch drifts elsewhere.
    for (const auto& [concept_word, tokens] : plan.planted_analogues) {
      const std::size_t ci = *vocab.find(concept_word);
      if (planted.contains(ci)) continue;
      for (double& x : m.row(ci)) x = rng.gaussian();
      normalize(m.row(ci));
    }
    for (const auto& [concept_word, tokens] : plan.planted_analogues) {
      rotate_transposed(base.row(*vocab.find(concept_word)), r, m.row(*vocab.find(tokens[t])));
    }

    if (plan.zero_rows > 0) {
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!reserved.contains(i)) free.push_back(i);
      for (std::size_t k = 0; k < plan.zero_rows; ++k) {
        const std::size_t pick = k + static_cast<std::size_t>(rng.next_u64() % (free.size() - k));
        std::swap(free[k], free[pick]);
        for (double& x : m.row(free[k])) x = 0.0;
      }
    }
    series.insert(narrow(m, epoch_at(plan, t)));
  }
  return series;
}

std::vector<Neighbor> knn_oracle(const EpochEmbedding& e, std::span<const float> q, std::size_t n) {
  if (q.size() != e.dim()) throw Error(ErrorKind::shape_mismatch, "knn_oracle: query dim differs from epoch dim");
  double qq = 0.0;
  for (float v : q) qq += static_cast<double>(v) * static_cast<double>(v);

  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < e.size(); ++i) {
    auto row = e.matrix().row(i);
    double rr = 0.0;
    for (float v : row) rr += static_cast<double>(v) * static_cast<double>(v);
    if (rr == 0.0) continue;
    double dot = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) dot += static_cast<double>(q[j]) * static_cast<double>(row[j]);
    all.push_back({e.vocab()[i], dot / (std::sqrt(qq) * std::sqrt(rr)), i});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  if (all.size() > n) all.resize(n);
  return all;
}

// ---------------------------------------------------------------------------
// Plan files

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_number(const std::string& value, std::size_t line, const std::string& key) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ParseError(ErrorKind::invalid_plan, line, "bad value for " + key + ": '" + value + "'");
  }
  return out;
}

}  // namespace

SynthPlan parse_plan(std::istream& in) {
  SynthPlan plan;
  std::optional<int> reference_year;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(ErrorKind::invalid_plan, line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));

    if (key == "seed") {
      plan.seed = parse_number<std::uint64_t>(value, line_no, key);
    } else if (key == "epochs") {
      plan.epochs = parse_number<std::size_t>(value, line_no, key);
    } else if (key == "first_year") {
      plan.first_year = parse_number<int>(value, line_no, key);
    } else if (key == "year_step") {
      plan.year_step = parse_number<int>(value, line_no, key);
    } else if (key == "vocab_size") {
      plan.vocab_size = parse_number<std::size_t>(value, line_no, key);
    } else if (key == "dim") {
      plan.dim = parse_number<std::size_t>(value, line_no, key);
    } else if (key == "noise_sigma") {
      plan.noise_sigma = parse_number<double>(value, line_no, key);
    } else if (key == "zero_rows") {
      plan.zero_rows = parse_number<std::size_t>(value, line_no, key);
    } else if (key == "reference_year") {
      reference_year = parse_number<int>(value, line_no, key);
    } else if (key == "rotations") {
      if (value == "random") {
        plan.rotation_mode = RotationMode::random;
      } else if (value == "identity") {
        plan.rotation_mode = RotationMode::identity;
      } else {
        throw ParseError(ErrorKind::invalid_plan, line_no, "rotations must be 'random' or 'identity'");
      }
    } else if (key == "words") {
      plan.words = split_list(value);
    } else if (key.starts_with("analogue.") && key.size() > 9) {
      plan.planted_analogues[key.substr(9)] = split_list(value);
    } else {
      throw ParseError(ErrorKind::invalid_plan, line_no, "unknown key '" + key + "'");
    }
  }
  if (reference_year) {
    const int offset = *reference_year - plan.first_year;
    if (plan.year_step < 1 || offset < 0 || offset % plan.year_step != 0) {
      throw Error(ErrorKind::invalid_plan, "reference_year " + std::to_string(*reference_year) + " is not an epoch");
    }
    plan.reference_index = static_cast<std::size_t>(offset / plan.year_step);
  }
  validate(plan);
  return plan;
}

SynthPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open plan " + path);
  return parse_plan(in);
}

void write_plan(const SynthPlan& plan, std::ostream& out) {
  if (!plan.planted_rotations.empty()) {
    throw Error(ErrorKind::precondition, "explicit planted rotations cannot be written to a plan file");
  }
  out << "seed = " << plan.seed << '\n'
      << "epochs = " << plan.epochs << '\n'
      << "first_year = " << plan.first_year << '\n'
      << "year_step = " << plan.year_step << '\n'
      << "reference_year = " << reference_epoch(plan).start_year << '\n'
      << "vocab_size = " << plan.vocab_size << '\n'
      << "dim = " << plan.dim << '\n';
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, plan.noise_sigma);
  out << "noise_sigma = " << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << '\n'
      << "rotations = " << (plan.rotation_mode == RotationMode::random ? "random" : "identity") << '\n'
      << "zero_rows = " << plan.zero_rows << '\n';
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  if (!plan.words.empty()) out << "words = " << join(plan.words) << '\n';
  for (const auto& [concept_word, tokens] : plan.planted_analogues) out << "analogue." << concept_word << " = " << join(tokens) << '\n';
  if (!out) throw Error(ErrorKind::io, "plan write failed");
}

}  // namespace dwe::synth
