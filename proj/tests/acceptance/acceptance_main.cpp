// Acceptance suite: one PASS/FAIL/SKIP line per criterion; nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "dwe/align.hpp"
#include "dwe/error.hpp"
#include "dwe/linalg.hpp"
#include "dwe/preprocess.hpp"
#include "dwe/query.hpp"
#include "dwe/synth.hpp"
#include "test_support.hpp"

namespace {

using namespace dwe;
using Clock = std::chrono::steady_clock;

struct Outcome {
  enum Status { pass, fail, skip } status;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(3);
  s << x;
  return s.str();
}

EmbeddingMatrix gaussian_block(synth::Rng& rng, std::size_t rows, std::size_t dim) {
  std::vector<float> v(rows * dim);
  for (auto& x : v) x = static_cast<float>(rng.gaussian());
  return EmbeddingMatrix(rows, dim, std::move(v));
}

double residual(const EmbeddingMatrix& a, const linalg::Matrix& q, const EmbeddingMatrix& b) {
  double s = 0;
  std::vector<double> row(q.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t k = 0; k < a.dim(); ++k) {
      const double x = a.row(i)[k];
      for (std::size_t j = 0; j < q.cols(); ++j) row[j] += x * q(k, j);
    }
    for (std::size_t j = 0; j < q.cols(); ++j) {
      const double d = row[j] - b.row(i)[j];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

double mean_shared_cosine(const EpochEmbedding& a, const EpochEmbedding& b) {
  const auto shared = shared_vocabulary(a, b);
  double sum = 0;
  for (const auto& w : shared) sum += cosine(*vector_of(a, w), *vector_of(b, w));
  return shared.empty() ? 0.0 : sum / static_cast<double>(shared.size());
}

// ---------------------------------------------------------------------------

Outcome planted_rotation() {
  const auto t0 = Clock::now();
  synth::SynthPlan plan;
  plan.seed = 1;
  plan.epochs = 2;
  plan.vocab_size = 1000;
  plan.dim = 50;
  plan.noise_sigma = 0.0;
  const auto series = synth::gen_series(plan);
  const auto r0 = synth::planted_rotations(plan)[0];
  const auto& source = *series.find(synth::epoch_at(plan, 0));
  const auto& target = *series.find(synth::reference_epoch(plan));
  const auto shared = shared_vocabulary(source, target);
  const auto pair = paired_submatrices(source, target, shared);
  const auto fit = procrustes(pair.source, pair.target);
  const double err = linalg::frobenius_norm(linalg::subtract(fit.q, r0));
  const auto aligned = align_series(series, synth::reference_epoch(plan));
  const double cos = mean_shared_cosine(*aligned.find(synth::epoch_at(plan, 0)), *aligned.find(synth::reference_epoch(plan)));
  const double secs = seconds_since(t0);
  const bool ok = err < 1e-4 && cos > 0.999 && secs < 1.0;
  return {ok ? Outcome::pass : Outcome::fail,
          "||Q-R0||_F=" + fmt(err) + " mean cosine=" + fmt(cos) + " time=" + fmt(secs) + "s"};
}

Outcome orthogonality_audit() {
  std::vector<EmbeddingSeries> inputs;
  for (double sigma : {0.0, 0.01, 0.3, 2.0}) {
    synth::SynthPlan p;
    p.seed = static_cast<std::uint64_t>(sigma * 1000) + 3;
    p.epochs = 4;
    p.vocab_size = 400;
    p.dim = 50;
    p.noise_sigma = sigma;
    p.zero_rows = 20;
    inputs.push_back(synth::gen_series(p));
  }
  synth::Rng rng(77);
  {
    // Unrelated random epochs.
    EmbeddingSeries s;
    for (int t = 0; t < 3; ++t) {
      std::vector<std::string> words;
      for (int i = 0; i < 300; ++i) words.push_back("w" + std::to_string(i));
      s.insert(EpochEmbedding({1800 + 10 * t}, Vocabulary(words), gaussian_block(rng, 300, 40)));
    }
    inputs.push_back(std::move(s));
  }
  {
    // Few shared words (rank-deficient cross product) and rows confined to a subspace.
    EmbeddingSeries s;
    std::vector<std::string> a, b;
    for (int i = 0; i < 200; ++i) a.push_back("a" + std::to_string(i));
    for (int i = 0; i < 200; ++i) b.push_back(i < 5 ? "a" + std::to_string(i) : "b" + std::to_string(i));
    s.insert(EpochEmbedding({1800}, Vocabulary(a), gaussian_block(rng, 200, 30)));
    auto low = gaussian_block(rng, 200, 30);
    std::vector<float> v(low.values().begin(), low.values().end());
    for (std::size_t i = 0; i < 200; ++i)
      for (std::size_t j = 3; j < 30; ++j) v[i * 30 + j] = 0.0f;
    for (std::size_t j = 0; j < 30; ++j) v[j] = 1.0f;  // keep every row nonzero
    s.insert(EpochEmbedding({1810}, Vocabulary(b), EmbeddingMatrix(200, 30, v)));
    inputs.push_back(std::move(s));
  }
  {
    // Tiny and 1-dimensional inputs.
    EmbeddingSeries s;
    s.insert(EpochEmbedding({1800}, Vocabulary({"x", "y"}), EmbeddingMatrix(2, 1, {1.0f, -2.0f})));
    s.insert(EpochEmbedding({1810}, Vocabulary({"y", "x"}), EmbeddingMatrix(2, 1, {3.0f, 0.5f})));
    inputs.push_back(std::move(s));
  }

  double worst_defect = 0, worst_sigma = 0;
  std::size_t count = 0;
  for (const auto& s : inputs) {
    for (const auto& [reference, unused] : s) {
      const auto aligned = align_series(s, reference);
      for (const auto& [epoch, rot] : aligned.rotations()) {
        worst_defect = std::max(worst_defect, linalg::orthogonality_defect(rot.q));
        for (double x : linalg::svd(rot.q).sigma) worst_sigma = std::max(worst_sigma, std::fabs(x - 1.0));
        ++count;
      }
    }
  }
  const bool ok = worst_defect < 1e-4 && worst_sigma < 1e-4;
  return {ok ? Outcome::pass : Outcome::fail, std::to_string(count) + " rotations, max defect=" + fmt(worst_defect) +
                                                  " max |sigma-1|=" + fmt(worst_sigma)};
}

Outcome minimizer() {
  synth::Rng rng(2024);
  std::size_t violations = 0;
  double tightest = 1e300;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.next_u64() % 50);
    const std::size_t n = d + static_cast<std::size_t>(rng.next_u64() % 200);
    const auto a = gaussian_block(rng, n, d);
    const auto b = gaussian_block(rng, n, d);
    const auto fit = procrustes(a, b);
    const double best = residual(a, fit.q, b);
    for (int k = 0; k < 100; ++k) {
      const auto alt = synth::random_orthogonal(rng.next_u64(), d);
      const double other = residual(a, alt, b);
      tightest = std::min(tightest, other - best);
      if (best > other + 1e-6) ++violations;
    }
  }
  return {violations == 0 ? Outcome::pass : Outcome::fail,
          "2000 comparisons, violations=" + std::to_string(violations) + " min margin=" + fmt(tightest)};
}

Outcome knn_exactness() {
  const auto t0 = Clock::now();
  synth::Rng rng(99);
  std::size_t mismatches = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t rows = 1 + static_cast<std::size_t>(rng.next_u64() % 2000);
    const std::size_t dim = 1 + static_cast<std::size_t>(rng.next_u64() % 64);
    const bool quantized = inst % 4 == 0;  // coarse values to force exact ties and zero rows
    std::vector<std::string> words;
    std::vector<float> v(rows * dim);
    for (std::size_t i = 0; i < rows; ++i) words.push_back("w" + std::to_string(i));
    for (auto& x : v) x = quantized ? static_cast<float>(static_cast<int>(rng.next_u64() % 3) - 1) : static_cast<float>(rng.gaussian());
    const EpochEmbedding e({1800}, Vocabulary(words), EmbeddingMatrix(rows, dim, std::move(v)));
    std::vector<float> q(dim);
    do {
      for (auto& x : q) x = quantized ? static_cast<float>(static_cast<int>(rng.next_u64() % 3) - 1) : static_cast<float>(rng.gaussian());
    } while (std::all_of(q.begin(), q.end(), [](float x) { return x == 0.0f; }));
    if (similar_by_vector(e, q, rows) != synth::knn_oracle(e, q, rows)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  const bool ok = mismatches == 0 && secs < 5.0;
  return {ok ? Outcome::pass : Outcome::fail,
          "200 instances, mismatches=" + std::to_string(mismatches) + " time=" + fmt(secs) + "s"};
}

int cli(std::vector<std::string> args, std::string& captured) {
  args.insert(args.begin(), "dwe");
  std::ostringstream out, err;
  std::istringstream in;
  const int code = cli::run(args, out, err, in);
  captured = out.str() + err.str();
  return code;
}

Outcome end_to_end() {
  testing::TempDir dir;
  const std::size_t epochs = 20;
  // Each concept's analogue changes twice over the period and ends on itself.
  const std::vector<std::pair<std::string, std::vector<std::string>>> concepts{
      {"truck", {"cart", "wagon", "car"}},
      {"email", {"gazette", "telegram", "mail"}},
      {"television", {"theatres", "radio", "cinema"}},
  };
  std::ofstream plan(dir / "plan.txt");
  plan << "seed = 31337\nepochs = 20\nfirst_year = 1800\nyear_step = 10\nvocab_size = 2000\ndim = 50\n"
       << "noise_sigma = 0.02\nzero_rows = 40\nwords = ";
  std::map<std::string, std::vector<std::string>> expected;
  std::vector<std::string> named;
  for (const auto& [c, stages] : concepts) {
    named.push_back(c);
    named.insert(named.end(), stages.begin(), stages.end());
    std::vector<std::string> tokens;
    for (std::size_t t = 0; t < epochs; ++t) tokens.push_back(t + 1 == epochs ? c : stages[std::min<std::size_t>(t / 7, 2)]);
    expected[c] = tokens;
  }
  for (std::size_t i = 0; i < named.size(); ++i) plan << (i ? ", " : "") << named[i];
  plan << '\n';
  for (const auto& [c, tokens] : expected) {
    plan << "analogue." << c << " = ";
    for (std::size_t t = 0; t < tokens.size(); ++t) plan << (t ? ", " : "") << tokens[t];
    plan << '\n';
  }
  plan.close();

  std::string log;
  if (cli({"synth", "--plan", (dir / "plan.txt").string(), "--out", (dir / "raw").string(), "--text"}, log) != 0)
    return {Outcome::fail, "synth: " + log};
  std::ifstream manifest_in(dir / "raw" / "manifest.tsv");
  const auto entries = read_manifest(manifest_in);
  std::vector<ManifestEntry> cleaned;
  std::size_t removed_epochs = 0;
  for (const auto& m : entries) {
    const auto out = dir / "clean" / (to_string(m.epoch) + ".dwe");
    std::filesystem::create_directories(out.parent_path());
    if (cli({"clean", "--in", (dir / "raw" / m.path).string(), "--epoch", to_string(m.epoch), "--out", out.string()},
            log) != 0)
      return {Outcome::fail, "clean: " + log};
    if (log.find("removed 40") != std::string::npos) ++removed_epochs;
    cleaned.push_back({m.epoch, out.filename()});
  }
  {
    std::ofstream mo(dir / "clean" / "manifest.tsv");
    write_manifest(cleaned, mo);
  }
  if (cli({"align", "--manifest", (dir / "clean" / "manifest.tsv").string(), "--target", "1990", "--aligned",
           (dir / "aligned").string()},
          log) != 0)
    return {Outcome::fail, "align: " + log};

  std::size_t mismatches = 0, cells = 0;
  for (const auto& [c, tokens] : expected) {
    if (cli({"trace", "--aligned", (dir / "aligned").string(), "--word", c, "--top", "1"}, log) != 0)
      return {Outcome::fail, "trace: " + log};
    std::istringstream in(log);
    std::string line;
    std::getline(in, line);  // header
    for (std::size_t t = 0; t < epochs; ++t) {
      std::getline(in, line);
      ++cells;
      const std::string want = std::to_string(1800 + 10 * t) + "," + tokens[t];
      if (line != want) ++mismatches;
    }
  }
  const bool ok = mismatches == 0 && removed_epochs == epochs - 1;
  return {ok ? Outcome::pass : Outcome::fail, std::to_string(cells) + " cells over 20 epochs, mismatches=" +
                                                  std::to_string(mismatches) + ", epochs cleaned of 40 rows=" +
                                                  std::to_string(removed_epochs)};
}

Outcome performance() {
  synth::Rng rng(5);
  const std::size_t rows = 100000, dim = 300;
  std::vector<std::string> words;
  words.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) words.push_back("w" + std::to_string(i));
  auto m = gaussian_block(rng, rows, dim);
  const auto e = normalize_rows(EpochEmbedding({1990}, Vocabulary(std::move(words)), std::move(m)));
  std::vector<double> times;
  for (int run = 0; run < 5; ++run) {
    const auto q = e.matrix().row(static_cast<std::size_t>(run) * 1000);
    const auto t0 = Clock::now();
    const auto r = similar_by_vector(e, q, 10);
    times.push_back(seconds_since(t0) * 1000.0);
    if (r.size() != 10) return {Outcome::fail, "wrong result size"};
  }
  std::sort(times.begin(), times.end());
  const double median = times[times.size() / 2];
  return {median < 150.0 ? Outcome::pass : Outcome::fail,
          "100000x300 top-10 median=" + fmt(median) + "ms worst=" + fmt(times.back()) + "ms"};
}

Outcome dataset_reproduction() {
  const char* aligned_env = std::getenv("DWE_HISTWORDS_ALIGNED");
  const char* manifest_env = std::getenv("DWE_HISTWORDS_MANIFEST");
  if (!aligned_env && !manifest_env) {
    return {Outcome::skip, "set DWE_HISTWORDS_ALIGNED or DWE_HISTWORDS_MANIFEST to run"};
  }
  AlignedSeries s;
  if (aligned_env) {
    s = load_aligned(aligned_env);
  } else {
    EmbeddingSeries raw = load_series(manifest_env);
    EmbeddingSeries clean;
    for (const auto& [epoch, e] : raw) clean.insert(normalize_rows(drop_zero_rows(e).embedding));
    s = align_series(clean, Epoch{1990});
  }
  struct Cell {
    std::string concept_word;
    int year;
    std::vector<std::string> accept;
    std::size_t within;
  };
  const std::vector<Cell> cells{
      {"truck", 1800, {"cart"}, 5},         {"diesel", 1800, {"tar", "steam"}, 5},
      {"aircraft", 1800, {"ships"}, 5},     {"television", 1800, {"theatres"}, 5},
      {"email", 1800, {"gazette", "messages"}, 5}, {"computer", 1990, {"computer"}, 1},
  };
  std::size_t failures = 0;
  std::string detail;
  for (const auto& c : cells) {
    std::vector<Neighbor> top;
    try {
      const auto q = require_vector(s, c.concept_word, s.reference());
      top = similar_by_vector(*s.find(Epoch{c.year}), q, c.within);
    } catch (const Error& e) {
      ++failures;
      detail += " " + c.concept_word + "@" + std::to_string(c.year) + ":" + e.what();
      continue;
    }
    const bool hit = std::any_of(top.begin(), top.end(), [&](const Neighbor& nb) {
      return std::find(c.accept.begin(), c.accept.end(), nb.word) != c.accept.end();
    });
    if (!hit) ++failures;
    detail += " " + c.concept_word + "@" + std::to_string(c.year) + (hit ? ":ok" : ":miss");
  }
  return {failures == 0 ? Outcome::pass : Outcome::fail, "cells" + detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"planted-rotation-recovery", planted_rotation},
      {"orthogonality-audit", orthogonality_audit},
      {"minimizer-property", minimizer},
      {"knn-exactness", knn_exactness},
      {"end-to-end-synthetic-table", end_to_end},
      {"performance-floor", performance},
      {"dataset-table-reproduction", dataset_reproduction},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Outcome::pass ? "[PASS]" : o.status == Outcome::fail ? "[FAIL]" : "[SKIP]";
    if (o.status == Outcome::fail) ++failed;
    std::cout << tag << ' ' << name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
