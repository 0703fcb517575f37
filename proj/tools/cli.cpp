#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dwe/align.hpp"
#include "dwe/error.hpp"
#include "dwe/preprocess.hpp"
#include "dwe/query.hpp"
#include "dwe/report.hpp"
#include "dwe/store.hpp"
#include "dwe/synth.hpp"

namespace dwe::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string in_path;
  std::string out_path;
  std::string manifest;
  std::string aligned;
  std::string plan;
  std::string format;
  std::vector<std::string> words;
  std::optional<int> epoch;
  std::optional<int> target;
  std::optional<int> ref_epoch;
  std::optional<std::size_t> top;
  std::optional<std::uint64_t> seed;
  std::size_t min_shared = 0;
  bool exclude_self = false;
  bool no_normalize = false;
  bool text_output = false;
};

TableFormat table_format(const Options& o, TableFormat fallback) {
  if (o.format.empty()) return fallback;
  auto f = parse_table_format(o.format);
  if (!f) throw UsageError("unknown --format '" + o.format + "' (expected csv, md or latex)");
  return *f;
}

std::size_t top_or(const Options& o, std::size_t fallback) {
  const std::size_t n = o.top.value_or(fallback);
  if (n == 0) throw UsageError("--top must be at least 1");
  return n;
}

std::vector<std::string> concept_list(const Options& o) {
  std::vector<std::string> out;
  for (const auto& w : o.words) {
    std::stringstream ss(w);
    std::string piece;
    while (std::getline(ss, piece, ','))
      if (!piece.empty()) out.push_back(piece);
  }
  return out;
}

void write_neighbors(const std::vector<Neighbor>& list, TableFormat format, bool plain, std::ostream& out) {
  auto score = [](double s) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(6) << s;
    return ss.str();
  };
  if (plain) {
    for (const auto& nb : list) out << nb.word << ' ' << score(nb.score) << '\n';
    return;
  }
  switch (format) {
    case TableFormat::csv:
      out << "rank,word,score\n";
      for (std::size_t i = 0; i < list.size(); ++i)
        out << i + 1 << ',' << csv_field(list[i].word) << ',' << score(list[i].score) << '\n';
      break;
    case TableFormat::markdown:
      out << "| rank | word | score |\n|---|---|---|\n";
      for (std::size_t i = 0; i < list.size(); ++i)
        out << "| " << i + 1 << " | " << list[i].word << " | " << score(list[i].score) << " |\n";
      break;
    case TableFormat::latex:
      out << "\\begin{tabular}{lll}\n\\toprule\nrank & word & score \\\\\n\\midrule\n";
      for (std::size_t i = 0; i < list.size(); ++i)
        out << i + 1 << " & " << list[i].word << " & " << score(list[i].score) << " \\\\\n";
      out << "\\bottomrule\n\\end{tabular}\n";
      break;
  }
}

EmbeddingSeries load_clean_series(const std::string& manifest, bool normalize, std::ostream& err) {
  EmbeddingSeries raw = load_series(manifest);
  EmbeddingSeries out;
  for (const auto& [epoch, e] : raw) {
    auto cleaned = drop_zero_rows(e);
    if (cleaned.removed > 0) {
      err << "epoch " << to_string(epoch) << ": removed " << cleaned.removed << " zero rows\n";
    }
    out.insert(normalize ? normalize_rows(cleaned.embedding) : std::move(cleaned.embedding));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_convert(const Options& o, std::ostream& err) {
  const Epoch epoch{o.epoch.value_or(0)};
  const EpochEmbedding e = load_embedding_file(o.in_path, epoch);
  save_embedding_file(e, o.out_path);
  err << "converted " << e.size() << " words, dim " << e.dim() << '\n';
  return kOk;
}

int cmd_clean(const Options& o, std::ostream& err) {
  const EpochEmbedding e = load_embedding_file(o.in_path, Epoch{*o.epoch});
  const CleanResult cleaned = drop_zero_rows(e);
  save_embedding_file(cleaned.embedding, o.out_path);
  err << "epoch " << *o.epoch << ": removed " << cleaned.removed << ", kept " << cleaned.embedding.size() << '\n';
  return kOk;
}

int cmd_stats(const Options& o, std::ostream& out, std::ostream& err) {
  const TableFormat format = table_format(o, TableFormat::csv);
  const EmbeddingSeries series = load_clean_series(o.manifest, false, err);
  emit_vocab_stats(vocab_stats(series), format, out);
  return kOk;
}

int cmd_align(const Options& o, std::ostream& err) {
  const Epoch reference{*o.target};
  {
    std::ifstream in(o.manifest);
    if (!in) throw Error(ErrorKind::io, "cannot open manifest " + o.manifest);
    const auto entries = read_manifest(in);
    const bool present =
        std::any_of(entries.begin(), entries.end(), [&](const ManifestEntry& m) { return m.epoch == reference; });
    if (!present) {
      throw Error(ErrorKind::missing_reference_epoch, "epoch " + to_string(reference) + " not in " + o.manifest);
    }
  }
  const EmbeddingSeries series = load_clean_series(o.manifest, !o.no_normalize, err);
  AlignOptions options;
  options.renormalize = !o.no_normalize;
  options.min_shared = o.min_shared;
  const AlignedSeries aligned = align_series(series, reference, options);
  for (const auto& [epoch, diag] : aligned.diagnostics()) {
    err << "epoch " << to_string(epoch) << ": shared " << diag.shared << ", rank " << diag.rank << ", defect "
        << std::scientific << std::setprecision(3) << diag.orthogonality_defect << std::defaultfloat << '\n';
    for (const auto& w : diag.warnings) err << "warning: " << w << '\n';
  }
  save_aligned(aligned, o.out_path);
  err << "aligned " << aligned.epochs().size() << " epochs to " << to_string(reference) << '\n';
  return kOk;
}

int cmd_query(const Options& o, std::ostream& out) {
  const AlignedSeries s = load_aligned(o.aligned);
  const Epoch from = o.ref_epoch ? Epoch{*o.ref_epoch} : s.reference();
  const Epoch to = o.epoch ? Epoch{*o.epoch} : s.reference();
  const auto q = require_vector(s, o.words.front(), from);
  const EpochEmbedding* target = s.find(to);
  if (!target) throw Error(ErrorKind::precondition, "epoch " + to_string(to) + " not in aligned series");
  std::vector<std::string> exclude;
  if (o.exclude_self) exclude.push_back(o.words.front());
  const auto list = similar_by_vector(*target, q, top_or(o, 10), exclude);
  write_neighbors(list, table_format(o, TableFormat::csv), o.format.empty(), out);
  return kOk;
}

int cmd_table(const Options& o, std::vector<std::string> concepts, std::ostream& out) {
  if (concepts.empty()) throw UsageError("at least one --word is required");
  const AlignedSeries s = load_aligned(o.aligned);
  TableSpec spec{concepts, top_or(o, 2), table_format(o, TableFormat::csv)};
  AnalogyOptions options;
  if (o.ref_epoch) options.query_epoch = Epoch{*o.ref_epoch};
  options.exclude_self = o.exclude_self;
  std::vector<AnalogyTable> tables;
  for (const auto& c : concepts) tables.push_back(temporal_analogues(s, c, spec.n, options));
  emit_analogy_table(tables, spec, out);
  return kOk;
}

int cmd_synth(const Options& o, std::ostream& err) {
  synth::SynthPlan plan = synth::load_plan(o.plan);
  if (o.seed) plan.seed = *o.seed;
  const EmbeddingSeries series = synth::gen_series(plan);
  const fs::path dir = o.out_path;
  save_series(series, dir / "manifest.tsv", o.text_output ? FileFormat::text : FileFormat::native);
  std::ofstream plan_out(dir / "plan.txt", std::ios::trunc);
  synth::write_plan(plan, plan_out);
  err << "generated " << series.size() << " epochs (" << plan.vocab_size << " words, dim " << plan.dim
      << "), reference " << to_string(synth::reference_epoch(plan)) << '\n';
  return kOk;
}

void print_error(std::ostream& err, std::string_view kind, std::string_view detail) {
  err << "error: " << kind << ": " << detail << '\n';
}

int cmd_repl(const Options& o, std::ostream& out, std::ostream& err, std::istream& in) {
  const AlignedSeries s = load_aligned(o.aligned);
  std::size_t n = top_or(o, 10);
  std::string line;
  err << "dwe> " << std::flush;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::string cmd;
    words >> cmd;
    try {
      if (cmd.empty()) {
        // blank line
      } else if (cmd == "quit" || cmd == "exit") {
        break;
      } else if (cmd == "q") {
        std::string word;
        if (!(words >> word)) throw UsageError("usage: q <word> [epoch]");
        int year = s.reference().start_year;
        if (!(words >> year) && !words.eof()) throw UsageError("epoch must be a year");
        const auto q = require_vector(s, word, s.reference());
        const EpochEmbedding* e = s.find(Epoch{year});
        if (!e) throw Error(ErrorKind::precondition, "epoch " + std::to_string(year) + " not in aligned series");
        write_neighbors(similar_by_vector(*e, q, n), TableFormat::csv, true, out);
      } else if (cmd == "t") {
        std::string word;
        if (!(words >> word)) throw UsageError("usage: t <word>");
        std::vector<AnalogyTable> tables{temporal_analogues(s, word, n)};
        emit_analogy_table(tables, TableSpec{{word}, n, TableFormat::markdown}, out);
      } else if (cmd == "n") {
        long long count = 0;
        if (!(words >> count) || count < 1) throw UsageError("usage: n <count>, count >= 1");
        n = static_cast<std::size_t>(count);
        out << "n = " << n << '\n';
      } else if (cmd == "help") {
        out << "q <word> [epoch]  neighbours of <word> (reference vector) in epoch\n"
               "t <word>          per-epoch table for <word>\n"
               "n <count>         neighbours per query\n"
               "quit\n";
      } else {
        throw UsageError("unknown command '" + cmd + "' (try help)");
      }
    } catch (const UsageError& e) {
      print_error(err, "usage", e.what());
    } catch (const Error& e) {
      print_error(err, to_string(e.kind()), e.detail());
    }
    out << std::flush;
    err << "dwe> " << std::flush;
  }
  return kOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Diachronic word-embedding alignment and temporal analogy queries", "dwe"};
  app.require_subcommand(1);
  Options o;

  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "csv, md or latex");
  };

  auto* convert = app.add_subcommand("convert", "Convert between text and native (.dwe) formats");
  convert->add_option("--in", o.in_path)->required();
  convert->add_option("--out", o.out_path, "output path; .dwe is native, anything else text")->required();
  convert->add_option("--epoch", o.epoch);

  auto* clean = app.add_subcommand("clean", "Remove zero embeddings from one epoch");
  clean->add_option("--in", o.in_path)->required();
  clean->add_option("--out", o.out_path)->required();
  clean->add_option("--epoch", o.epoch)->required();

  auto* stats = app.add_subcommand("stats", "Words per epoch after cleaning");
  stats->add_option("--manifest", o.manifest)->required();
  add_format(stats);

  auto* align = app.add_subcommand("align", "Align every epoch to a reference epoch");
  align->add_option("--manifest", o.manifest)->required();
  align->add_option("--target", o.target, "reference epoch year")->required();
  align->add_option("--out,--aligned", o.out_path, "output directory")->required();
  align->add_option("--min-shared", o.min_shared, "warn when fewer shared words than this");
  align->add_flag("--no-normalize", o.no_normalize, "skip row normalisation (diagnostic)");

  auto* query = app.add_subcommand("query", "Nearest neighbours of a word's vector in one epoch");
  query->add_option("--aligned", o.aligned)->required();
  query->add_option("--word", o.words)->required()->expected(1);
  query->add_option("--epoch", o.epoch, "epoch to search (default: reference)");
  query->add_option("--ref-epoch", o.ref_epoch, "epoch the query vector comes from (default: reference)");
  query->add_option("--top", o.top, "neighbours (default 10)");
  query->add_flag("--exclude-self", o.exclude_self);
  add_format(query);

  auto* trace = app.add_subcommand("trace", "Per-epoch analogue table for one word");
  trace->add_option("--aligned", o.aligned)->required();
  trace->add_option("--word", o.words)->required()->expected(1);
  trace->add_option("--ref-epoch", o.ref_epoch);
  trace->add_option("--top", o.top, "words per cell (default 2)");
  trace->add_flag("--exclude-self", o.exclude_self);
  add_format(trace);

  auto* report = app.add_subcommand("report", "Per-epoch analogue table for several words");
  report->add_option("--aligned", o.aligned)->required();
  report->add_option("--word,--words", o.words, "repeatable or comma-separated")->required();
  report->add_option("--ref-epoch", o.ref_epoch);
  report->add_option("--top", o.top, "words per cell (default 2)");
  report->add_flag("--exclude-self", o.exclude_self);
  add_format(report);

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic series from a plan file");
  synth_cmd->add_option("--plan", o.plan)->required();
  synth_cmd->add_option("--out", o.out_path, "output directory")->required();
  synth_cmd->add_option("--seed", o.seed, "override the plan's seed");
  synth_cmd->add_flag("--text", o.text_output, "write the text format instead of .dwe");

  auto* repl = app.add_subcommand("repl", "Interactive queries over an aligned series");
  repl->add_option("--aligned", o.aligned)->required();
  repl->add_option("--top", o.top, "neighbours per query (default 10)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::string what = e.what();
    std::replace(what.begin(), what.end(), '\n', ' ');
    print_error(err, "usage", what);
    return kUsageError;
  }

  try {
    if (convert->parsed()) return cmd_convert(o, err);
    if (clean->parsed()) return cmd_clean(o, err);
    if (stats->parsed()) return cmd_stats(o, out, err);
    if (align->parsed()) return cmd_align(o, err);
    if (query->parsed()) return cmd_query(o, out);
    if (trace->parsed()) return cmd_table(o, o.words, out);
    if (report->parsed()) return cmd_table(o, concept_list(o), out);
    if (synth_cmd->parsed()) return cmd_synth(o, err);
    if (repl->parsed()) return cmd_repl(o, out, err, in);
  } catch (const UsageError& e) {
    print_error(err, "usage", e.what());
    return kUsageError;
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.detail());
    return e.kind() == ErrorKind::numerical_failure ? kNumericalFailure : kDataError;
  } catch (const fs::filesystem_error& e) {
    print_error(err, "io", e.what());
    return kDataError;
  }
  return kUsageError;
}

}  // namespace dwe::cli
