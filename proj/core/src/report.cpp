#include "dwe/report.hpp"

#include <ostream>

#include "dwe/error.hpp"

namespace dwe {

std::optional<TableFormat> parse_table_format(std::string_view name) {
  if (name == "csv") return TableFormat::csv;
  if (name == "md" || name == "markdown") return TableFormat::markdown;
  if (name == "latex" || name == "tex") return TableFormat::latex;
  return std::nullopt;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string markdown_cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string latex_cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\textbackslash{}"; break;
      case '~': out += "\\textasciitilde{}"; break;
      case '^': out += "\\textasciicircum{}"; break;
      case '&':
      case '%':
      case '$':
      case '#':
      case '_':
      case '{':
      case '}':
        out += '\\';
        out += c;
        break;
      default: out += c;
    }
  }
  return out;
}

// Writes a grid whose first column is a label column.
void emit_grid(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
               TableFormat format, std::string_view corner, std::ostream& out) {
  switch (format) {
    case TableFormat::csv: {
      out << csv_field(corner);
      for (const auto& h : header) out << ',' << csv_field(h);
      out << '\n';
      for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
        out << '\n';
      }
      break;
    }
    case TableFormat::markdown: {
      out << "| " << markdown_cell(corner) << " |";
      for (const auto& h : header) out << ' ' << markdown_cell(h) << " |";
      out << "\n|";
      for (std::size_t i = 0; i <= header.size(); ++i) out << "---|";
      out << '\n';
      for (const auto& row : rows) {
        out << '|';
        for (const auto& cell : row) out << ' ' << markdown_cell(cell) << " |";
        out << '\n';
      }
      break;
    }
    case TableFormat::latex: {
      out << "\\begin{tabular}{" << std::string(header.size() + 1, 'l') << "}\n\\toprule\n" << latex_cell(corner);
      for (const auto& h : header) out << " & " << latex_cell(h);
      out << " \\\\\n\\midrule\n";
      for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (i == 0) {
            out << "\\textbf{" << latex_cell(row[i]) << '}';
          } else {
            out << " & " << latex_cell(row[i]);
          }
        }
        out << " \\\\\n";
      }
      out << "\\bottomrule\n\\end{tabular}\n";
      break;
    }
  }
}

}  // namespace

void emit_analogy_table(std::span<const AnalogyTable> tables, const TableSpec& spec, std::ostream& out) {
  if (spec.concepts.empty()) throw Error(ErrorKind::precondition, "table needs at least one concept");
  if (spec.n == 0) throw Error(ErrorKind::precondition, "table cells need n >= 1");
  if (tables.size() != spec.concepts.size()) {
    throw Error(ErrorKind::precondition, std::to_string(tables.size()) + " tables for " +
                                             std::to_string(spec.concepts.size()) + " concepts");
  }
  for (std::size_t c = 0; c < tables.size(); ++c) {
    if (tables[c].concept_word != spec.concepts[c]) {
      throw Error(ErrorKind::precondition, "table " + std::to_string(c) + " is for '" + tables[c].concept_word +
                                               "', expected '" + spec.concepts[c] + "'");
    }
    if (tables[c].per_epoch.size() != tables[0].per_epoch.size()) {
      throw Error(ErrorKind::epoch_mismatch, "concept '" + tables[c].concept_word + "' covers a different epoch set");
    }
    for (std::size_t r = 0; r < tables[c].per_epoch.size(); ++r) {
      if (tables[c].per_epoch[r].epoch != tables[0].per_epoch[r].epoch) {
        throw Error(ErrorKind::epoch_mismatch, "concept '" + tables[c].concept_word + "' covers a different epoch set");
      }
    }
  }

  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < tables[0].per_epoch.size(); ++r) {
    std::vector<std::string> row{to_string(tables[0].per_epoch[r].epoch)};
    for (const auto& table : tables) {
      const auto& neighbors = table.per_epoch[r].neighbors;
      std::string cell;
      for (std::size_t k = 0; k < neighbors.size() && k < spec.n; ++k) {
        if (k) cell += ", ";
        cell += neighbors[k].word;
      }
      row.push_back(std::move(cell));
    }
    rows.push_back(std::move(row));
  }
  const std::string_view corner = spec.format == TableFormat::latex ? "" : "epoch";
  emit_grid(spec.concepts, rows, spec.format, corner, out);
}

void emit_vocab_stats(const VocabStats& stats, TableFormat format, std::ostream& out) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [epoch, count] : stats.per_epoch) rows.push_back({to_string(epoch), std::to_string(count)});
  emit_grid({"word_count"}, rows, format, "epoch", out);
}

}  // namespace dwe
