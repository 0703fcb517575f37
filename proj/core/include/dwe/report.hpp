#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dwe/preprocess.hpp"
#include "dwe/query.hpp"

namespace dwe {

enum class TableFormat { csv, markdown, latex };

/// Accepts "csv", "md"/"markdown", "latex"/"tex".
std::optional<TableFormat> parse_table_format(std::string_view name);

struct TableSpec {
  std::vector<std::string> concepts;
  std::size_t n = 2;
  TableFormat format = TableFormat::csv;
};

/// One row per epoch, one column per concept; each cell is the top-n words joined by ", ".
/// Throws Error(precondition) for no concepts, n == 0, or tables not matching spec.concepts,
/// and Error(epoch_mismatch) when tables cover different epochs.
void emit_analogy_table(std::span<const AnalogyTable> tables, const TableSpec& spec, std::ostream& out);

/// "epoch,word_count" rows (or the Markdown/LaTeX equivalent), ascending.
void emit_vocab_stats(const VocabStats& stats, TableFormat format, std::ostream& out);

/// RFC 4180 field quoting.
std::string csv_field(std::string_view text);

}  // namespace dwe
