#pragma once

#include <string>
#include <vector>

#include "tabsem/question.hpp"

namespace tabsem {

// String mentions: every token span whose space-joined text equals a string
// cell (case-insensitive), one mention per matching column; the mention value
// is the span text itself. Number mentions: single tokens that parse as a
// number after normalization (strip commas and one leading currency symbol);
// sourced to each number column holding an equal cell, unsourced otherwise.
// Date mentions: single tokens of shape YYYY[-MM[-DD]], only when the table
// has a date column. Mentions may overlap.
std::vector<EntityMention> extract_entities(const std::vector<std::string>& raw_tokens,
                                            const Table& table);

// Normalization rule for number tokens; returns false if not a number.
bool normalize_number_token(std::string_view tok, double& out);

// Sets the in_table flag (token equals a column-name token or a word of a
// string cell) and appends the ALL_ROW sentinel.
Question annotate(const std::vector<std::string>& raw_tokens,
                  const std::vector<std::optional<std::string>>& pos_tags,
                  std::vector<EntityMention> entities, const Table& table);

// Flag per column: true iff some mention is sourced from it.
std::vector<bool> column_indicator(const Table& table, const Question& q);

}  // namespace tabsem
