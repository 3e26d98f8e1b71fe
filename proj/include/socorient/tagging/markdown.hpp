#pragma once

// Markdown tables exchanged with the labeling LLM:
//   | Utterance ID | Speaker ID | Text |    (input)
//   | Utterance ID | Speaker ID | Label |   (response)
// Cells escape '\' as "\\", '|' as "\|", and line breaks as "\n" / "\r" so
// that every row stays on one line with exactly three cells.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/tags.hpp"
#include "socorient/text.hpp"

namespace socorient::tagging {

inline std::string escape_cell(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '|': out += "\\|"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string unescape_cell(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      switch (n) {
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        default: out.push_back(n);  // "\\" and "\|", and anything else verbatim
      }
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

/// Splits a table row on unescaped pipes. Returns nullopt for lines that are
/// not table rows. Cells are trimmed but still escaped.
inline std::optional<std::vector<std::string>> split_row(std::string_view line) {
  line = text::trim(line);
  if (line.size() < 2 || line.front() != '|') return std::nullopt;
  std::vector<std::string> cells;
  std::string cur;
  bool closed = false;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && i + 1 < line.size()) {
      cur.push_back(c);
      cur.push_back(line[++i]);
      closed = false;
    } else if (c == '|') {
      cells.emplace_back(text::trim(cur));
      cur.clear();
      closed = true;
    } else {
      cur.push_back(c);
      closed = false;
    }
  }
  // Tolerate a missing trailing pipe.
  if (!closed && !text::trim(cur).empty()) cells.emplace_back(text::trim(cur));
  return cells;
}

inline std::string render_row(std::string_view a, std::string_view b, std::string_view c) {
  std::string row = "| ";
  row += escape_cell(a);
  row += " | ";
  row += escape_cell(b);
  row += " | ";
  row += escape_cell(c);
  row += " |";
  return row;
}

inline constexpr std::string_view kTextHeader = "| Utterance ID | Speaker ID | Text |";
inline constexpr std::string_view kLabelHeader = "| Utterance ID | Speaker ID | Label |";
inline constexpr std::string_view kSeparator = "| --- | --- | --- |";

/// The input table for a slice of utterances, newline-terminated.
inline std::string render_text_table(std::span<const Utterance> utterances) {
  std::string out;
  out += kTextHeader;
  out += '\n';
  out += kSeparator;
  out += '\n';
  for (const auto& u : utterances) {
    out += render_row(u.id, u.speaker_id, u.text);
    out += '\n';
  }
  return out;
}

struct LabelRow {
  std::string utterance_id;
  std::string speaker_id;
  SocialOrientationTag tag;
};

inline std::string render_label_table(std::span<const LabelRow> rows) {
  std::string out;
  out += kLabelHeader;
  out += '\n';
  out += kSeparator;
  out += '\n';
  for (const auto& r : rows) {
    out += render_row(r.utterance_id, r.speaker_id, tag_name(r.tag));
    out += '\n';
  }
  return out;
}

struct ExpectedUtterance {
  std::string utterance_id;
  std::string speaker_id;
};

namespace detail {

inline bool header_matches(const std::vector<std::string>& cells) {
  if (cells.size() != 3) return false;
  return text::to_lower_ascii(cells[0]) == "utterance id" &&
         text::to_lower_ascii(cells[1]) == "speaker id" &&
         text::to_lower_ascii(cells[2]) == "label";
}

inline bool is_separator(const std::vector<std::string>& cells) {
  if (cells.empty()) return false;
  for (const auto& c : cells) {
    if (c.empty()) return false;
    for (char ch : c) {
      if (ch != '-' && ch != ':') return false;
    }
  }
  return true;
}

}  // namespace detail

/// Reads the first `Utterance ID | Speaker ID | Label` table in an LLM
/// response. Rows are matched to `expected` by utterance id (any order);
/// the result follows the order of `expected`. Nothing is repaired: a
/// missing table, bad row, unknown label, unexpected/duplicate id or an
/// absent utterance is an error.
inline std::vector<TagAssignment> parse_tag_table(std::string_view response,
                                                  std::span<const ExpectedUtterance> expected,
                                                  TagSource source = TagSource::LLM) {
  const auto lines = text::split(response, '\n');
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    auto cells = split_row(lines[i]);
    if (cells && detail::header_matches(*cells)) break;
  }
  if (i == lines.size()) {
    throw Error(Errc::MalformedTable, "no 'Utterance ID | Speaker ID | Label' table in response");
  }

  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t k = 0; k < expected.size(); ++k) slot.emplace(expected[k].utterance_id, k);
  std::vector<std::optional<TagAssignment>> found(expected.size());

  std::size_t row_no = 0;
  for (++i; i < lines.size(); ++i) {
    auto cells = split_row(lines[i]);
    if (!cells) break;  // table ends at the first non-row line
    if (detail::is_separator(*cells)) continue;
    ++row_no;
    const std::string where = "row " + std::to_string(row_no);
    if (cells->size() != 3) {
      throw LocatedError(Errc::MalformedTable, row_no,
                         where + ": expected 3 cells, got " + std::to_string(cells->size()));
    }
    const std::string uid = unescape_cell((*cells)[0]);
    const std::string speaker = unescape_cell((*cells)[1]);
    const std::string label = unescape_cell((*cells)[2]);

    auto it = slot.find(uid);
    if (it == slot.end()) {
      throw LocatedError(Errc::IdMismatch, row_no, where + ": unexpected utterance id '" + uid + "'");
    }
    const auto& exp = expected[it->second];
    if (exp.speaker_id != speaker) {
      throw LocatedError(Errc::IdMismatch, row_no,
                         where + ": speaker '" + speaker + "' does not match '" + exp.speaker_id +
                             "' for utterance '" + uid + "'");
    }
    if (found[it->second]) {
      throw LocatedError(Errc::IdMismatch, row_no, where + ": duplicate utterance id '" + uid + "'");
    }
    auto tag = parse_tag_lenient(label, /*allow_not_available=*/false);
    if (!tag) throw LocatedError(Errc::UnknownTag, row_no, where + ": unknown tag '" + label + "'");
    found[it->second] = TagAssignment{uid, *tag, source, std::nullopt};
  }

  std::vector<TagAssignment> out;
  out.reserve(expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    if (!found[k]) {
      throw Error(Errc::MissingUtterance, "utterance '" + expected[k].utterance_id + "'");
    }
    out.push_back(std::move(*found[k]));
  }
  return out;
}

}  // namespace socorient::tagging
