#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace dancer {

enum class EditType { kMatch, kSubstitute, kDelete, kInsert };

// One step of a character alignment between a reference and a hypothesis.
// Deletions consume a reference character only; insertions consume a
// hypothesis character only. For an insertion, ref_pos is the reference
// position it precedes (== |ref| at end of string); for a deletion, hyp_pos
// is the hypothesis position it precedes.
struct EditOp {
  EditType type;
  std::size_t ref_pos;
  std::size_t hyp_pos;

  bool operator==(const EditOp&) const = default;
};

struct Alignment {
  std::vector<EditOp> ops;  // in left-to-right order
  std::size_t cost = 0;

  std::size_t count(EditType t) const;
};

// Minimal-cost Levenshtein alignment (match 0, everything else 1). Among
// minimal alignments the backtrace from the end prefers
// match > substitute > delete > insert, so the result is unique.
Alignment char_align(std::u32string_view hyp, std::u32string_view ref);

// For every reference position i, the hypothesis range [first, last) of
// characters matched or substituted to it (empty when deleted). Insertions
// are not included.
struct PositionMap {
  std::vector<std::size_t> hyp_of_ref;  // npos when deleted
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};
PositionMap map_positions(const Alignment& alignment, std::size_t ref_len);

// Half-open character range.
struct Range {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t length() const noexcept { return end - start; }
  bool empty() const noexcept { return end == start; }
  bool operator==(const Range&) const = default;
};

// Projects the reference range [start,end) onto the hypothesis: the
// hypothesis characters matched/substituted to reference positions in the
// range plus insertions strictly between them. When every reference
// character in the range is deleted the projection is empty and positioned
// where the range would sit in the hypothesis.
Range project_range(const Alignment& alignment, Range ref_range);

}  // namespace dancer
