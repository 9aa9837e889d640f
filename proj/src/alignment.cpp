#include "dancer/alignment.hpp"

#include <algorithm>

namespace dancer {

std::size_t Alignment::count(EditType t) const {
  return static_cast<std::size_t>(std::count_if(ops.begin(), ops.end(), [t](const EditOp& op) { return op.type == t; }));
}

Alignment char_align(std::u32string_view hyp, std::u32string_view ref) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t width = m + 1;
  std::vector<std::size_t> cost((n + 1) * width);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * width + j]; };

  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    at(i, 0) = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  Alignment out;
  out.cost = at(n, m);
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = at(i, j);
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i - 1, j - 1) == here) {
      out.ops.push_back({EditType::kMatch, i - 1, j - 1});
      --i;
      --j;
    } else if (i > 0 && j > 0 && ref[i - 1] != hyp[j - 1] && at(i - 1, j - 1) + 1 == here) {
      out.ops.push_back({EditType::kSubstitute, i - 1, j - 1});
      --i;
      --j;
    } else if (i > 0 && at(i - 1, j) + 1 == here) {
      out.ops.push_back({EditType::kDelete, i - 1, j});
      --i;
    } else {
      out.ops.push_back({EditType::kInsert, i, j - 1});
      --j;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

PositionMap map_positions(const Alignment& alignment, std::size_t ref_len) {
  PositionMap map;
  map.hyp_of_ref.assign(ref_len, PositionMap::npos);
  for (const auto& op : alignment.ops) {
    if (op.type == EditType::kMatch || op.type == EditType::kSubstitute) map.hyp_of_ref[op.ref_pos] = op.hyp_pos;
  }
  return map;
}

Range project_range(const Alignment& alignment, Range ref_range) {
  std::size_t lo = PositionMap::npos;
  std::size_t hi = 0;
  std::size_t anchor = PositionMap::npos;
  for (const auto& op : alignment.ops) {
    bool covered = false;
    switch (op.type) {
      case EditType::kMatch:
      case EditType::kSubstitute:
        covered = op.ref_pos >= ref_range.start && op.ref_pos < ref_range.end;
        break;
      case EditType::kInsert:
        covered = op.ref_pos > ref_range.start && op.ref_pos < ref_range.end;
        break;
      case EditType::kDelete:
        if (anchor == PositionMap::npos && op.ref_pos >= ref_range.start) anchor = op.hyp_pos;
        break;
    }
    if (covered) {
      lo = std::min(lo, op.hyp_pos);
      hi = std::max(hi, op.hyp_pos + 1);
    }
  }
  if (lo == PositionMap::npos) {
    // Whole range deleted: anchor at the hypothesis position of the first deletion.
    if (anchor == PositionMap::npos) anchor = 0;
    return {anchor, anchor};
  }
  return {lo, hi};
}

}  // namespace dancer
