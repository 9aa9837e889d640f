#include "dancer/detection.hpp"

#include <algorithm>
#include <set>

#include "dancer/utf8.hpp"

namespace dancer {

BioTags parse_bio(std::string_view tags) {
  BioTags out;
  for (char c : tags) {
    switch (c) {
      case 'O': out.push_back(BioTag::kO); break;
      case 'B': out.push_back(BioTag::kB); break;
      case 'I': out.push_back(BioTag::kI); break;
      case ' ': break;
      default: throw std::invalid_argument(std::string("invalid BIO tag '") + c + "'");
    }
  }
  return out;
}

std::string format_bio(const BioTags& tags) {
  std::string out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (i) out.push_back(' ');
    out.push_back(static_cast<char>(tags[i]));
  }
  return out;
}

CorruptedSpan make_span(std::u32string_view text, std::size_t start, std::size_t end) {
  if (start >= end || end > text.size()) {
    throw std::invalid_argument("span [" + std::to_string(start) + "," + std::to_string(end) +
                                ") invalid for text of length " + std::to_string(text.size()));
  }
  return {start, end, utf8_encode(text.substr(start, end - start))};
}

void validate_spans(const std::vector<Range>& spans, std::size_t length) {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start >= s.end) throw std::invalid_argument("span " + std::to_string(i) + " is empty or reversed");
    if (s.end > length) throw std::invalid_argument("span " + std::to_string(i) + " exceeds text length");
    if (i > 0 && s.start < prev_end) throw std::invalid_argument("span " + std::to_string(i) + " overlaps or is unsorted");
    prev_end = s.end;
  }
}

BioDecodeResult bio_decode(const BioTags& tags, std::u32string_view text) {
  if (tags.size() != text.size()) throw std::invalid_argument("tag count does not match text length");
  BioDecodeResult out;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i] == BioTag::kO) {
      ++i;
      continue;
    }
    if (tags[i] == BioTag::kI) ++out.repaired;
    const std::size_t start = i++;
    while (i < tags.size() && tags[i] == BioTag::kI) ++i;
    out.spans.push_back(make_span(text, start, i));
  }
  return out;
}

BioTags bio_encode(const std::vector<Range>& spans, std::size_t length) {
  validate_spans(spans, length);
  BioTags tags(length, BioTag::kO);
  for (const auto& s : spans) {
    tags[s.start] = BioTag::kB;
    for (std::size_t i = s.start + 1; i < s.end; ++i) tags[i] = BioTag::kI;
  }
  return tags;
}

BioTags label_bio_by_alignment(std::u32string_view hyp, std::u32string_view ref, const std::vector<Range>& ref_ne_spans,
                               bool strict) {
  for (const auto& s : ref_ne_spans) {
    if (s.start >= s.end || s.end > ref.size()) throw std::out_of_range("reference NE span out of range");
  }
  const Alignment alignment = char_align(hyp, ref);
  std::vector<Range> regions;
  for (const auto& ne : ref_ne_spans) {
    if (strict) {
      const bool edited = std::any_of(alignment.ops.begin(), alignment.ops.end(), [&](const EditOp& op) {
        switch (op.type) {
          case EditType::kMatch: return false;
          case EditType::kInsert: return op.ref_pos > ne.start && op.ref_pos < ne.end;
          default: return op.ref_pos >= ne.start && op.ref_pos < ne.end;
        }
      });
      if (!edited) continue;
    }
    const Range region = project_range(alignment, ne);
    if (!region.empty()) regions.push_back(region);
  }
  std::sort(regions.begin(), regions.end(), [](const Range& a, const Range& b) { return a.start < b.start; });
  BioTags tags(hyp.size(), BioTag::kO);
  for (const auto& r : regions) {
    tags[r.start] = BioTag::kB;
    for (std::size_t i = r.start + 1; i < r.end; ++i) tags[i] = BioTag::kI;
  }
  return tags;
}

std::vector<CorruptedSpan> detect_baseline(std::u32string_view hyp, const EntityCatalog& catalog,
                                           const BaselineDetectorConfig& cfg) {
  if (catalog.empty() || hyp.empty()) return {};
  const PhoneticSequence phones = phoneticize(hyp, catalog.lexicon());

  std::set<std::size_t> lengths;
  for (const auto& e : catalog.entities()) lengths.insert(e.phonetic.size());
  std::set<std::size_t> widths;
  for (std::size_t len : lengths) {
    const std::size_t lo = len > cfg.window_slack ? len - cfg.window_slack : 1;
    for (std::size_t w = lo; w <= len + cfg.window_slack; ++w) {
      if (w >= 1 && w <= hyp.size()) widths.insert(w);
    }
  }

  struct Window {
    std::size_t start;
    std::size_t width;
    double sim;
  };
  std::vector<Window> windows;
  for (std::size_t w : widths) {
    for (std::size_t start = 0; start + w <= hyp.size(); ++start) {
      PhoneticSequence slice;
      slice.syllables.assign(phones.syllables.begin() + static_cast<std::ptrdiff_t>(start),
                             phones.syllables.begin() + static_cast<std::ptrdiff_t>(start + w));
      double best = 0.0;
      for (const auto& e : catalog.entities()) {
        const std::size_t len = e.phonetic.size();
        const std::size_t gap = len > w ? len - w : w - len;
        if (gap > cfg.window_slack) continue;
        best = std::max(best, similarity(slice, e.phonetic));
      }
      if (best >= cfg.min_sim) windows.push_back({start, w, best});
    }
  }
  std::sort(windows.begin(), windows.end(), [](const Window& a, const Window& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (a.start != b.start) return a.start < b.start;
    return a.width < b.width;
  });

  std::vector<bool> taken(hyp.size(), false);
  std::vector<CorruptedSpan> out;
  for (const auto& w : windows) {
    const auto first = taken.begin() + static_cast<std::ptrdiff_t>(w.start);
    if (std::any_of(first, first + static_cast<std::ptrdiff_t>(w.width), [](bool t) { return t; })) continue;
    std::fill(first, first + static_cast<std::ptrdiff_t>(w.width), true);
    out.push_back(make_span(hyp, w.start, w.start + w.width));
  }
  std::sort(out.begin(), out.end(), [](const CorruptedSpan& a, const CorruptedSpan& b) { return a.start < b.start; });
  return out;
}

namespace {

DetectionScores finish(std::size_t tp, std::size_t predicted, std::size_t gold) {
  DetectionScores s{tp, predicted, gold};
  s.precision = predicted == 0 ? (gold == 0 ? 1.0 : 0.0) : static_cast<double>(tp) / static_cast<double>(predicted);
  s.recall = gold == 0 ? (predicted == 0 ? 1.0 : 0.0) : static_cast<double>(tp) / static_cast<double>(gold);
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

std::size_t count_matches(const std::vector<Range>& predicted, const std::vector<Range>& gold) {
  std::set<std::pair<std::size_t, std::size_t>> g;
  for (const auto& r : gold) g.emplace(r.start, r.end);
  std::size_t tp = 0;
  for (const auto& r : predicted) tp += g.erase({r.start, r.end});
  return tp;
}

}  // namespace

DetectionScores eval_detector(const std::vector<Range>& predicted, const std::vector<Range>& gold) {
  return finish(count_matches(predicted, gold), predicted.size(), gold.size());
}

DetectionScores eval_detector(const std::vector<std::vector<Range>>& predicted,
                              const std::vector<std::vector<Range>>& gold) {
  if (predicted.size() != gold.size()) throw std::invalid_argument("prediction/gold utterance count mismatch");
  std::size_t tp = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    tp += count_matches(predicted[i], gold[i]);
    np += predicted[i].size();
    ng += gold[i].size();
  }
  return finish(tp, np, ng);
}

}  // namespace dancer
