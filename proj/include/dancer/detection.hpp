#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dancer/alignment.hpp"
#include "dancer/entity_store.hpp"

namespace dancer {

enum class BioTag : char { kO = 'O', kB = 'B', kI = 'I' };
using BioTags = std::vector<BioTag>;

BioTags parse_bio(std::string_view tags);  // "O O B I" or "OOBI"
std::string format_bio(const BioTags& tags);  // space separated

// A detected span [start, end) in characters of one hypothesis.
struct CorruptedSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  Range range() const noexcept { return {start, end}; }
  std::size_t length() const noexcept { return end - start; }
  bool operator==(const CorruptedSpan&) const = default;
};

CorruptedSpan make_span(std::u32string_view text, std::size_t start, std::size_t end);

// Throws std::invalid_argument unless spans are non-empty, in range, sorted and disjoint.
void validate_spans(const std::vector<Range>& spans, std::size_t length);

struct BioDecodeResult {
  std::vector<CorruptedSpan> spans;
  std::size_t repaired = 0;  // I tags with no preceding B/I, decoded as B
};

BioDecodeResult bio_decode(const BioTags& tags, std::u32string_view text);
BioTags bio_encode(const std::vector<Range>& spans, std::size_t length);

// Tags hypothesis characters that align into a reference NE region
// (substituted or matched within it, or inserted strictly inside it). In
// strict mode a region is tagged only when it contains at least one edit.
BioTags label_bio_by_alignment(std::u32string_view hyp, std::u32string_view ref, const std::vector<Range>& ref_ne_spans,
                               bool strict = false);

struct BaselineDetectorConfig {
  double min_sim = 0.8;
  std::size_t window_slack = 1;
};

// Lexicon-driven detector: windows of the hypothesis whose phonetic
// similarity to some catalog entity reaches min_sim, chosen greedily by
// similarity then leftmost start, non-overlapping, returned sorted.
std::vector<CorruptedSpan> detect_baseline(std::u32string_view hyp, const EntityCatalog& catalog,
                                           const BaselineDetectorConfig& cfg = {});

struct DetectionScores {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Exact span matching. Empty prediction and gold sets score 1.0 throughout.
DetectionScores eval_detector(const std::vector<Range>& predicted, const std::vector<Range>& gold);
DetectionScores eval_detector(const std::vector<std::vector<Range>>& predicted,
                              const std::vector<std::vector<Range>>& gold);

}  // namespace dancer
