#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dancer/alignment.hpp"
#include "dancer/corpus.hpp"
#include "dancer/corrector.hpp"
#include "dancer/entity_store.hpp"

namespace dancer {

enum class Scope { kInside, kOutside };

// Edit counts of one hypothesis against one reference, all read off a single
// char_align alignment. Substitutions and deletions belong to the scope of
// their reference character; an insertion belongs to the scope of the
// reference character it precedes (outside at end of string).
struct UtteranceMetrics {
  std::size_t ref_chars = 0;
  std::size_t inside_chars = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t inside_edits = 0;
  std::size_t outside_edits = 0;
  std::vector<bool> ne_recalled;  // one flag per NE span

  std::size_t outside_chars() const noexcept { return ref_chars - inside_chars; }
  std::size_t edits() const noexcept { return substitutions + deletions + insertions; }
};

UtteranceMetrics score_utterance(std::u32string_view hyp, std::u32string_view ref, const std::vector<Range>& ne_spans);

// Rate helper: edits / chars; a scope with no reference characters reports
// its raw edit count.
double error_rate(std::size_t edits, std::size_t chars) noexcept;

double cer(std::u32string_view hyp, std::u32string_view ref);
double span_scoped_cer(std::u32string_view hyp, std::u32string_view ref, const std::vector<Range>& ne_spans, Scope scope);
// Fraction of NE spans reproduced exactly by their aligned hypothesis
// region; 1.0 when there are no spans.
double ne_recall(std::u32string_view hyp, std::u32string_view ref, const std::vector<Range>& ne_spans);

struct MetricReport {
  std::size_t utterances = 0;
  std::size_t ref_chars = 0;
  std::size_t inside_chars = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t inside_edits = 0;
  std::size_t outside_edits = 0;
  std::size_t ne_total = 0;
  std::size_t ne_recalled = 0;

  void add(const UtteranceMetrics& m);
  double cer() const noexcept { return error_rate(substitutions + deletions + insertions, ref_chars); }
  double ne_cer() const noexcept { return error_rate(inside_edits, inside_chars); }
  double nne_cer() const noexcept { return error_rate(outside_edits, ref_chars - inside_chars); }
  double ne_recall() const noexcept {
    return ne_total == 0 ? 1.0 : static_cast<double>(ne_recalled) / static_cast<double>(ne_total);
  }
};

// Scores hypotheses (aligned by position with the corpus) against each
// utterance's ref; utterances without a ref are an error.
std::vector<UtteranceMetrics> score_corpus(const std::vector<Utterance>& corpus, const std::vector<std::string>& hyps);
MetricReport summarize(const std::vector<UtteranceMetrics>& metrics);

void write_report_csv_header(std::ostream& out);
void write_report_csv_row(std::ostream& out, std::string_view label, const MetricReport& report);

std::vector<std::string> texts_of(const std::vector<UtteranceCorrection>& corrections);
std::vector<std::string> top1_texts(const std::vector<Utterance>& corpus);

// Utterances whose gold NE spans include an entity that has a homophone in
// the catalog. Returned as utt_ids in sorted order.
std::vector<std::string> build_homophone_set(const std::vector<Utterance>& corpus, const EntityCatalog& catalog);
std::vector<Utterance> select_utterances(const std::vector<Utterance>& corpus, const std::vector<std::string>& ids);

std::vector<AnnotatedText> annotated_references(const std::vector<Utterance>& corpus);

struct FewShotBucket {
  std::size_t threshold = 0;
  std::size_t total = 0;
  std::size_t recalled = 0;
  double recall() const noexcept { return total == 0 ? 0.0 : static_cast<double>(recalled) / static_cast<double>(total); }
};

// Cumulative "<= threshold"-shot NE recall. Gold occurrences whose surface
// is not a catalog entity count as 0-shot.
std::vector<FewShotBucket> fewshot_report(const std::vector<Utterance>& corpus, const std::vector<UtteranceMetrics>& metrics,
                                          const EntityCatalog& catalog, const std::map<EntityId, std::size_t>& counts,
                                          const std::vector<std::size_t>& thresholds = {0, 5, 100});

// Everything a harness needs to run both correctors on an arbitrary catalog.
struct HarnessSetup {
  DetectorKind detector = DetectorKind::kExternal;
  BaselineDetectorConfig baseline;
  CorrectorConfig config;
  const ContextEncoder* encoder = nullptr;
  // Entity memory for a catalog; defaults to the reference embedder.
  std::function<EmbeddingMemory(const EntityCatalog&)> memory_for;
  std::size_t embed_dim = 256;
  std::uint64_t seed = 0;
};

struct SweepRow {
  double alpha;
  std::size_t k;
  double cer;
};

std::vector<SweepRow> sweep(const std::vector<Utterance>& corpus, const EntityCatalog& catalog, const HarnessSetup& setup,
                            const std::vector<double>& alphas, const std::vector<std::size_t>& ks);

struct ScalingPoint {
  std::size_t size;
  double phonetic_recall;  // phonetic-only corrector
  double dancer_recall;
};

// For each size: the gold entities of the corpus plus the first
// (size - |gold|) padding entities of a seeded shuffle of the rest of the
// pool. Ids follow one seeded global order shared by every size, so smaller
// catalogs are id-ordered subsets of larger ones.
std::vector<ScalingPoint> scaling_curve(const std::vector<Utterance>& corpus, const EntityCatalog& pool,
                                        const std::vector<std::size_t>& sizes, const HarnessSetup& setup);

}  // namespace dancer
