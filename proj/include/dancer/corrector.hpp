#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dancer/corpus.hpp"
#include "dancer/detection.hpp"
#include "dancer/entity_store.hpp"
#include "dancer/semantic_memory.hpp"

namespace dancer {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CorrectorConfig {
  double alpha = 0.6;           // weight of the phonetic log-score
  std::size_t top_k = 10;       // phonetic candidates handed to the semantic re-ranker
  std::size_t nbest_size = 10;  // hypotheses used as rejection evidence
  bool rejection = true;
  bool raw_beam_weights = false;  // use scores as weights instead of softmax-normalizing them

  void validate() const;
};

struct Candidate {
  EntityId id;
  double phonetic = 0.0;  // P_eta
  double semantic = 0.0;  // P_theta
  double fused = 0.0;
};
using CandidateSet = std::vector<Candidate>;

inline constexpr double kLogFloor = 1e-12;

// P_eta over the whole catalog: SIM to the corrupted span normalized by the
// catalog-wide SIM total (uniform if every SIM is 0), truncated to the top k
// with ties to the lower id. Throws on an empty catalog.
CandidateSet phonetic_retrieve(const PhoneticSequence& corrupted, const EntityCatalog& catalog, std::size_t k);

// fused = alpha * log P_eta + (1 - alpha) * log P_theta, both floored at
// kLogFloor; sorted by fused descending, ties to the lower id.
CandidateSet fuse_scores(CandidateSet candidates, double alpha);

// Softmax-normalized beam scores (or the raw scores when raw is set).
std::vector<double> beam_weights(const NBestList& nbest, bool raw = false);

// The top-1 span projected into every hypothesis (index 0 is the span
// itself). Projections can be empty when the region was deleted.
std::vector<Range> align_spans_across_nbest(Range top1_span, const NBestList& nbest);

// Sum over n of weight_n * NED(aligned_n, candidate).
double rejection_score(const PhoneticSequence& candidate, std::span<const PhoneticSequence> aligned,
                       std::span<const double> weights);

enum class Verdict { kAccept, kReject };

// Reject only when the candidate is strictly farther from the n-best evidence.
Verdict decide(double reject_candidate, double reject_original);

// Source of context embeddings F(x_obs).
class ContextEncoder {
 public:
  virtual ~ContextEncoder() = default;
  virtual EmbeddingVector encode(const MaskedContext& context) const = 0;
};

class ReferenceContextEncoder : public ContextEncoder {
 public:
  ReferenceContextEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  EmbeddingVector encode(const MaskedContext& context) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Looks vectors up by (utt_id, span_index); a missing entry is an error.
class TableContextEncoder : public ContextEncoder {
 public:
  explicit TableContextEncoder(ContextVectorTable table, bool normalize = false);
  EmbeddingVector encode(const MaskedContext& context) const override;

 private:
  ContextVectorTable table_;
};

// P_theta for a candidate set from a context encoder and the entity memory.
// Candidates without a memory row get a uniform 1/|set| share; rows present
// split the remaining mass by softmax.
class SemanticScorer {
 public:
  SemanticScorer(const EmbeddingMemory& memory, const ContextEncoder& encoder) : memory_(memory), encoder_(encoder) {}
  void score(const MaskedContext& context, CandidateSet& candidates) const;

 private:
  const EmbeddingMemory& memory_;
  const ContextEncoder& encoder_;
};

// Entity memory built with reference_embed over [CLS]e[SEP]d[SEP] for every
// described entity.
EmbeddingMemory build_reference_memory(const EntityCatalog& catalog, std::size_t dim, std::uint64_t seed);

enum class DetectorKind { kExternal, kBaseline, kGold };

// Corrupted-span source for the top-1 hypothesis of an utterance.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<CorruptedSpan> detect(const Utterance& utt) const = 0;
};

class ExternalDetector : public Detector {
 public:
  std::vector<CorruptedSpan> detect(const Utterance& utt) const override;
};

class BaselineDetector : public Detector {
 public:
  BaselineDetector(const EntityCatalog& catalog, BaselineDetectorConfig cfg) : catalog_(catalog), cfg_(cfg) {}
  std::vector<CorruptedSpan> detect(const Utterance& utt) const override;

 private:
  const EntityCatalog& catalog_;
  BaselineDetectorConfig cfg_;
};

// Gold NE spans projected from the reference onto the top-1 hypothesis.
class GoldDetector : public Detector {
 public:
  std::vector<CorruptedSpan> detect(const Utterance& utt) const override;
};

std::unique_ptr<Detector> make_detector(DetectorKind kind, const EntityCatalog& catalog,
                                        BaselineDetectorConfig baseline = {});

struct CorrectionResult {
  CorruptedSpan span;  // top-1 coordinates
  CandidateSet candidates;
  std::optional<EntityId> chosen;
  bool rejected = false;
  double reject_candidate = 0.0;
  double reject_original = 0.0;
};

struct UtteranceCorrection {
  std::string utt_id;
  std::string original;
  std::string text;
  std::vector<CorrectionResult> results;
};

// Applies accepted replacements to the top-1 text; spans must be disjoint.
std::string apply_corrections(std::u32string_view top1, const std::vector<CorrectionResult>& results,
                              const EntityCatalog& catalog);

// The full pipeline: detect, retrieve phonetically, re-rank with the
// semantic channel, fuse, gate through n-best rejection, substitute.
UtteranceCorrection correct_utterance(const Utterance& utt, const EntityCatalog& catalog, const SemanticScorer& scorer,
                                      const Detector& detector, const CorrectorConfig& cfg);

// Runs correct_utterance over a corpus with utterance-level parallelism;
// results are in input order and independent of the thread count.
std::vector<UtteranceCorrection> correct_corpus(const std::vector<Utterance>& corpus, const EntityCatalog& catalog,
                                                const SemanticScorer& scorer, const Detector& detector,
                                                const CorrectorConfig& cfg);

}  // namespace dancer
