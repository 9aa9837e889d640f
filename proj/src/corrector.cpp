#include "dancer/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "dancer/kernels.hpp"
#include "dancer/utf8.hpp"

namespace dancer {

void CorrectorConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (top_k < 1) throw ConfigError("top-k must be at least 1");
  if (nbest_size < 1) throw ConfigError("n-best size must be at least 1");
}

CandidateSet phonetic_retrieve(const PhoneticSequence& corrupted, const EntityCatalog& catalog, std::size_t k) {
  if (catalog.empty()) throw std::invalid_argument("phonetic_retrieve: empty catalog");
  auto sims = kernels::parallel::similarity_scan(corrupted, catalog.entities());
  double total = 0.0;
  for (double s : sims) total += s;
  if (total > 0.0) {
    for (double& s : sims) s /= total;
  } else {
    std::fill(sims.begin(), sims.end(), 1.0 / static_cast<double>(sims.size()));
  }
  CandidateSet out;
  for (const auto& r : kernels::select_top_k(std::move(sims), k)) {
    out.push_back({static_cast<EntityId>(r.index), r.score, 0.0, 0.0});
  }
  return out;
}

CandidateSet fuse_scores(CandidateSet candidates, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  for (auto& c : candidates) {
    c.fused = alpha * std::log(std::max(c.phonetic, kLogFloor)) + (1.0 - alpha) * std::log(std::max(c.semantic, kLogFloor));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.fused != b.fused) return a.fused > b.fused;
    return a.id < b.id;
  });
  return candidates;
}

std::vector<double> beam_weights(const NBestList& nbest, bool raw) {
  std::vector<double> scores;
  scores.reserve(nbest.size());
  for (const auto& h : nbest.hypotheses) scores.push_back(h.score);
  return raw ? scores : softmax(scores);
}

std::vector<Range> align_spans_across_nbest(Range top1_span, const NBestList& nbest) {
  const auto top1 = utf8_decode(nbest.top().text);
  if (top1_span.start >= top1_span.end || top1_span.end > top1.size()) {
    throw std::invalid_argument("align_spans_across_nbest: span outside the top-1 hypothesis");
  }
  std::vector<Range> out;
  out.reserve(nbest.size());
  out.push_back(top1_span);
  for (std::size_t n = 1; n < nbest.size(); ++n) {
    const auto hyp = utf8_decode(nbest.hypotheses[n].text);
    out.push_back(project_range(char_align(hyp, top1), top1_span));
  }
  return out;
}

double rejection_score(const PhoneticSequence& candidate, std::span<const PhoneticSequence> aligned,
                       std::span<const double> weights) {
  if (aligned.size() != weights.size()) throw std::invalid_argument("rejection_score: one weight per hypothesis");
  double total = 0.0;
  for (std::size_t n = 0; n < aligned.size(); ++n) total += weights[n] * normalized_distance(aligned[n], candidate);
  return total;
}

Verdict decide(double reject_candidate, double reject_original) {
  return reject_candidate > reject_original ? Verdict::kReject : Verdict::kAccept;
}

EmbeddingVector ReferenceContextEncoder::encode(const MaskedContext& context) const {
  return reference_embed(context.tokens, dim_, seed_);
}

TableContextEncoder::TableContextEncoder(ContextVectorTable table, bool normalize) : table_(std::move(table)) {
  if (normalize) {
    for (auto& [origin, v] : table_) l2_normalize(v);
  }
}

EmbeddingVector TableContextEncoder::encode(const MaskedContext& context) const {
  auto it = table_.find(context.origin);
  if (it == table_.end()) {
    throw InputError("no context vector for utt_id " + context.origin.utt_id + " span " +
                             std::to_string(context.origin.span_index));
  }
  return it->second;
}

void SemanticScorer::score(const MaskedContext& context, CandidateSet& candidates) const {
  if (candidates.empty()) throw std::invalid_argument("semantic scoring needs at least one candidate");
  std::vector<std::pair<EntityId, EmbeddingVector>> described;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (const auto row = memory_.row_of(candidates[i].id)) {
      described.emplace_back(candidates[i].id, memory_.vector(*row));
      slots.push_back(i);
    }
  }
  const double share = 1.0 / static_cast<double>(candidates.size());
  for (auto& c : candidates) c.semantic = share;
  if (described.empty()) return;

  const auto query = encoder_.encode(context);
  const auto dist = semantic_distribution(query, described);
  const double mass = share * static_cast<double>(described.size());
  for (std::size_t j = 0; j < slots.size(); ++j) candidates[slots[j]].semantic = mass * dist[j].value;
}

EmbeddingMemory build_reference_memory(const EntityCatalog& catalog, std::size_t dim, std::uint64_t seed) {
  EmbeddingMemory memory(dim);
  for (const auto& e : catalog.entities()) {
    if (const auto* d = catalog.description(e.id)) memory.add(e.id, e.surface, reference_embed(entity_input(e.surface, *d), dim, seed));
  }
  return memory;
}

std::vector<CorruptedSpan> ExternalDetector::detect(const Utterance& utt) const {
  if (!utt.ced_spans) throw InputError("utt_id " + utt.utt_id + ": external detector needs ced_spans");
  const auto top1 = utf8_decode(utt.nbest.top().text);
  std::vector<CorruptedSpan> out;
  for (const auto& r : *utt.ced_spans) out.push_back(make_span(top1, r.start, r.end));
  return out;
}

std::vector<CorruptedSpan> BaselineDetector::detect(const Utterance& utt) const {
  return detect_baseline(utf8_decode(utt.nbest.top().text), catalog_, cfg_);
}

std::vector<CorruptedSpan> GoldDetector::detect(const Utterance& utt) const {
  if (!utt.ref) throw InputError("utt_id " + utt.utt_id + ": gold detector needs ref and ne_spans");
  const auto top1 = utf8_decode(utt.nbest.top().text);
  const auto tags = label_bio_by_alignment(top1, utf8_decode(*utt.ref), utt.ne_spans, /*strict=*/false);
  return bio_decode(tags, top1).spans;
}

std::unique_ptr<Detector> make_detector(DetectorKind kind, const EntityCatalog& catalog, BaselineDetectorConfig baseline) {
  switch (kind) {
    case DetectorKind::kExternal: return std::make_unique<ExternalDetector>();
    case DetectorKind::kBaseline: return std::make_unique<BaselineDetector>(catalog, baseline);
    case DetectorKind::kGold: return std::make_unique<GoldDetector>();
  }
  throw std::logic_error("unknown detector kind");
}

std::string apply_corrections(std::u32string_view top1, const std::vector<CorrectionResult>& results,
                              const EntityCatalog& catalog) {
  std::u32string out;
  std::size_t cursor = 0;
  for (const auto& r : results) {
    if (r.span.start < cursor || r.span.end > top1.size()) throw std::invalid_argument("corrections overlap or exceed text");
    out.append(top1.substr(cursor, r.span.start - cursor));
    if (r.chosen && !r.rejected) {
      out += catalog.at(*r.chosen).chars;
    } else {
      out.append(top1.substr(r.span.start, r.span.length()));
    }
    cursor = r.span.end;
  }
  out.append(top1.substr(cursor));
  return utf8_encode(out);
}

namespace {

std::vector<PhoneticSequence> aligned_phonetics(const std::vector<Range>& aligned, const NBestList& nbest,
                                                const PronunciationLexicon& lex) {
  std::vector<PhoneticSequence> out;
  out.reserve(aligned.size());
  for (std::size_t n = 0; n < aligned.size(); ++n) {
    const auto hyp = utf8_decode(nbest.hypotheses[n].text);
    out.push_back(phoneticize(std::u32string_view(hyp).substr(aligned[n].start, aligned[n].length()), lex));
  }
  return out;
}

}  // namespace

UtteranceCorrection correct_utterance(const Utterance& utt, const EntityCatalog& catalog, const SemanticScorer& scorer,
                                      const Detector& detector, const CorrectorConfig& cfg) {
  cfg.validate();
  UtteranceCorrection out{utt.utt_id, utt.nbest.top().text, utt.nbest.top().text, {}};
  if (catalog.empty()) return out;

  const NBestList nbest = utt.nbest.truncated(cfg.nbest_size);
  const auto top1 = utf8_decode(nbest.top().text);
  auto spans = detector.detect(utt);
  std::vector<Range> ranges;
  for (const auto& s : spans) ranges.push_back(s.range());
  validate_spans(ranges, top1.size());
  const auto weights = beam_weights(nbest, cfg.raw_beam_weights);
  const auto& lex = catalog.lexicon();

  for (std::size_t m = 0; m < spans.size(); ++m) {
    CorrectionResult result;
    result.span = spans[m];
    const auto corrupted = phoneticize(std::u32string_view(top1).substr(spans[m].start, spans[m].length()), lex);

    auto candidates = phonetic_retrieve(corrupted, catalog, cfg.top_k);
    const auto context = insert_markers(mask_span(top1, spans[m].range(), {utt.utt_id, m}));
    scorer.score(context, candidates);
    result.candidates = fuse_scores(std::move(candidates), cfg.alpha);
    result.chosen = result.candidates.front().id;

    const auto evidence = aligned_phonetics(align_spans_across_nbest(spans[m].range(), nbest), nbest, lex);
    result.reject_candidate = rejection_score(catalog.at(*result.chosen).phonetic, evidence, weights);
    result.reject_original = rejection_score(corrupted, evidence, weights);
    result.rejected = cfg.rejection && decide(result.reject_candidate, result.reject_original) == Verdict::kReject;
    out.results.push_back(std::move(result));
  }
  out.text = apply_corrections(top1, out.results, catalog);
  return out;
}

std::vector<UtteranceCorrection> correct_corpus(const std::vector<Utterance>& corpus, const EntityCatalog& catalog,
                                                const SemanticScorer& scorer, const Detector& detector,
                                                const CorrectorConfig& cfg) {
  cfg.validate();
  std::vector<UtteranceCorrection> out(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = correct_utterance(corpus[i], catalog, scorer, detector, cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace dancer
