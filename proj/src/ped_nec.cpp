#include "dancer/ped_nec.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "dancer/utf8.hpp"

namespace dancer {

UtteranceCorrection ped_nec_correct(const Utterance& utt, const EntityCatalog& catalog, const Detector& detector,
                                    const CorrectorConfig& cfg) {
  cfg.validate();
  UtteranceCorrection out{utt.utt_id, utt.nbest.top().text, utt.nbest.top().text, {}};
  if (catalog.empty()) return out;

  const NBestList nbest = utt.nbest.truncated(cfg.nbest_size);
  const auto top1 = utf8_decode(nbest.top().text);
  const auto spans = detector.detect(utt);
  std::vector<Range> ranges;
  for (const auto& s : spans) ranges.push_back(s.range());
  validate_spans(ranges, top1.size());
  const auto weights = beam_weights(nbest, cfg.raw_beam_weights);
  const auto& lex = catalog.lexicon();

  for (const auto& span : spans) {
    CorrectionResult result;
    result.span = span;
    const auto corrupted = phoneticize(std::u32string_view(top1).substr(span.start, span.length()), lex);
    result.candidates = phonetic_retrieve(corrupted, catalog, cfg.top_k);
    for (auto& c : result.candidates) c.fused = std::log(std::max(c.phonetic, kLogFloor));
    result.chosen = result.candidates.front().id;

    std::vector<PhoneticSequence> evidence;
    const auto aligned = align_spans_across_nbest(span.range(), nbest);
    for (std::size_t n = 0; n < aligned.size(); ++n) {
      const auto hyp = utf8_decode(nbest.hypotheses[n].text);
      evidence.push_back(phoneticize(std::u32string_view(hyp).substr(aligned[n].start, aligned[n].length()), lex));
    }
    result.reject_candidate = rejection_score(catalog.at(*result.chosen).phonetic, evidence, weights);
    result.reject_original = rejection_score(corrupted, evidence, weights);
    result.rejected = cfg.rejection && decide(result.reject_candidate, result.reject_original) == Verdict::kReject;
    out.results.push_back(std::move(result));
  }
  out.text = apply_corrections(top1, out.results, catalog);
  return out;
}

std::vector<UtteranceCorrection> ped_nec_correct_corpus(const std::vector<Utterance>& corpus,
                                                        const EntityCatalog& catalog, const Detector& detector,
                                                        const CorrectorConfig& cfg) {
  std::vector<UtteranceCorrection> out(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = ped_nec_correct(corpus[i], catalog, detector, cfg);
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
