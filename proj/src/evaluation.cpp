#include "dancer/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "dancer/ped_nec.hpp"
#include "dancer/rng.hpp"
#include "dancer/utf8.hpp"

namespace dancer {

namespace {

std::vector<bool> inside_mask(std::size_t len, const std::vector<Range>& spans) {
  std::vector<bool> mask(len, false);
  for (const auto& s : spans) {
    if (s.start >= s.end || s.end > len) throw std::out_of_range("NE span out of range");
    for (std::size_t i = s.start; i < s.end; ++i) mask[i] = true;
  }
  return mask;
}

}  // namespace

UtteranceMetrics score_utterance(std::u32string_view hyp, std::u32string_view ref, const std::vector<Range>& ne_spans) {
  const auto mask = inside_mask(ref.size(), ne_spans);
  const Alignment alignment = char_align(hyp, ref);

  UtteranceMetrics m;
  m.ref_chars = ref.size();
  m.inside_chars = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  for (const auto& op : alignment.ops) {
    if (op.type == EditType::kMatch) continue;
    switch (op.type) {
      case EditType::kSubstitute: ++m.substitutions; break;
      case EditType::kDelete: ++m.deletions; break;
      default: ++m.insertions; break;
    }
    const bool inside = op.ref_pos < ref.size() && mask[op.ref_pos];
    ++(inside ? m.inside_edits : m.outside_edits);
  }
  for (const auto& s : ne_spans) {
    const bool damaged = std::any_of(alignment.ops.begin(), alignment.ops.end(), [&](const EditOp& op) {
      switch (op.type) {
        case EditType::kMatch: return false;
        case EditType::kInsert: return op.ref_pos > s.start && op.ref_pos < s.end;
        default: return op.ref_pos >= s.start && op.ref_pos < s.end;
      }
    });
    m.ne_recalled.push_back(!damaged);
  }
  return m;
}

double error_rate(std::size_t edits, std::size_t chars) noexcept {
  if (chars == 0) return static_cast<double>(edits);
  return static_cast<double>(edits) / static_cast<double>(chars);
}

double cer(std::u32string_view hyp, std::u32string_view ref) {
  const auto m = score_utterance(hyp, ref, {});
  return error_rate(m.edits(), m.ref_chars);
}

double span_scoped_cer(std::u32string_view hyp, std::u32string_view ref, const std::vector<Range>& ne_spans, Scope scope) {
  const auto m = score_utterance(hyp, ref, ne_spans);
  return scope == Scope::kInside ? error_rate(m.inside_edits, m.inside_chars) : error_rate(m.outside_edits, m.outside_chars());
}

double ne_recall(std::u32string_view hyp, std::u32string_view ref, const std::vector<Range>& ne_spans) {
  const auto m = score_utterance(hyp, ref, ne_spans);
  if (m.ne_recalled.empty()) return 1.0;
  const auto hit = std::count(m.ne_recalled.begin(), m.ne_recalled.end(), true);
  return static_cast<double>(hit) / static_cast<double>(m.ne_recalled.size());
}

void MetricReport::add(const UtteranceMetrics& m) {
  ++utterances;
  ref_chars += m.ref_chars;
  inside_chars += m.inside_chars;
  substitutions += m.substitutions;
  deletions += m.deletions;
  insertions += m.insertions;
  inside_edits += m.inside_edits;
  outside_edits += m.outside_edits;
  ne_total += m.ne_recalled.size();
  ne_recalled += static_cast<std::size_t>(std::count(m.ne_recalled.begin(), m.ne_recalled.end(), true));
}

std::vector<UtteranceMetrics> score_corpus(const std::vector<Utterance>& corpus, const std::vector<std::string>& hyps) {
  if (hyps.size() != corpus.size()) throw std::invalid_argument("one hypothesis per utterance required");
  std::vector<UtteranceMetrics> out(corpus.size());
  std::vector<std::string> missing;
  for (const auto& u : corpus) {
    if (!u.ref) missing.push_back(u.utt_id);
  }
  if (!missing.empty()) throw std::invalid_argument("utt_id " + missing.front() + " has no ref");
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = score_utterance(utf8_decode(hyps[i]), utf8_decode(*corpus[i].ref), corpus[i].ne_spans);
  }
  return out;
}

MetricReport summarize(const std::vector<UtteranceMetrics>& metrics) {
  MetricReport r;
  for (const auto& m : metrics) r.add(m);
  return r;
}

void write_report_csv_header(std::ostream& out) {
  out << "set,utterances,cer,nne_cer,ne_cer,ne_recall,substitutions,deletions,insertions,ref_chars,ne_chars,ne_total\n";
}

void write_report_csv_row(std::ostream& out, std::string_view label, const MetricReport& r) {
  std::ostringstream row;
  row << std::fixed << std::setprecision(6) << label << ',' << r.utterances << ',' << r.cer() << ',' << r.nne_cer() << ','
      << r.ne_cer() << ',' << r.ne_recall() << ',' << r.substitutions << ',' << r.deletions << ',' << r.insertions << ','
      << r.ref_chars << ',' << r.inside_chars << ',' << r.ne_total << '\n';
  out << row.str();
}

std::vector<std::string> texts_of(const std::vector<UtteranceCorrection>& corrections) {
  std::vector<std::string> out;
  out.reserve(corrections.size());
  for (const auto& c : corrections) out.push_back(c.text);
  return out;
}

std::vector<std::string> top1_texts(const std::vector<Utterance>& corpus) {
  std::vector<std::string> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus) out.push_back(u.nbest.top().text);
  return out;
}

namespace {

std::string span_surface(const std::u32string& text, const Range& r) {
  return utf8_encode(std::u32string_view(text).substr(r.start, r.length()));
}

}  // namespace

std::vector<std::string> build_homophone_set(const std::vector<Utterance>& corpus, const EntityCatalog& catalog) {
  std::set<std::string> confusable;
  for (const auto& [a, b] : homophone_pairs(catalog)) {
    confusable.insert(catalog.at(a).surface);
    confusable.insert(catalog.at(b).surface);
  }
  std::vector<std::string> out;
  if (confusable.empty()) return out;
  for (const auto& u : corpus) {
    if (!u.ref) continue;
    const auto ref = utf8_decode(*u.ref);
    const bool hit = std::any_of(u.ne_spans.begin(), u.ne_spans.end(),
                                 [&](const Range& r) { return confusable.count(span_surface(ref, r)) != 0; });
    if (hit) out.push_back(u.utt_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Utterance> select_utterances(const std::vector<Utterance>& corpus, const std::vector<std::string>& ids) {
  const std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<Utterance> out;
  for (const auto& u : corpus) {
    if (wanted.count(u.utt_id)) out.push_back(u);
  }
  return out;
}

std::vector<AnnotatedText> annotated_references(const std::vector<Utterance>& corpus) {
  std::vector<AnnotatedText> out;
  for (const auto& u : corpus) {
    if (u.ref) out.push_back({*u.ref, u.ne_spans});
  }
  return out;
}

std::vector<FewShotBucket> fewshot_report(const std::vector<Utterance>& corpus, const std::vector<UtteranceMetrics>& metrics,
                                          const EntityCatalog& catalog, const std::map<EntityId, std::size_t>& counts,
                                          const std::vector<std::size_t>& thresholds) {
  if (metrics.size() != corpus.size()) throw std::invalid_argument("fewshot_report: metrics/corpus size mismatch");
  std::vector<FewShotBucket> buckets;
  for (auto t : thresholds) buckets.push_back({t, 0, 0});
  std::sort(buckets.begin(), buckets.end(), [](const auto& a, const auto& b) { return a.threshold < b.threshold; });

  for (std::size_t u = 0; u < corpus.size(); ++u) {
    if (!corpus[u].ref) continue;
    const auto ref = utf8_decode(*corpus[u].ref);
    for (std::size_t s = 0; s < corpus[u].ne_spans.size(); ++s) {
      std::size_t shots = 0;
      if (const auto id = catalog.find(span_surface(ref, corpus[u].ne_spans[s]))) {
        if (auto it = counts.find(*id); it != counts.end()) shots = it->second;
      }
      for (auto& b : buckets) {
        if (shots <= b.threshold) {
          ++b.total;
          if (metrics[u].ne_recalled[s]) ++b.recalled;
        }
      }
    }
  }
  return buckets;
}

namespace {

EmbeddingMemory memory_for(const HarnessSetup& setup, const EntityCatalog& catalog) {
  if (setup.memory_for) return setup.memory_for(catalog);
  return build_reference_memory(catalog, setup.embed_dim, setup.seed);
}

}  // namespace

std::vector<SweepRow> sweep(const std::vector<Utterance>& corpus, const EntityCatalog& catalog, const HarnessSetup& setup,
                            const std::vector<double>& alphas, const std::vector<std::size_t>& ks) {
  if (setup.encoder == nullptr) throw std::invalid_argument("sweep: no context encoder");
  const auto memory = memory_for(setup, catalog);
  const SemanticScorer scorer(memory, *setup.encoder);
  const auto detector = make_detector(setup.detector, catalog, setup.baseline);
  std::vector<SweepRow> rows;
  for (double a : alphas) {
    for (std::size_t k : ks) {
      CorrectorConfig cfg = setup.config;
      cfg.alpha = a;
      cfg.top_k = k;
      const auto corrected = correct_corpus(corpus, catalog, scorer, *detector, cfg);
      rows.push_back({a, k, summarize(score_corpus(corpus, texts_of(corrected))).cer()});
    }
  }
  return rows;
}

std::vector<ScalingPoint> scaling_curve(const std::vector<Utterance>& corpus, const EntityCatalog& pool,
                                        const std::vector<std::size_t>& sizes, const HarnessSetup& setup) {
  if (setup.encoder == nullptr) throw std::invalid_argument("scaling_curve: no context encoder");
  std::set<std::string> gold;
  for (const auto& u : corpus) {
    if (!u.ref) continue;
    const auto ref = utf8_decode(*u.ref);
    for (const auto& r : u.ne_spans) {
      auto s = span_surface(ref, r);
      if (!pool.find(s)) throw NotFoundError("gold entity \"" + s + "\" is missing from the pool");
      gold.insert(std::move(s));
    }
  }
  std::vector<std::string> padding;
  for (const auto& e : pool.entities()) {
    if (!gold.count(e.surface)) padding.push_back(e.surface);
  }
  Rng rng(setup.seed);
  rng.shuffle(padding);

  // One global id order so that every smaller catalog is an ordered subset.
  std::vector<std::string> order(gold.begin(), gold.end());
  order.insert(order.end(), padding.begin(), padding.end());
  Rng order_rng(setup.seed ^ 0x5CA1AB1EULL);
  order_rng.shuffle(order);
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  std::vector<ScalingPoint> points;
  for (std::size_t size : sizes) {
    if (size < gold.size()) throw ConfigError("catalog size " + std::to_string(size) + " is below the gold entity count");
    const std::size_t extra = std::min(size - gold.size(), padding.size());
    std::vector<std::string> members(gold.begin(), gold.end());
    members.insert(members.end(), padding.begin(), padding.begin() + static_cast<std::ptrdiff_t>(extra));
    std::sort(members.begin(), members.end(), [&](const auto& a, const auto& b) { return rank[a] < rank[b]; });
    const EntityCatalog catalog = pool.subset(members);

    const auto detector = make_detector(setup.detector, catalog, setup.baseline);
    CorrectorConfig phonetic_cfg = setup.config;
    phonetic_cfg.alpha = 1.0;
    const auto phonetic = ped_nec_correct_corpus(corpus, catalog, *detector, phonetic_cfg);

    const auto memory = memory_for(setup, catalog);
    const SemanticScorer scorer(memory, *setup.encoder);
    const auto dancer = correct_corpus(corpus, catalog, scorer, *detector, setup.config);

    points.push_back({size, summarize(score_corpus(corpus, texts_of(phonetic))).ne_recall(),
                      summarize(score_corpus(corpus, texts_of(dancer))).ne_recall()});
  }
  return points;
}

}  // namespace dancer
