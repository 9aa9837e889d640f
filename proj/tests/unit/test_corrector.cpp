#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dancer/corrector.hpp"
#include "dancer/kernels.hpp"
#include "dancer/ped_nec.hpp"
#include "dancer/rng.hpp"
#include "dancer/utf8.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dancer;

namespace {

std::shared_ptr<const PronunciationLexicon> letter_lexicon() {
  std::string tsv;
  for (char c = 'a'; c <= 'z'; ++c) tsv += std::string(1, c) + "\t" + c + c + "1\n";
  std::istringstream in(tsv);
  return std::make_shared<PronunciationLexicon>(load_lexicon(in));
}

Utterance make_utt(std::string id, std::vector<std::pair<std::string, double>> nbest, std::vector<Range> ced) {
  Utterance u;
  u.utt_id = std::move(id);
  for (auto& [t, s] : nbest) u.nbest.hypotheses.push_back({t, s});
  u.ced_spans = std::move(ced);
  return u;
}

const char* const kSwimmer = "韓國遊泳運動員，曾在日本參加比賽";
const char* const kComposer = "作曲家，創作流行歌曲與音樂劇";

}  // namespace

TEST_CASE("phonetic_retrieve") {
  SUBCASE("normalizes over the catalog") {
    EntityCatalog c(letter_lexicon());
    c.add("abcde");  // SIM 0.8
    c.add("aqrst");  // SIM 0.2
    const auto cands = phonetic_retrieve(phoneticize("abcdx", c.lexicon()), c, 10);
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].id == 0);
    CHECK(cands[0].phonetic == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(cands[1].phonetic == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("sums to one over the full catalog, truncation keeps the order") {
    Rng rng(41);
    EntityCatalog c(letter_lexicon());
    while (c.size() < 60) {
      const auto t = oracle::random_text(rng, U"abcdef", 6);
      if (!t.empty() && !c.find(utf8_encode(t))) c.add(utf8_encode(t));
    }
    for (int q = 0; q < 50; ++q) {
      const auto query = phoneticize(utf8_encode(oracle::random_text(rng, U"abcdefg", 6)), c.lexicon());
      const auto all = phonetic_retrieve(query, c, c.size());
      double sum = 0.0;
      for (const auto& x : all) sum += x.phonetic;
      CHECK(std::abs(sum - 1.0) < 1e-9);
      const auto top = phonetic_retrieve(query, c, 5);
      REQUIRE(top.size() == 5);
      for (std::size_t i = 0; i < top.size(); ++i) CHECK(top[i].id == all[i].id);
      for (std::size_t i = 1; i < all.size(); ++i) {
        CHECK(all[i - 1].phonetic >= all[i].phonetic);
        if (all[i - 1].phonetic == all[i].phonetic) CHECK(all[i - 1].id < all[i].id);
      }
    }
  }
  SUBCASE("exact entity ranks first") {
    const auto c = fixtures::catalog({{"张伟", nullptr}, {"朴泰桓", nullptr}, {"李明", nullptr}});
    const auto cands = phonetic_retrieve(phoneticize("朴泰桓", c.lexicon()), c, 3);
    CHECK(cands[0].id == 1);
  }
  SUBCASE("uniform when nothing is similar") {
    EntityCatalog c(letter_lexicon());
    c.add("ab");
    c.add("cd");
    const auto cands = phonetic_retrieve(phoneticize("xyz", c.lexicon()), c, 2);
    CHECK(cands[0].phonetic == 0.5);
    CHECK(cands[1].phonetic == 0.5);
  }
  SUBCASE("empty catalog") {
    EntityCatalog c(letter_lexicon());
    CHECK_THROWS(phonetic_retrieve(phoneticize("ab", c.lexicon()), c, 1));
  }
}

TEST_CASE("fuse_scores") {
  const CandidateSet base = {{0, 0.7, 0.2, 0.0}, {1, 0.3, 0.8, 0.0}};
  SUBCASE("worked example") {
    const auto fused = fuse_scores(base, 0.6);
    REQUIRE(fused.size() == 2);
    CHECK(fused[0].id == 1);
    CHECK(fused[0].fused == doctest::Approx(0.6 * std::log(0.3) + 0.4 * std::log(0.8)).epsilon(1e-12));
    CHECK(fused[0].fused == doctest::Approx(-0.8117).epsilon(1e-4));
    CHECK(fused[1].fused == doctest::Approx(-0.8577).epsilon(1e-4));
  }
  SUBCASE("alpha extremes follow one channel") {
    CHECK(fuse_scores(base, 1.0)[0].id == 0);
    CHECK(fuse_scores(base, 0.0)[0].id == 1);
  }
  SUBCASE("zero probability is floored") {
    const auto fused = fuse_scores({{0, 0.0, 1.0, 0.0}}, 0.5);
    CHECK(std::isfinite(fused[0].fused));
    CHECK(fused[0].fused == doctest::Approx(0.5 * std::log(kLogFloor)));
  }
  SUBCASE("ranking is invariant to scaling either channel") {
    Rng rng(43);
    for (int trial = 0; trial < 200; ++trial) {
      CandidateSet cands;
      for (EntityId i = 0; i < 6; ++i) cands.push_back({i, 0.01 + rng.unit(), 0.01 + rng.unit(), 0.0});
      const double alpha = rng.unit();
      const double a = 0.1 + rng.unit(), b = 0.1 + rng.unit();
      CandidateSet scaled = cands;
      for (auto& c : scaled) {
        c.phonetic *= a;
        c.semantic *= b;
      }
      const auto x = fuse_scores(cands, alpha);
      const auto y = fuse_scores(scaled, alpha);
      CHECK(x[0].id == y[0].id);
    }
  }
}

TEST_CASE("beam_weights") {
  NBestList nb{{{"a", -1.0}, {"b", -2.0}, {"c", -2.0}}};
  const auto w = beam_weights(nb);
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0));
  CHECK(w[0] > w[1]);
  CHECK(w[1] == w[2]);
  CHECK(beam_weights(nb, true) == std::vector<double>{-1.0, -2.0, -2.0});
}

TEST_CASE("align_spans_across_nbest") {
  const Range span{2, 5};
  SUBCASE("identical hypotheses") {
    NBestList nb{{{"abcdefg", 0}, {"abcdefg", 0}}};
    CHECK(align_spans_across_nbest(span, nb) == std::vector<Range>{span, span});
  }
  SUBCASE("leading insertion shifts by one") {
    NBestList nb{{{"abcdefg", 0}, {"xabcdefg", 0}}};
    CHECK(align_spans_across_nbest(span, nb)[1] == Range{3, 6});
  }
  SUBCASE("deleted region projects to an empty range") {
    NBestList nb{{{"abcdefg", 0}, {"abfg", 0}}};
    CHECK(align_spans_across_nbest(span, nb)[1].empty());
  }
}

TEST_CASE("rejection_score") {
  EntityCatalog c(letter_lexicon());
  const auto& lex = c.lexicon();
  SUBCASE("weighted NED") {
    const auto cand = phoneticize("ab", lex);
    const std::vector<PhoneticSequence> aligned = {phoneticize("ab", lex), phoneticize("ax", lex)};
    const std::vector<double> w = {0.6, 0.4};
    CHECK(rejection_score(cand, aligned, w) == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("empty projections count as full distance") {
    const std::vector<PhoneticSequence> aligned = {PhoneticSequence{}, PhoneticSequence{}};
    const std::vector<double> w = {0.5, 0.5};
    CHECK(rejection_score(phoneticize("ab", lex), aligned, w) == doctest::Approx(1.0));
  }
  SUBCASE("moving evidence away never lowers the score") {
    Rng rng(47);
    for (int trial = 0; trial < 200; ++trial) {
      const auto cand = phoneticize(utf8_encode(oracle::random_text(rng, U"abc", 5)), lex);
      std::vector<PhoneticSequence> aligned;
      std::vector<double> scores;
      for (int n = 0; n < 4; ++n) {
        aligned.push_back(phoneticize(utf8_encode(oracle::random_text(rng, U"abc", 5)), lex));
        scores.push_back(-5.0 * rng.unit());
      }
      const auto w = softmax(scores);
      const double before = rejection_score(cand, aligned, w);
      const std::size_t n = rng.index(aligned.size());
      auto farther = aligned;
      auto replacement = phoneticize(utf8_encode(oracle::random_text(rng, U"abcxyz", 6)), lex);
      if (normalized_distance(replacement, cand) < normalized_distance(aligned[n], cand)) continue;
      farther[n] = replacement;
      CHECK(rejection_score(cand, farther, w) >= before - 1e-15);
    }
  }
}

TEST_CASE("decide") {
  CHECK(decide(0.1, 0.3) == Verdict::kAccept);
  CHECK(decide(0.4, 0.3) == Verdict::kReject);
  CHECK(decide(0.3, 0.3) == Verdict::kAccept);
}

TEST_CASE("CorrectorConfig::validate") {
  CHECK_NOTHROW(CorrectorConfig{}.validate());
  CorrectorConfig c;
  c.alpha = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.alpha = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.top_k = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.nbest_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("SemanticScorer") {
  const auto c = fixtures::catalog({{"朴泰桓", kSwimmer}, {"而明华", nullptr}, {"张伟", kComposer}});
  const auto memory = build_reference_memory(c, 64, 0);
  CHECK(memory.size() == 2);
  const ReferenceContextEncoder enc(64, 0);
  const SemanticScorer scorer(memory, enc);
  const auto ctx = mask_span(U"韓國媒體報導稱而在桓確實人在日本", {7, 10});
  SUBCASE("undescribed candidate gets a uniform share") {
    CandidateSet cands = {{0, 0.4, 0, 0}, {1, 0.3, 0, 0}, {2, 0.3, 0, 0}};
    scorer.score(ctx, cands);
    CHECK(cands[1].semantic == doctest::Approx(1.0 / 3.0));
    CHECK(cands[0].semantic + cands[2].semantic == doctest::Approx(2.0 / 3.0));
    CHECK(cands[0].semantic > cands[2].semantic);
  }
  SUBCASE("no described candidate is uniform") {
    CandidateSet cands = {{1, 1.0, 0, 0}};
    scorer.score(ctx, cands);
    CHECK(cands[0].semantic == 1.0);
  }
}

TEST_CASE("TableContextEncoder") {
  ContextVectorTable table;
  table[{"u1", 0}] = {3.0, 4.0};
  const TableContextEncoder raw(table), normalized(table, true);
  MaskedContext ctx;
  ctx.origin = {"u1", 0};
  CHECK(raw.encode(ctx) == EmbeddingVector{3.0, 4.0});
  CHECK(normalized.encode(ctx)[0] == doctest::Approx(0.6));
  ctx.origin = {"u1", 1};
  CHECK_THROWS_AS(raw.encode(ctx), InputError);
}

TEST_CASE("detectors") {
  const auto c = fixtures::catalog({{"张伟", nullptr}});
  SUBCASE("external needs ced_spans") {
    Utterance u = make_utt("x", {{"章玮", 0}}, {});
    u.ced_spans.reset();
    CHECK_THROWS_AS(ExternalDetector().detect(u), InputError);
  }
  SUBCASE("gold projects reference spans") {
    Utterance u = make_utt("x", {{"我们章玮", 0}}, {});
    u.ref = "我张伟";
    u.ne_spans = {{1, 3}};
    const auto spans = GoldDetector().detect(u);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].range() == Range{2, 4});
  }
  SUBCASE("baseline") {
    const auto spans = make_detector(DetectorKind::kBaseline, c, {1.0, 1})->detect(make_utt("x", {{"我们章玮", 0}}, {}));
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].surface == "章玮");
  }
}

TEST_CASE("correct_utterance: semantic context resolves a phonetic tie") {
  // 而明华 and 朴泰桓 are equally close to 而在桓; only the description of
  // 朴泰桓 overlaps the context.
  const auto c = fixtures::catalog({{"而明华", kComposer}, {"朴泰桓", kSwimmer}});
  const auto memory = build_reference_memory(c, 256, 0);
  const ReferenceContextEncoder enc(256, 0);
  const SemanticScorer scorer(memory, enc);
  const ExternalDetector det;
  const auto utt = make_utt("u1",
                            {{"韓國媒體報導稱而在桓確實人在日本", -1.0},
                             {"韓國媒體報導稱朴泰桓確實人在日本", -1.05},
                             {"韓國媒體報導稱朴太桓確實人在日本", -1.1}},
                            {{7, 10}});
  const CorrectorConfig cfg;

  const auto out = correct_utterance(utt, c, scorer, det, cfg);
  REQUIRE(out.results.size() == 1);
  const auto& r = out.results[0];
  CHECK(r.candidates[0].phonetic == r.candidates[1].phonetic);
  CHECK(r.chosen == EntityId{1});
  CHECK_FALSE(r.rejected);
  CHECK(r.reject_candidate < r.reject_original);
  CHECK(out.text == "韓國媒體報導稱朴泰桓確實人在日本");

  // Phonetic-only picks the lower id, which the n-best evidence rejects.
  const auto pn = ped_nec_correct(utt, c, det, cfg);
  CHECK(pn.results[0].chosen == EntityId{0});
  CHECK(pn.results[0].rejected);
  CHECK(pn.text == pn.original);

  // Without rejection the wrong entity goes through.
  CorrectorConfig open = cfg;
  open.rejection = false;
  CHECK(ped_nec_correct(utt, c, det, open).text == "韓國媒體報導稱而明华確實人在日本");
}

TEST_CASE("correct_utterance: second span rejected, first kept") {
  const auto c = fixtures::catalog({{"张伟", "歌手"}, {"王明", "教师"}});
  const auto memory = build_reference_memory(c, 64, 0);
  const ReferenceContextEncoder enc(64, 0);
  const SemanticScorer scorer(memory, enc);
  const ExternalDetector det;
  // 王芳 is not in the catalog; every hypothesis agrees on it.
  const auto utt = make_utt("u2", {{"章玮和王芳了", -1.0}, {"章玮和王芳了", -1.2}, {"张伟和王芳了", -1.3}},
                            {{0, 2}, {3, 5}});
  const auto out = correct_utterance(utt, c, scorer, det, CorrectorConfig{});
  REQUIRE(out.results.size() == 2);
  CHECK(out.results[0].chosen == EntityId{0});
  CHECK_FALSE(out.results[0].rejected);
  CHECK(out.results[1].chosen == EntityId{1});
  CHECK(out.results[1].rejected);
  CHECK(out.results[1].reject_original == 0.0);

  // String-surgery oracle: only the first span is replaced.
  auto expected = utf8_decode(utt.nbest.top().text);
  expected.replace(0, 2, U"张伟");
  CHECK(out.text == utf8_encode(expected));
}

TEST_CASE("correct_utterance edge cases") {
  const auto c = fixtures::catalog({{"张伟", "歌手"}});
  const auto memory = build_reference_memory(c, 32, 0);
  const ReferenceContextEncoder enc(32, 0);
  const SemanticScorer scorer(memory, enc);
  const ExternalDetector det;
  SUBCASE("no spans leaves the text alone") {
    const auto out = correct_utterance(make_utt("a", {{"今天", 0}}, {}), c, scorer, det, {});
    CHECK(out.text == "今天");
    CHECK(out.results.empty());
  }
  SUBCASE("empty catalog is a no-op") {
    const EntityCatalog empty(fixtures::lexicon());
    const EmbeddingMemory none(32);
    const SemanticScorer s2(none, enc);
    const auto out = correct_utterance(make_utt("a", {{"章玮", 0}}, {{0, 2}}), empty, s2, det, {});
    CHECK(out.text == "章玮");
    for (const auto& r : out.results) CHECK_FALSE(r.chosen.has_value());
  }
  SUBCASE("invalid config") {
    CorrectorConfig bad;
    bad.alpha = 2.0;
    CHECK_THROWS_AS(correct_utterance(make_utt("a", {{"章玮", 0}}, {{0, 2}}), c, scorer, det, bad), ConfigError);
  }
  SUBCASE("spans outside the hypothesis") {
    CHECK_THROWS(correct_utterance(make_utt("a", {{"章玮", 0}}, {{1, 4}}), c, scorer, det, {}));
    CHECK_THROWS(ped_nec_correct(make_utt("a", {{"章玮", 0}}, {{1, 4}}), c, det, {}));
  }
}

TEST_CASE("an exact entity with agreeing n-best only moves to a homophone") {
  const auto lex = fixtures::lexicon();
  const ExternalDetector det;
  const auto utt = make_utt("u", {{"我见到张伟了", -1.0}, {"我见张伟了", -1.5}, {"我们见到张伟", -2.0}}, {{3, 5}});
  SUBCASE("no homophone in the catalog: unchanged") {
    const auto c = fixtures::catalog({{"李明", "教师"}, {"张伟", "歌手"}, {"张明", "作家"}}, lex);
    const auto memory = build_reference_memory(c, 64, 0);
    const ReferenceContextEncoder enc(64, 0);
    for (double alpha : {0.0, 0.3, 0.6, 1.0}) {
      CorrectorConfig cfg;
      cfg.alpha = alpha;
      const auto out = correct_utterance(utt, c, SemanticScorer(memory, enc), det, cfg);
      CHECK(out.text == out.original);
      CHECK(out.results[0].reject_original == 0.0);
    }
  }
  SUBCASE("homophone in the catalog: any change is phonetically identical") {
    const auto c = fixtures::catalog({{"章玮", "演员"}, {"张伟", "歌手"}, {"李明", "教师"}}, lex);
    const auto memory = build_reference_memory(c, 64, 0);
    const ReferenceContextEncoder enc(64, 0);
    for (double alpha : {0.0, 0.3, 0.6, 1.0}) {
      CorrectorConfig cfg;
      cfg.alpha = alpha;
      const auto out = correct_utterance(utt, c, SemanticScorer(memory, enc), det, cfg);
      CHECK(phoneticize(out.text, *lex) == phoneticize(out.original, *lex));
    }
  }
}

TEST_CASE("alpha = 1 reproduces the phonetic-only corrector") {
  Rng rng(53);
  const auto c = fixtures::catalog({{"张伟", "歌手"}, {"章玮", "演员"}, {"李明", nullptr}, {"朴泰桓", kSwimmer}});
  const auto memory = build_reference_memory(c, 64, 0);
  const ReferenceContextEncoder enc(64, 0);
  const SemanticScorer scorer(memory, enc);
  const ExternalDetector det;
  const std::u32string alphabet = U"张章伟玮李明朴泰桓而在我的";
  CorrectorConfig cfg;
  cfg.alpha = 1.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto top = oracle::random_text(rng, alphabet, 10);
    if (top.empty()) continue;
    Utterance u;
    u.utt_id = "r" + std::to_string(trial);
    u.nbest.hypotheses.push_back({utf8_encode(top), -1.0});
    for (int n = 0; n < 3; ++n) u.nbest.hypotheses.push_back({utf8_encode(oracle::random_text(rng, alphabet, 10)), -2.0 - n});
    std::vector<Range> ranges;
    for (const auto& r : oracle::random_spans(rng, top.size())) ranges.push_back(r);
    u.ced_spans = ranges;
    const auto a = correct_utterance(u, c, scorer, det, cfg);
    const auto b = ped_nec_correct(u, c, det, cfg);
    CHECK(a.text == b.text);
    REQUIRE(a.results.size() == b.results.size());
    for (std::size_t i = 0; i < a.results.size(); ++i) {
      CHECK(a.results[i].chosen == b.results[i].chosen);
      CHECK(a.results[i].rejected == b.results[i].rejected);
    }
  }
}

TEST_CASE("correct_corpus is independent of the thread count") {
  Rng rng(59);
  const auto c = fixtures::catalog({{"张伟", "歌手"}, {"章玮", "演员"}, {"李明", nullptr}, {"朴泰桓", kSwimmer}});
  const auto memory = build_reference_memory(c, 64, 0);
  const ReferenceContextEncoder enc(64, 0);
  const SemanticScorer scorer(memory, enc);
  const ExternalDetector det;
  const std::u32string alphabet = U"张章伟玮李明朴泰桓而在我的";
  std::vector<Utterance> corpus;
  for (int i = 0; i < 64; ++i) {
    const auto top = oracle::random_text(rng, alphabet, 12);
    Utterance u;
    u.utt_id = "c" + std::to_string(i);
    u.nbest.hypotheses.push_back({utf8_encode(top), -1.0});
    u.nbest.hypotheses.push_back({utf8_encode(oracle::random_text(rng, alphabet, 12)), -1.5});
    u.ced_spans = oracle::random_spans(rng, top.size());
    corpus.push_back(std::move(u));
  }
  auto run = [&](int threads) {
    kernels::set_num_threads(threads);
    std::vector<std::string> texts;
    for (const auto& u : correct_corpus(corpus, c, scorer, det, {})) texts.push_back(u.text);
    for (const auto& u : ped_nec_correct_corpus(corpus, c, det, {})) texts.push_back(u.text);
    return texts;
  };
  const int saved = kernels::num_threads();
  const auto one = run(1);
  const auto four = run(4);
  kernels::set_num_threads(saved);
  CHECK(one == four);
  std::vector<std::string> serial;
  for (const auto& u : corpus) serial.push_back(correct_utterance(u, c, scorer, det, {}).text);
  CHECK(std::vector<std::string>(one.begin(), one.begin() + 64) == serial);
}
