#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "dancer/evaluation.hpp"
#include "dancer/rng.hpp"
#include "dancer/synthetic.hpp"
#include "dancer/utf8.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dancer;

namespace {

Utterance ref_utt(std::string id, std::string ref, std::vector<Range> spans) {
  Utterance u;
  u.utt_id = std::move(id);
  u.nbest.hypotheses.push_back({ref, 0.0});
  u.ref = std::move(ref);
  u.ne_spans = std::move(spans);
  return u;
}

}  // namespace

TEST_CASE("cer") {
  CHECK(cer(U"axc", U"abc") == doctest::Approx(1.0 / 3.0));
  CHECK(cer(U"abxy", U"ab") == 1.0);
  CHECK(cer(U"abc", U"abc") == 0.0);
  CHECK(cer(U"", U"") == 0.0);
  CHECK(cer(U"ab", U"") == 2.0);
}

TEST_CASE("span-scoped CER") {
  const std::u32string ref = U"xxABCxx";
  const std::vector<Range> ne = {{2, 5}};
  SUBCASE("edit inside the entity") {
    const std::u32string hyp = U"xxAZCxx";
    CHECK(span_scoped_cer(hyp, ref, ne, Scope::kInside) == doctest::Approx(1.0 / 3.0));
    CHECK(span_scoped_cer(hyp, ref, ne, Scope::kOutside) == 0.0);
    CHECK(ne_recall(hyp, ref, ne) == 0.0);
  }
  SUBCASE("insertion between outside characters") {
    const std::u32string hyp = U"xqxABCxx";
    CHECK(span_scoped_cer(hyp, ref, ne, Scope::kInside) == 0.0);
    CHECK(span_scoped_cer(hyp, ref, ne, Scope::kOutside) == doctest::Approx(0.25));
    CHECK(ne_recall(hyp, ref, ne) == 1.0);
  }
  SUBCASE("insertion strictly inside the entity breaks recall") {
    const std::u32string hyp = U"xxABqCxx";
    CHECK(span_scoped_cer(hyp, ref, ne, Scope::kInside) == doctest::Approx(1.0 / 3.0));
    CHECK(ne_recall(hyp, ref, ne) == 0.0);
  }
  SUBCASE("insertion at the end of the string is outside") {
    const auto m = score_utterance(U"xxABCxxq", ref, ne);
    CHECK(m.outside_edits == 1);
    CHECK(m.inside_edits == 0);
  }
}

TEST_CASE("ne_recall") {
  const std::u32string ref = U"AB和CD";
  const std::vector<Range> ne = {{0, 2}, {3, 5}};
  CHECK(ne_recall(U"AB和CX", ref, ne) == 0.5);
  CHECK(ne_recall(U"我AB和CD", ref, ne) == 1.0);
  CHECK(ne_recall(U"和", ref, ne) == 0.0);
  CHECK(ne_recall(U"x", U"y", {}) == 1.0);
}

TEST_CASE("metrics agree with the per-character oracle") {
  Rng rng(61);
  for (int trial = 0; trial < 400; ++trial) {
    const auto ref = oracle::random_text(rng, U"abc", 8);
    const auto hyp = oracle::random_text(rng, U"abcd", 8);
    const auto spans = oracle::random_spans(rng, ref.size());
    const auto got = score_utterance(hyp, ref, spans);
    const auto want = oracle::score(hyp, ref, spans);
    CHECK(got.ref_chars == want.ref_chars);
    CHECK(got.inside_chars == want.inside_chars);
    CHECK(got.edits() == want.edits);
    CHECK(got.inside_edits == want.inside_edits);
    CHECK(got.outside_edits == want.outside_edits);
    CHECK(got.ne_recalled == want.recalled);
    CHECK(got.edits() == got.inside_edits + got.outside_edits);
    CHECK(got.edits() == oracle::enumerate_alignment(hyp, ref).cost);
    if (got.inside_chars > 0 && got.outside_chars() > 0) {
      const double inside = span_scoped_cer(hyp, ref, spans, Scope::kInside);
      const double outside = span_scoped_cer(hyp, ref, spans, Scope::kOutside);
      CHECK(inside * static_cast<double>(got.inside_chars) + outside * static_cast<double>(got.outside_chars()) ==
            doctest::Approx(static_cast<double>(got.edits())));
    }
  }
}

TEST_CASE("hyp equal to ref scores zero everywhere") {
  Rng rng(67);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ref = oracle::random_text(rng, U"abc", 10);
    const auto spans = oracle::random_spans(rng, ref.size());
    const auto m = score_utterance(ref, ref, spans);
    CHECK(m.edits() == 0);
    CHECK(std::all_of(m.ne_recalled.begin(), m.ne_recalled.end(), [](bool b) { return b; }));
  }
}

TEST_CASE("corpus scoring") {
  std::vector<Utterance> corpus = {ref_utt("a", "xxABCxx", {{2, 5}}), ref_utt("b", "AB", {{0, 2}})};
  const auto report = summarize(score_corpus(corpus, {"xxAZCxx", "AB"}));
  CHECK(report.utterances == 2);
  CHECK(report.cer() == doctest::Approx(1.0 / 9.0));
  CHECK(report.ne_cer() == doctest::Approx(1.0 / 5.0));
  CHECK(report.nne_cer() == 0.0);
  CHECK(report.ne_recall() == 0.5);
  CHECK_THROWS(score_corpus(corpus, {"x"}));
  corpus[0].ref.reset();
  CHECK_THROWS(score_corpus(corpus, {"x", "y"}));

  std::ostringstream csv;
  write_report_csv_header(csv);
  write_report_csv_row(csv, "top1", report);
  CHECK(csv.str().rfind("set,", 0) == 0);
  CHECK(csv.str().find("\ntop1,") != std::string::npos);
}

TEST_CASE("build_homophone_set") {
  const auto c = fixtures::catalog({{"张伟", nullptr}, {"章玮", nullptr}, {"李明", nullptr}});
  std::vector<Utterance> corpus = {
      ref_utt("u1", "张伟来了", {{0, 2}}),      ref_utt("u2", "李明来了", {{0, 2}}),
      ref_utt("u3", "见到章玮", {{2, 4}}),      ref_utt("u4", "今天", {}),
      ref_utt("u5", "李明和张伟", {{0, 2}, {3, 5}}),
  };
  const std::vector<std::string> want = {"u1", "u3", "u5"};
  CHECK(build_homophone_set(corpus, c) == want);
  std::reverse(corpus.begin(), corpus.end());
  CHECK(build_homophone_set(corpus, c) == want);
  CHECK(select_utterances(corpus, want).size() == 3);
}

TEST_CASE("corpus I/O validation") {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return read_corpus(in);
  };
  SUBCASE("valid record round trips") {
    const auto c = read(R"({"utt_id":"a","nbest":[{"text":"章玮来了","score":-1.5}],"ref":"张伟来了","ne_spans":[[0,2]],"ced_spans":[[0,2]]})");
    REQUIRE(c.size() == 1);
    CHECK(c[0].ced_spans->at(0) == Range{0, 2});
    std::ostringstream out;
    write_corpus(c, out);
    const auto again = read(out.str());
    CHECK(to_json_line(again[0]) == to_json_line(c[0]));
  }
  auto message = [&](const std::string& text) {
    try {
      read(text);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  SUBCASE("overlapping ced_spans") {
    CHECK(message(R"({"utt_id":"bad1","nbest":[{"text":"abcdef","score":0}],"ced_spans":[[0,3],[2,4]]})")
              .find("bad1") != std::string::npos);
  }
  SUBCASE("ced_spans beyond the top-1 hypothesis") {
    CHECK(message(R"({"utt_id":"bad2","nbest":[{"text":"ab","score":0}],"ced_spans":[[0,3]]})").find("bad2") !=
          std::string::npos);
  }
  SUBCASE("non-finite score") {
    CHECK(message(R"({"utt_id":"bad3","nbest":[{"text":"ab","score":1e999}]})").find("bad3") != std::string::npos);
  }
  SUBCASE("invalid UTF-8") {
    CHECK(message("{\"utt_id\":\"bad4\",\"nbest\":[{\"text\":\"a\xff\",\"score\":0}]}").find("bad4") !=
          std::string::npos);
  }
  SUBCASE("empty n-best, duplicate ids, ne_spans without ref") {
    CHECK(message(R"({"utt_id":"e","nbest":[]})") != "no error");
    CHECK(message("{\"utt_id\":\"d\",\"nbest\":[{\"text\":\"a\",\"score\":0}]}\n"
                  "{\"utt_id\":\"d\",\"nbest\":[{\"text\":\"a\",\"score\":0}]}")
              .find("duplicate") != std::string::npos);
    CHECK(message(R"({"utt_id":"n","nbest":[{"text":"a","score":0}],"ne_spans":[[0,1]]})") != "no error");
  }
}

TEST_CASE("synthetic corpus harness") {
  SyntheticConfig cfg;
  cfg.utterances = 40;
  cfg.groups = 10;
  cfg.pool_size = 120;
  const auto data = generate_synthetic(fixtures::lexicon(), cfg);

  SUBCASE("generation is seeded") {
    const auto again = generate_synthetic(fixtures::lexicon(), cfg);
    REQUIRE(again.corpus.size() == data.corpus.size());
    for (std::size_t i = 0; i < data.corpus.size(); ++i) CHECK(to_json_line(again.corpus[i]) == to_json_line(data.corpus[i]));
  }

  SUBCASE("few-shot buckets nest") {
    const auto by_id = occurrence_counts(annotated_references(data.training), data.catalog);
    const auto metrics = score_corpus(data.corpus, top1_texts(data.corpus));
    const auto buckets = fewshot_report(data.corpus, metrics, data.catalog, by_id, {100, 0, 5});
    REQUIRE(buckets.size() == 3);
    CHECK(buckets[0].threshold == 0);
    for (std::size_t i = 1; i < buckets.size(); ++i) {
      CHECK(buckets[i - 1].total <= buckets[i].total);
      CHECK(buckets[i - 1].recalled <= buckets[i].recalled);
    }
    for (const auto& b : buckets) CHECK(b.recalled <= b.total);
  }

  const ReferenceContextEncoder enc(64, 0);
  HarnessSetup setup;
  setup.encoder = &enc;
  setup.embed_dim = 64;

  SUBCASE("sweep grid") {
    const auto rows = sweep(data.corpus, data.catalog, setup, {0.0, 0.5, 1.0}, {1, 10});
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].alpha == 0.0);
    CHECK(rows[1].k == 10);
    for (const auto& r : rows) CHECK(r.cer >= 0.0);
  }

  SUBCASE("scaling") {
    const auto points = scaling_curve(data.corpus, data.pool, {data.catalog.size(), 120}, setup);
    REQUIRE(points.size() == 2);
    CHECK(points[0].phonetic_recall >= points[1].phonetic_recall);
    CHECK_THROWS_AS(scaling_curve(data.corpus, data.pool, {1}, setup), ConfigError);
  }
}
