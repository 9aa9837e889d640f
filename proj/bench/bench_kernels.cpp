// Times the serial reference kernels against their OpenMP versions and
// checks that both produce identical results. The serial homophone kernel
// is the all-pairs reference; the parallel one buckets by syllable multiset
// first, so its speedup is algorithmic as well as thread-level.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "dancer/corrector.hpp"
#include "dancer/kernels.hpp"
#include "dancer/rng.hpp"
#include "dancer/synthetic.hpp"
#include "dancer/utf8.hpp"

using namespace dancer;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s %10.3f %10.3f %8.2fx  %s\n", name, serial * 1e3, parallel * 1e3, serial / parallel,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs parallel kernel benchmark"};
  std::string lexicon = DANCER_DEFAULT_LEXICON;
  std::size_t entities = 5000;
  std::size_t dim = 256;
  std::size_t queries = 50;
  int reps = 3;
  int threads = 0;
  app.add_option("--lexicon", lexicon, "pronunciation lexicon TSV")->capture_default_str();
  app.add_option("--entities", entities, "catalog size")->capture_default_str();
  app.add_option("--dim", dim, "embedding dimension")->capture_default_str();
  app.add_option("--queries", queries, "queries per scan")->capture_default_str();
  app.add_option("--reps", reps, "repetitions; the best time is kept")->capture_default_str();
  app.add_option("--jobs", threads, "worker threads (0 = runtime default)");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) kernels::set_num_threads(threads);

  auto lex = std::make_shared<PronunciationLexicon>(load_lexicon_file(lexicon));
  SyntheticConfig cfg;
  cfg.pool_size = entities;
  const auto data = generate_synthetic(lex, cfg);
  const auto& pool = data.pool;
  std::printf("entities %zu, dim %zu, queries %zu, threads %d\n", pool.size(), dim, queries, kernels::num_threads());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");

  Rng rng(1);
  std::vector<PhoneticSequence> probes;
  for (std::size_t q = 0; q < queries; ++q) probes.push_back(pool.at(static_cast<EntityId>(rng.index(pool.size()))).phonetic);
  {
    bool same = true;
    const double s = best_of(reps, [&] {
      for (const auto& p : probes) (void)kernels::serial::similarity_scan(p, pool.entities());
    });
    const double p = best_of(reps, [&] {
      for (const auto& q : probes) (void)kernels::parallel::similarity_scan(q, pool.entities());
    });
    for (const auto& q : probes) {
      same = same && kernels::serial::similarity_scan(q, pool.entities()) == kernels::parallel::similarity_scan(q, pool.entities());
    }
    report("similarity_scan", s, p, same);
  }
  {
    const auto memory = build_reference_memory(pool, dim, 0);
    std::vector<EmbeddingVector> vecs;
    for (std::size_t q = 0; q < queries; ++q) vecs.push_back(memory.vector(rng.index(memory.size())));
    const double s = best_of(reps, [&] {
      for (const auto& v : vecs) (void)kernels::serial::inner_product_scan(memory.rows(), dim, v);
    });
    const double p = best_of(reps, [&] {
      for (const auto& v : vecs) (void)kernels::parallel::inner_product_scan(memory.rows(), dim, v);
    });
    bool same = true;
    for (const auto& v : vecs) {
      same = same && kernels::serial::inner_product_scan(memory.rows(), dim, v) ==
                         kernels::parallel::inner_product_scan(memory.rows(), dim, v);
    }
    report("inner_product_scan", s, p, same);
  }
  {
    const double s = best_of(reps, [&] { (void)kernels::serial::homophone_pairs(pool.entities()); });
    const double p = best_of(reps, [&] { (void)kernels::parallel::homophone_pairs(pool.entities()); });
    report("homophone_pairs", s, p,
           kernels::serial::homophone_pairs(pool.entities()) == kernels::parallel::homophone_pairs(pool.entities()));
  }
  {
    const ReferenceContextEncoder enc(dim, 0);
    const auto memory = build_reference_memory(pool, dim, 0);
    const SemanticScorer scorer(memory, enc);
    const ExternalDetector det;
    const int saved = kernels::num_threads();
    std::vector<std::string> serial_text, parallel_text;
    kernels::set_num_threads(1);
    const double s = best_of(reps, [&] {
      serial_text.clear();
      for (const auto& u : correct_corpus(data.corpus, pool, scorer, det, {})) serial_text.push_back(u.text);
    });
    kernels::set_num_threads(saved);
    const double p = best_of(reps, [&] {
      parallel_text.clear();
      for (const auto& u : correct_corpus(data.corpus, pool, scorer, det, {})) parallel_text.push_back(u.text);
    });
    report("correct_corpus", s, p, serial_text == parallel_text);
  }
  return EXIT_SUCCESS;
}
