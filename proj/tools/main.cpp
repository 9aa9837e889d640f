#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cli_support.hpp"
#include "dancer/corpus.hpp"
#include "dancer/corrector.hpp"
#include "dancer/entity_store.hpp"
#include "dancer/evaluation.hpp"
#include "dancer/kernels.hpp"
#include "dancer/ped_nec.hpp"
#include "dancer/phonetics.hpp"
#include "dancer/semantic_memory.hpp"
#include "dancer/synthetic.hpp"
#include "dancer/utf8.hpp"

namespace {

using namespace dancer;

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct Options {
  std::string config;
  std::string nbest;
  std::string nelist;
  std::string descriptions;
  std::string lexicon = DANCER_DEFAULT_LEXICON;
  std::string memory;
  std::string context_vectors;
  std::string output = "-";
  std::string detector = "external";
  std::string method = "dancer";
  double alpha = 0.6;
  std::size_t topk = 10;
  std::size_t nbest_size = 10;
  std::size_t dim = 256;
  std::uint64_t seed = 0;
  int jobs = 0;
  double min_sim = 0.8;
  bool no_rejection = false;
  bool toneless = false;
  bool raw_beam_weights = false;
  bool normalize_embeddings = false;
  bool require_descriptions = false;
  bool detail = false;

  // evaluation and harnesses
  std::string hyps;
  std::string label = "all";
  std::string format = "csv";
  std::string train;
  std::string thresholds = "0,5,100";
  std::string alphas = "0,0.2,0.4,0.6,0.8,1";
  std::string topks = "1,5,10,20";
  std::string sizes = "50,200,1000";
  std::string import_vectors;
  SyntheticConfig synth;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw std::runtime_error("write failed");
  }

 private:
  std::ofstream file_;
};

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(std::string("cannot open ") + what + ": " + path);
  return in;
}

void add_config(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "key=value file; command-line flags take precedence");
}

void add_lexicon(CLI::App* cmd, Options& o) {
  cmd->add_option("--lexicon", o.lexicon, "pronunciation lexicon TSV")->capture_default_str();
  cmd->add_flag("--toneless", o.toneless, "compare pinyin without tone digits");
}

void add_catalog(CLI::App* cmd, Options& o, bool required) {
  auto* nelist = cmd->add_option("--nelist", o.nelist, "entity list, one surface per line");
  if (required) nelist->required();
  cmd->add_option("--descriptions", o.descriptions, "entity descriptions JSONL");
  add_lexicon(cmd, o);
}

void add_run(CLI::App* cmd, Options& o) {
  add_config(cmd, o);
  cmd->add_option("--nbest", o.nbest, "n-best JSONL")->required();
  add_catalog(cmd, o, true);
  cmd->add_option("--memory", o.memory, "EDAM entity memory; default builds the reference memory");
  cmd->add_option("--context-vectors", o.context_vectors, "context-vector JSONL from an external encoder");
  cmd->add_option("--alpha", o.alpha, "phonetic weight in the fused score")->capture_default_str();
  cmd->add_option("--topk", o.topk, "phonetic candidates re-ranked semantically")->capture_default_str();
  cmd->add_option("--nbest-size", o.nbest_size, "hypotheses used by the rejector")->capture_default_str();
  cmd->add_option("--detector", o.detector, "span source")
      ->check(CLI::IsMember({"external", "baseline", "gold"}))
      ->capture_default_str();
  cmd->add_option("--min-sim", o.min_sim, "baseline detector similarity threshold")->capture_default_str();
  cmd->add_flag("--no-rejection", o.no_rejection, "always apply the best candidate");
  cmd->add_flag("--raw-beam-weights", o.raw_beam_weights, "use beam scores as rejection weights unnormalized");
  cmd->add_flag("--normalize-embeddings", o.normalize_embeddings, "L2-normalize loaded memory rows and context vectors");
  cmd->add_flag("--require-descriptions", o.require_descriptions, "drop entities without a description");
  cmd->add_option("--dim", o.dim, "reference embedder dimension")->capture_default_str();
  cmd->add_option("--seed", o.seed, "seed for hashing and sampling")->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = runtime default)");
  cmd->add_option("--output", o.output, "output path, - for stdout")->capture_default_str();
}

std::shared_ptr<const PronunciationLexicon> load_lexicon(const Options& o) {
  return std::make_shared<PronunciationLexicon>(
      load_lexicon_file(o.lexicon, o.toneless ? ToneMode::kToneless : ToneMode::kWithTone));
}

EntityCatalog load_catalog(const Options& o) {
  auto lex = load_lexicon(o);
  auto in = open_input(o.nelist, "entity list");
  auto ingest = ingest_entities(in, lex);
  if (ingest.duplicates > 0) std::cerr << "note: dropped " << ingest.duplicates << " duplicate entities\n";
  if (!o.descriptions.empty()) {
    auto din = open_input(o.descriptions, "descriptions");
    const auto stats = load_descriptions(din, ingest.catalog);
    if (stats.unknown_entities > 0) {
      std::cerr << "note: skipped " << stats.unknown_entities << " descriptions of unlisted entities\n";
    }
  }
  if (o.require_descriptions) return ingest.catalog.with_descriptions_only();
  return std::move(ingest.catalog);
}

CorrectorConfig corrector_config(const Options& o) {
  CorrectorConfig cfg;
  cfg.alpha = o.alpha;
  cfg.top_k = o.topk;
  cfg.nbest_size = o.nbest_size;
  cfg.rejection = !o.no_rejection;
  cfg.raw_beam_weights = o.raw_beam_weights;
  cfg.validate();
  return cfg;
}

EmbeddingMemory entity_memory(const Options& o, const EntityCatalog& catalog) {
  if (o.memory.empty()) return build_reference_memory(catalog, o.dim, o.seed);
  auto in = open_input(o.memory, "memory");
  auto memory = load_memory(in);
  memory.bind(catalog);
  if (o.normalize_embeddings) memory.normalize_rows();
  return memory;
}

std::unique_ptr<ContextEncoder> context_encoder(const Options& o, std::size_t dim) {
  if (o.context_vectors.empty()) return std::make_unique<ReferenceContextEncoder>(dim, o.seed);
  auto in = open_input(o.context_vectors, "context vectors");
  return std::make_unique<TableContextEncoder>(load_context_vectors(in, dim), o.normalize_embeddings);
}

BaselineDetectorConfig baseline_config(const Options& o) {
  BaselineDetectorConfig b;
  b.min_sim = o.min_sim;
  return b;
}

int cmd_correct(const Options& o) {
  if (o.method != "dancer" && o.method != "ped-nec") throw ConfigError("unknown method \"" + o.method + "\"");
  const auto cfg = corrector_config(o);
  const auto catalog = load_catalog(o);
  const auto corpus = read_corpus_file(o.nbest);
  const auto detector = make_detector(cli::parse_detector(o.detector), catalog, baseline_config(o));

  std::vector<UtteranceCorrection> corrected;
  if (o.method == "ped-nec") {
    corrected = ped_nec_correct_corpus(corpus, catalog, *detector, cfg);
  } else {
    const auto memory = entity_memory(o, catalog);
    const auto encoder = context_encoder(o, memory.dim());
    const SemanticScorer scorer(memory, *encoder);
    corrected = correct_corpus(corpus, catalog, scorer, *detector, cfg);
  }

  Output out(o.output);
  for (const auto& c : corrected) out.stream() << cli::correction_json(c, catalog, o.detail).dump() << '\n';
  out.finish();
  return 0;
}

std::vector<std::string> hypotheses_for(const Options& o, const std::vector<Utterance>& corpus) {
  if (o.hyps.empty()) return top1_texts(corpus);
  auto in = open_input(o.hyps, "hypotheses");
  const auto by_id = cli::read_hypotheses(in);
  std::vector<std::string> out;
  for (const auto& u : corpus) {
    auto it = by_id.find(u.utt_id);
    if (it == by_id.end()) throw InputError("no hypothesis for utt_id " + u.utt_id);
    out.push_back(it->second);
  }
  return out;
}

int cmd_evaluate(const Options& o) {
  if (o.format != "csv" && o.format != "jsonl") throw ConfigError("unknown format \"" + o.format + "\"");
  const auto corpus = read_corpus_file(o.nbest);
  const auto hyps = hypotheses_for(o, corpus);
  const auto metrics = score_corpus(corpus, hyps);

  Output out(o.output);
  if (o.format == "csv") {
    write_report_csv_header(out.stream());
    write_report_csv_row(out.stream(), o.label, summarize(metrics));
  } else {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& m = metrics[i];
      nlohmann::json rec{{"utt_id", corpus[i].utt_id},
                         {"hyp", hyps[i]},
                         {"ref_chars", m.ref_chars},
                         {"ne_chars", m.inside_chars},
                         {"substitutions", m.substitutions},
                         {"deletions", m.deletions},
                         {"insertions", m.insertions},
                         {"ne_edits", m.inside_edits},
                         {"nne_edits", m.outside_edits},
                         {"ne_recalled", m.ne_recalled}};
      out.stream() << rec.dump() << '\n';
    }
  }
  out.finish();
  return 0;
}

int cmd_fewshot(const Options& o) {
  const auto catalog = load_catalog(o);
  const auto corpus = read_corpus_file(o.nbest);
  const auto train = read_corpus_file(o.train);
  const auto metrics = score_corpus(corpus, hypotheses_for(o, corpus));
  const auto counts = occurrence_counts(annotated_references(train), catalog);
  Output out(o.output);
  out.stream() << "max_shots,occurrences,recalled,ne_recall\n";
  char buf[32];
  for (const auto& b : fewshot_report(corpus, metrics, catalog, counts, cli::parse_counts(o.thresholds))) {
    std::snprintf(buf, sizeof buf, "%.6f", b.recall());
    out.stream() << b.threshold << ',' << b.total << ',' << b.recalled << ',' << buf << '\n';
  }
  out.finish();
  return 0;
}

int cmd_build_memory(const Options& o) {
  const auto catalog = load_catalog(o);
  EmbeddingMemory memory;
  if (o.import_vectors.empty()) {
    memory = build_reference_memory(catalog, o.dim, o.seed);
  } else {
    auto in = open_input(o.import_vectors, "entity vectors");
    std::vector<std::pair<EntityId, EmbeddingVector>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto where = "vector line " + std::to_string(line_no);
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw InputError(where + ": " + e.what());
      }
      if (!rec.is_object() || !rec.contains("entity") || !rec["entity"].is_string() || !rec.contains("vector") ||
          !rec["vector"].is_array()) {
        throw InputError(where + ": needs string entity and array vector");
      }
      const auto surface = rec["entity"].get<std::string>();
      const auto id = catalog.find(surface);
      if (!id) throw NotFoundError(where + ": entity \"" + surface + "\" is not listed");
      EmbeddingVector v;
      for (const auto& x : rec["vector"]) {
        if (!x.is_number()) throw InputError(where + ": non-numeric vector component");
        v.push_back(x.get<double>());
      }
      rows.emplace_back(*id, std::move(v));
    }
    memory = build_memory(catalog, rows);
    if (o.normalize_embeddings) memory.normalize_rows();
  }
  if (o.output == "-") throw ConfigError("build-memory needs --output");
  Output out(o.output);
  save_memory(memory, out.stream());
  out.finish();
  std::cerr << "wrote " << memory.size() << " rows of dim " << memory.dim() << '\n';
  return 0;
}

int cmd_homophone_set(const Options& o) {
  const auto catalog = load_catalog(o);
  const auto corpus = read_corpus_file(o.nbest);
  Output out(o.output);
  for (const auto& id : build_homophone_set(corpus, catalog)) out.stream() << id << '\n';
  out.finish();
  return 0;
}

HarnessSetup harness(const Options& o, const ContextEncoder& encoder) {
  HarnessSetup h;
  h.detector = cli::parse_detector(o.detector);
  h.baseline = baseline_config(o);
  h.config = corrector_config(o);
  h.encoder = &encoder;
  h.embed_dim = o.dim;
  h.seed = o.seed;
  if (!o.memory.empty()) {
    h.memory_for = [&o](const EntityCatalog& catalog) { return entity_memory(o, catalog); };
  }
  return h;
}

std::size_t memory_dim(const Options& o) {
  if (o.memory.empty()) return o.dim;
  auto in = open_input(o.memory, "memory");
  return load_memory(in).dim();
}

int cmd_sweep(const Options& o) {
  const auto alphas = cli::parse_reals(o.alphas);
  const auto ks = cli::parse_counts(o.topks);
  const auto catalog = load_catalog(o);
  const auto corpus = read_corpus_file(o.nbest);
  const auto encoder = context_encoder(o, memory_dim(o));
  Output out(o.output);
  out.stream() << "alpha,k,cer\n";
  char buf[64];
  for (const auto& row : sweep(corpus, catalog, harness(o, *encoder), alphas, ks)) {
    std::snprintf(buf, sizeof buf, "%g,%zu,%.6f\n", row.alpha, row.k, row.cer);
    out.stream() << buf;
  }
  out.finish();
  return 0;
}

int cmd_scaling(const Options& o) {
  const auto sizes = cli::parse_counts(o.sizes);
  const auto pool = load_catalog(o);
  const auto corpus = read_corpus_file(o.nbest);
  const auto encoder = context_encoder(o, memory_dim(o));
  Output out(o.output);
  out.stream() << "size,phonetic_ne_recall,dancer_ne_recall\n";
  char buf[64];
  for (const auto& p : scaling_curve(corpus, pool, sizes, harness(o, *encoder))) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", p.size, p.phonetic_recall, p.dancer_recall);
    out.stream() << buf;
  }
  out.finish();
  return 0;
}

int cmd_synth(const Options& o) {
  if (o.output == "-") throw ConfigError("synth needs --output DIR");
  const auto data = generate_synthetic(load_lexicon(o), o.synth);
  write_synthetic(data, o.output);
  std::cerr << "wrote " << data.corpus.size() << " utterances, " << data.catalog.size() << " entities, "
            << data.pool.size() << " pool entities to " << o.output << '\n';
  return 0;
}

int run(int argc, char** argv) {
  Options o;
  CLI::App app{"Named-entity correction for ASR n-best output"};
  app.require_subcommand(1);

  auto* correct = app.add_subcommand("correct", "correct the top-1 hypothesis of each utterance");
  add_run(correct, o);
  correct->add_option("--method", o.method, "dancer or ped-nec (phonetic only)")->capture_default_str();
  correct->add_flag("--detail", o.detail, "include scored candidates and rejection scores");

  auto* evaluate = app.add_subcommand("evaluate", "score hypotheses against references");
  add_config(evaluate, o);
  evaluate->add_option("--nbest", o.nbest, "n-best JSONL with ref and ne_spans")->required();
  evaluate->add_option("--hyps", o.hyps, "corrected JSONL; default scores the top-1 hypotheses");
  evaluate->add_option("--label", o.label, "row label")->capture_default_str();
  evaluate->add_option("--format", o.format, "csv (summary) or jsonl (per utterance)")->capture_default_str();
  evaluate->add_option("--jobs", o.jobs, "worker threads (0 = runtime default)");
  evaluate->add_option("--output", o.output, "output path, - for stdout")->capture_default_str();

  auto* fewshot = app.add_subcommand("fewshot", "NE recall bucketed by training occurrences");
  add_config(fewshot, o);
  fewshot->add_option("--nbest", o.nbest, "n-best JSONL with ref and ne_spans")->required();
  fewshot->add_option("--hyps", o.hyps, "corrected JSONL; default scores the top-1 hypotheses");
  fewshot->add_option("--train", o.train, "training JSONL with ref and ne_spans")->required();
  add_catalog(fewshot, o, true);
  fewshot->add_option("--thresholds", o.thresholds, "cumulative shot thresholds")->capture_default_str();
  fewshot->add_option("--output", o.output, "output path, - for stdout")->capture_default_str();

  auto* build = app.add_subcommand("build-memory", "write an EDAM entity memory");
  add_config(build, o);
  add_catalog(build, o, true);
  build->add_option("--import", o.import_vectors, "JSONL of {\"entity\", \"vector\"} rows from an external encoder");
  build->add_flag("--normalize-embeddings", o.normalize_embeddings, "L2-normalize imported rows");
  build->add_option("--dim", o.dim, "reference embedder dimension")->capture_default_str();
  build->add_option("--seed", o.seed, "reference embedder seed")->capture_default_str();
  build->add_option("--output", o.output, "EDAM output path")->required();

  auto* homophones = app.add_subcommand("homophone-set", "ids of utterances containing confusable entities");
  add_config(homophones, o);
  homophones->add_option("--nbest", o.nbest, "n-best JSONL with ref and ne_spans")->required();
  add_catalog(homophones, o, true);
  homophones->add_option("--output", o.output, "output path, - for stdout")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "CER over an alpha x top-k grid");
  add_run(sweep_cmd, o);
  sweep_cmd->add_option("--alphas", o.alphas, "comma-separated alpha values")->capture_default_str();
  sweep_cmd->add_option("--topks", o.topks, "comma-separated top-k values")->capture_default_str();

  auto* scaling = app.add_subcommand("scaling", "NE recall against catalog size");
  add_run(scaling, o);
  scaling->add_option("--sizes", o.sizes, "comma-separated catalog sizes")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "generate the synthetic homophone corpus");
  add_config(synth, o);
  add_lexicon(synth, o);
  synth->add_option("--seed", o.synth.seed, "generator seed")->capture_default_str();
  synth->add_option("--utterances", o.synth.utterances, "test utterances")->capture_default_str();
  synth->add_option("--groups", o.synth.groups, "pronunciation groups")->capture_default_str();
  synth->add_option("--nbest-size", o.synth.nbest, "hypotheses per utterance")->capture_default_str();
  synth->add_option("--pool-size", o.synth.pool_size, "catalog plus padding entities")->capture_default_str();
  synth->add_option("--output", o.output, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  CLI::App* cmd = app.get_subcommands().front();
  if (!o.config.empty()) {
    auto in = open_input(o.config, "config file");
    cli::apply_config_file(*cmd, in, o.config);
  }
  if (o.jobs < 0) throw ConfigError("--jobs must be >= 0");
  kernels::set_num_threads(o.jobs);

  const auto name = cmd->get_name();
  if (name == "correct") return cmd_correct(o);
  if (name == "evaluate") return cmd_evaluate(o);
  if (name == "fewshot") return cmd_fewshot(o);
  if (name == "build-memory") return cmd_build_memory(o);
  if (name == "homophone-set") return cmd_homophone_set(o);
  if (name == "sweep") return cmd_sweep(o);
  if (name == "scaling") return cmd_scaling(o);
  return cmd_synth(o);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const LexiconError& e) {
    std::cerr << "lexicon error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Utf8Error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NotFoundError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
