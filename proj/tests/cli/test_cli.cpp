#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cli_support.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is discarded.
Run run(const std::string& args) {
  const std::string cmd = std::string(DANCER_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fixture(const std::string& name) { return fixtures::data_path("fixtures/synthetic10/" + name); }

std::string corpus_args() {
  return "--nbest " + fixture("nbest.jsonl") + " --nelist " + fixture("nelist.txt") + " --descriptions " +
         fixture("descriptions.jsonl");
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dancer_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::size_t lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n' ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("correct with alpha 1 reproduces the phonetic-only golden output") {
  const auto r = run("correct --alpha 1 " + corpus_args());
  CHECK(r.status == 0);
  CHECK(r.out == slurp(fixture("pednec_golden.jsonl")));
  const auto pn = run("correct --method ped-nec " + corpus_args());
  CHECK(pn.out == r.out);
}

TEST_CASE("correct output schema") {
  const auto r = run("correct --detail " + corpus_args());
  REQUIRE(r.status == 0);
  CHECK(lines(r.out) == 10);
  std::istringstream in(r.out);
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("utt_id"));
    CHECK(j["text"].is_string());
    for (const auto& c : j["corrections"]) {
      CHECK(c["span"].size() == 2);
      CHECK(c.contains("candidates"));
      CHECK(c.contains("reject_candidate"));
    }
  }
}

TEST_CASE("evaluate") {
  SUBCASE("references as hypotheses score zero") {
    const auto refs = scratch("refs.jsonl");
    {
      std::ifstream in(fixture("nbest.jsonl"));
      std::ofstream out(refs);
      std::string line;
      while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        out << nlohmann::json{{"utt_id", j["utt_id"]}, {"text", j["ref"]}}.dump() << '\n';
      }
    }
    const auto r = run("evaluate --nbest " + fixture("nbest.jsonl") + " --hyps " + refs.string() + " --label ref");
    REQUIRE(r.status == 0);
    const auto row = r.out.substr(r.out.find('\n') + 1);
    CHECK(row.rfind("ref,10,0.000000,0.000000,0.000000,1.000000,0,0,0,", 0) == 0);
  }
  SUBCASE("top-1 baseline and per-utterance output") {
    CHECK(run("evaluate --nbest " + fixture("nbest.jsonl")).status == 0);
    const auto r = run("evaluate --format jsonl --nbest " + fixture("nbest.jsonl"));
    CHECK(r.status == 0);
    CHECK(lines(r.out) == 10);
  }
}

TEST_CASE("sweep prints one row per grid point") {
  const auto r = run("sweep --alphas 0,0.5,1 --topks 1,10 " + corpus_args());
  REQUIRE(r.status == 0);
  CHECK(r.out.rfind("alpha,k,cer\n", 0) == 0);
  CHECK(lines(r.out) == 7);
}

TEST_CASE("other subcommands") {
  SUBCASE("homophone-set") {
    const auto r = run("homophone-set --nbest " + fixture("nbest.jsonl") + " --nelist " + fixture("nelist.txt"));
    CHECK(r.status == 0);
  }
  SUBCASE("fewshot") {
    const auto r = run("fewshot --nbest " + fixture("nbest.jsonl") + " --nelist " + fixture("nelist.txt") + " --train " +
                       fixture("train.jsonl"));
    CHECK(r.status == 0);
    CHECK(lines(r.out) == 4);
  }
  SUBCASE("build-memory then correct with it") {
    const auto mem = scratch("memory.edam");
    CHECK(run("build-memory --nelist " + fixture("nelist.txt") + " --descriptions " + fixture("descriptions.jsonl") +
              " --output " + mem.string())
              .status == 0);
    const auto with = run("correct --memory " + mem.string() + " " + corpus_args());
    const auto without = run("correct " + corpus_args());
    CHECK(with.status == 0);
    CHECK(with.out == without.out);
  }
  SUBCASE("scaling") {
    const auto r = run("scaling --sizes 13,40 --nbest " + fixture("nbest.jsonl") + " --nelist " +
                       fixture("pool_nelist.txt") + " --descriptions " + fixture("pool_descriptions.jsonl"));
    CHECK(r.status == 0);
    CHECK(lines(r.out) == 3);
  }
}

TEST_CASE("exit codes") {
  CHECK(run("correct --alpha 1.5 " + corpus_args()).status == 2);
  CHECK(run("correct --topk 0 " + corpus_args()).status == 2);
  CHECK(run("correct --bogus " + corpus_args()).status == 2);
  const auto bad = scratch("overlap.jsonl");
  std::ofstream(bad) << R"({"utt_id":"x","nbest":[{"text":"abcdef","score":0}],"ced_spans":[[0,3],[2,4]]})" << '\n';
  CHECK(run("correct --nbest " + bad.string() + " --nelist " + fixture("nelist.txt")).status == 2);
  CHECK(run("correct --nbest /nonexistent/nbest.jsonl --nelist " + fixture("nelist.txt")).status == 1);
}

TEST_CASE("config file precedence") {
  const auto cfg = scratch("run.conf");
  std::ofstream(cfg) << "# alpha only\nalpha = 1\n";
  const auto golden = slurp(fixture("pednec_golden.jsonl"));
  CHECK(run("correct --config " + cfg.string() + " " + corpus_args()).out == golden);
  CHECK(run("correct --config " + cfg.string() + " --alpha 1 " + corpus_args()).out == golden);
  const auto flag_wins = run("correct --config " + cfg.string() + " --alpha 0 " + corpus_args());
  CHECK(flag_wins.out == run("correct --alpha 0 " + corpus_args()).out);

  std::ofstream(cfg) << "no-such-key = 3\n";
  CHECK(run("correct --config " + cfg.string() + " " + corpus_args()).status == 2);
}

TEST_CASE("apply_config_file") {
  CLI::App app;
  double alpha = 0.6;
  int k = 10;
  bool flag = false;
  app.add_option("--alpha", alpha);
  app.add_option("--topk", k);
  app.add_flag("--no-rejection", flag);
  std::vector<std::string> args{"0.2", "--alpha"};  // CLI11 takes argv reversed
  app.parse(args);
  std::istringstream in("alpha=0.9\n topk = 3 # trailing\n\nno-rejection=true\n");
  dancer::cli::apply_config_file(app, in, "test");
  CHECK(alpha == 0.2);
  CHECK(k == 3);
  CHECK(flag);
  std::istringstream junk("just words\n");
  CHECK_THROWS_AS(dancer::cli::apply_config_file(app, junk, "test"), dancer::ConfigError);
}

TEST_CASE("parsers") {
  CHECK(dancer::cli::parse_reals("0, 0.5,1") == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(dancer::cli::parse_counts("1,10") == std::vector<std::size_t>{1, 10});
  CHECK_THROWS(dancer::cli::parse_reals("a"));
  CHECK_THROWS(dancer::cli::parse_counts("-1"));
  CHECK(dancer::cli::parse_detector("gold") == dancer::DetectorKind::kGold);
  CHECK_THROWS(dancer::cli::parse_detector("magic"));
  std::istringstream hyps(R"({"utt_id":"a","text":"x"})");
  CHECK(dancer::cli::read_hypotheses(hyps).at("a") == "x");
}
