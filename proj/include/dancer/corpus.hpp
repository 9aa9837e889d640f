#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dancer/alignment.hpp"

namespace dancer {

struct Hypothesis {
  std::string text;
  double score = 0.0;  // beam score, log domain
};

// Ranked ASR alternatives; index 0 is the top-1 hypothesis.
struct NBestList {
  std::vector<Hypothesis> hypotheses;

  std::size_t size() const noexcept { return hypotheses.size(); }
  const Hypothesis& top() const { return hypotheses.front(); }
  NBestList truncated(std::size_t n) const;
};

// One line of the n-best JSONL exchange format:
// {"utt_id": str, "nbest": [{"text": str, "score": float}, ...],
//  "ref": str?, "ne_spans": [[s,e],...]?, "ced_spans": [[s,e],...]?}
struct Utterance {
  std::string utt_id;
  NBestList nbest;
  std::optional<std::string> ref;
  std::vector<Range> ne_spans;                  // reference character offsets
  std::optional<std::vector<Range>> ced_spans;  // top-1 hypothesis character offsets
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Validates each record (UTF-8, finite scores, N >= 1, span sanity) and
// names the offending utt_id / line on failure.
std::vector<Utterance> read_corpus(std::istream& jsonl);
std::vector<Utterance> read_corpus_file(const std::string& path);
void write_corpus(const std::vector<Utterance>& corpus, std::ostream& out);
std::string to_json_line(const Utterance& utt);

}  // namespace dancer
