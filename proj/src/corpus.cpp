#include "dancer/corpus.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "dancer/detection.hpp"
#include "dancer/utf8.hpp"

namespace dancer {

using nlohmann::json;

NBestList NBestList::truncated(std::size_t n) const {
  NBestList out;
  out.hypotheses.assign(hypotheses.begin(), hypotheses.begin() + static_cast<std::ptrdiff_t>(std::min(n, size())));
  return out;
}

namespace {

std::vector<Range> parse_spans(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw InputError(where + " must be an array of [start,end] pairs");
  std::vector<Range> spans;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() || !p[1].is_number_unsigned()) {
      throw InputError(where + " entries must be [start,end] with non-negative integers");
    }
    spans.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
  }
  return spans;
}

json spans_to_json(const std::vector<Range>& spans) {
  json arr = json::array();
  for (const auto& s : spans) arr.push_back({s.start, s.end});
  return arr;
}

std::size_t checked_length(const std::string& text, const std::string& where) {
  try {
    return utf8_decode(text).size();
  } catch (const Utf8Error& e) {
    throw InputError(where + ": invalid UTF-8 (" + e.what() + ")");
  }
}

Utterance parse_record(const std::string& line, std::size_t line_no) {
  const std::string at_line = "n-best line " + std::to_string(line_no);
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception& e) {
    // Name the record when the id is still recoverable from the raw line.
    static const std::regex id_re(R"re("utt_id"\s*:\s*"([^"\\]*)")re");
    std::smatch m;
    const std::string who = std::regex_search(line, m, id_re) ? " (utt_id " + m[1].str() + ")" : "";
    throw InputError(at_line + who + ": " + e.what());
  }
  if (!rec.is_object() || !rec.contains("utt_id") || !rec["utt_id"].is_string()) {
    throw InputError(at_line + ": missing string field utt_id");
  }
  Utterance utt;
  utt.utt_id = rec["utt_id"].get<std::string>();
  const std::string where = at_line + " (utt_id " + utt.utt_id + ")";

  if (!rec.contains("nbest") || !rec["nbest"].is_array() || rec["nbest"].empty()) {
    throw InputError(where + ": nbest must be a non-empty array");
  }
  for (const auto& h : rec["nbest"]) {
    if (!h.is_object() || !h.contains("text") || !h["text"].is_string() || !h.contains("score") ||
        !h["score"].is_number()) {
      throw InputError(where + ": nbest entries need string text and numeric score");
    }
    Hypothesis hyp{h["text"].get<std::string>(), h["score"].get<double>()};
    if (!std::isfinite(hyp.score)) throw InputError(where + ": non-finite beam score");
    checked_length(hyp.text, where + " nbest text");
    utt.nbest.hypotheses.push_back(std::move(hyp));
  }

  if (rec.contains("ref") && !rec["ref"].is_null()) {
    if (!rec["ref"].is_string()) throw InputError(where + ": ref must be a string");
    utt.ref = rec["ref"].get<std::string>();
  }
  if (rec.contains("ne_spans") && !rec["ne_spans"].is_null()) {
    if (!utt.ref) throw InputError(where + ": ne_spans given without ref");
    utt.ne_spans = parse_spans(rec["ne_spans"], where + " ne_spans");
    try {
      validate_spans(utt.ne_spans, checked_length(*utt.ref, where + " ref"));
    } catch (const std::invalid_argument& e) {
      throw InputError(where + " ne_spans: " + e.what());
    }
  }
  if (rec.contains("ced_spans") && !rec["ced_spans"].is_null()) {
    auto spans = parse_spans(rec["ced_spans"], where + " ced_spans");
    try {
      validate_spans(spans, checked_length(utt.nbest.top().text, where));
    } catch (const std::invalid_argument& e) {
      throw InputError(where + " ced_spans: " + e.what());
    }
    utt.ced_spans = std::move(spans);
  }
  return utt;
}

}  // namespace

std::vector<Utterance> read_corpus(std::istream& jsonl) {
  std::vector<Utterance> corpus;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(jsonl, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto utt = parse_record(line, line_no);
    if (!seen.insert(utt.utt_id).second) {
      throw InputError("n-best line " + std::to_string(line_no) + ": duplicate utt_id " + utt.utt_id);
    }
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

std::vector<Utterance> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open n-best file: " + path);
  return read_corpus(in);
}

std::string to_json_line(const Utterance& utt) {
  json rec;
  rec["utt_id"] = utt.utt_id;
  json nbest = json::array();
  for (const auto& h : utt.nbest.hypotheses) nbest.push_back({{"text", h.text}, {"score", h.score}});
  rec["nbest"] = std::move(nbest);
  if (utt.ref) {
    rec["ref"] = *utt.ref;
    rec["ne_spans"] = spans_to_json(utt.ne_spans);
  }
  if (utt.ced_spans) rec["ced_spans"] = spans_to_json(*utt.ced_spans);
  return rec.dump();
}

void write_corpus(const std::vector<Utterance>& corpus, std::ostream& out) {
  for (const auto& utt : corpus) out << to_json_line(utt) << '\n';
}

}  // namespace dancer
