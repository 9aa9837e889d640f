#include "cli_support.hpp"

#include <cmath>
#include <sstream>

#include "dancer/corpus.hpp"
#include "dancer/utf8.hpp"

namespace dancer::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("empty list: \"" + csv + "\"");
  return out;
}

}  // namespace

void apply_config_file(CLI::App& app, std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto where = source + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") throw ConfigError(where + ": invalid key \"" + key + "\"");
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError(where + ": unknown key \"" + key + "\"");
    if (opt->count() > 0) continue;  // command line wins
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

nlohmann::json correction_json(const UtteranceCorrection& corr, const EntityCatalog& catalog, bool detail) {
  nlohmann::json out;
  out["utt_id"] = corr.utt_id;
  out["text"] = corr.text;
  auto list = nlohmann::json::array();
  const auto top1 = utf8_decode(corr.original);
  for (const auto& r : corr.results) {
    nlohmann::json c;
    c["span"] = {r.span.start, r.span.end};
    c["original"] = utf8_encode(std::u32string_view(top1).substr(r.span.start, r.span.length()));
    if (r.chosen) {
      c["candidate"] = catalog.at(*r.chosen).surface;
    } else {
      c["candidate"] = nullptr;
    }
    c["rejected"] = r.rejected;
    if (detail) {
      auto cands = nlohmann::json::array();
      for (const auto& cand : r.candidates) {
        cands.push_back({{"entity", catalog.at(cand.id).surface},
                         {"phonetic", cand.phonetic},
                         {"semantic", cand.semantic},
                         {"fused", cand.fused}});
      }
      c["candidates"] = std::move(cands);
      c["reject_candidate"] = r.reject_candidate;
      c["reject_original"] = r.reject_original;
    }
    list.push_back(std::move(c));
  }
  out["corrections"] = std::move(list);
  return out;
}

std::map<std::string, std::string> read_hypotheses(std::istream& jsonl) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(jsonl, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = "hypothesis line " + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("utt_id") || !rec["utt_id"].is_string() || !rec.contains("text") ||
        !rec["text"].is_string()) {
      throw InputError(where + ": needs string fields utt_id and text");
    }
    const auto id = rec["utt_id"].get<std::string>();
    auto text = rec["text"].get<std::string>();
    if (!is_valid_utf8(text)) throw InputError(where + " (" + id + "): invalid UTF-8");
    if (!out.emplace(id, std::move(text)).second) throw InputError(where + ": duplicate utt_id " + id);
  }
  return out;
}

std::vector<double> parse_reals(const std::string& csv) {
  std::vector<double> out;
  for (const auto& item : split_csv(csv)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !std::isfinite(v)) throw ConfigError("not a number: \"" + item + "\"");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& csv) {
  std::vector<std::size_t> out;
  for (const auto& item : split_csv(csv)) {
    if (item.find_first_not_of("0123456789") != std::string::npos || item.size() > 18) {
      throw ConfigError("not a non-negative integer: \"" + item + "\"");
    }
    out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return out;
}

DetectorKind parse_detector(const std::string& name) {
  if (name == "external") return DetectorKind::kExternal;
  if (name == "baseline") return DetectorKind::kBaseline;
  if (name == "gold") return DetectorKind::kGold;
  throw ConfigError("unknown detector \"" + name + "\" (external|baseline|gold)");
}

}  // namespace dancer::cli
