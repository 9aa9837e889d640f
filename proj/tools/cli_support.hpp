#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dancer/corrector.hpp"
#include "dancer/entity_store.hpp"

namespace dancer::cli {

// Fills options of `app` that were not given on the command line from
// `key=value` lines; `#` starts a comment that runs to the end of the line. Unknown keys and malformed lines
// raise ConfigError.
void apply_config_file(CLI::App& app, std::istream& in, const std::string& source);

// {"utt_id", "text", "corrections": [{"span", "original", "candidate", "rejected"}]};
// detail adds scored candidates and both rejection scores.
nlohmann::json correction_json(const UtteranceCorrection& corr, const EntityCatalog& catalog, bool detail);

// utt_id -> text from JSONL records carrying those two fields.
std::map<std::string, std::string> read_hypotheses(std::istream& jsonl);

std::vector<double> parse_reals(const std::string& csv);
std::vector<std::size_t> parse_counts(const std::string& csv);

DetectorKind parse_detector(const std::string& name);

}  // namespace dancer::cli
