#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dancer/corpus.hpp"
#include "dancer/entity_store.hpp"

namespace dancer {

// Knobs of the synthetic homophone corpus. Entities come in pronunciation
// groups whose members share a syllable sequence but differ in characters
// and topic; contexts draw words from the gold entity's topic, which its
// description also contains.
struct SyntheticConfig {
  std::uint64_t seed = 7;
  std::size_t utterances = 200;
  std::size_t groups = 40;
  std::size_t nbest = 10;
  double homophone_rate = 0.6;  // top-1 entity replaced by a homophonic string
  double near_rate = 0.2;       // top-1 entity with one syllable changed
  double flag_correct_rate = 0.5;  // detector also flags an intact entity
  double spurious_rate = 0.3;      // detector flags a non-entity context word
  std::size_t pool_size = 1200;    // catalog plus padding entities
  std::size_t max_pool_homophones = 6;  // extra homophones per catalog pronunciation
};

struct SyntheticData {
  EntityCatalog catalog;  // the NE list, with descriptions
  EntityCatalog pool;     // catalog entities first, then padding entities
  std::vector<Utterance> corpus;    // n-best lists with ref, ne_spans and ced_spans
  std::vector<Utterance> training;  // references only, for occurrence counts
};

SyntheticData generate_synthetic(std::shared_ptr<const PronunciationLexicon> lex, const SyntheticConfig& cfg);

// Writes nelist.txt, descriptions.jsonl, nbest.jsonl, train.jsonl,
// pool_nelist.txt and pool_descriptions.jsonl into dir.
void write_synthetic(const SyntheticData& data, const std::string& dir);

}  // namespace dancer
