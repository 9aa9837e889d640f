#pragma once

#include <initializer_list>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dancer/entity_store.hpp"
#include "dancer/phonetics.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(DANCER_DATA_DIR) + "/" + name; }

inline std::shared_ptr<const dancer::PronunciationLexicon> lexicon(
    dancer::ToneMode mode = dancer::ToneMode::kWithTone) {
  return std::make_shared<dancer::PronunciationLexicon>(dancer::load_lexicon_file(data_path("lexicon.tsv"), mode));
}

inline dancer::EntityCatalog catalog(std::initializer_list<std::pair<const char*, const char*>> entries,
                                     std::shared_ptr<const dancer::PronunciationLexicon> lex = lexicon()) {
  dancer::EntityCatalog c(std::move(lex));
  for (const auto& [surface, desc] : entries) {
    c.add(surface);
    if (desc != nullptr) c.attach_description(surface, desc);
  }
  return c;
}

}  // namespace fixtures
