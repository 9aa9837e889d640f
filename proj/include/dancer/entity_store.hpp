#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dancer/alignment.hpp"
#include "dancer/phonetics.hpp"

namespace dancer {

using EntityId = std::int32_t;

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Entity {
  EntityId id = 0;
  std::string surface;      // UTF-8
  std::u32string chars;     // decoded surface
  PhoneticSequence phonetic;
};

// The NE list together with optional descriptions. Built once, then shared
// read-only.
class EntityCatalog {
 public:
  EntityCatalog() : lexicon_(std::make_shared<PronunciationLexicon>()) {}
  explicit EntityCatalog(std::shared_ptr<const PronunciationLexicon> lex) : lexicon_(std::move(lex)) {}

  // Returns the new id, or nullopt if the surface is already present.
  std::optional<EntityId> add(const std::string& surface);

  // Stores truncate_description(strip_control_tokens(raw_text)); overwrites.
  // Throws NotFoundError for unknown surfaces.
  void attach_description(const std::string& surface, const std::string& raw_text);

  std::size_t size() const noexcept { return entities_.size(); }
  bool empty() const noexcept { return entities_.empty(); }
  const Entity& at(EntityId id) const { return entities_.at(static_cast<std::size_t>(id)); }
  const std::vector<Entity>& entities() const noexcept { return entities_; }

  std::optional<EntityId> find(const std::string& surface) const;
  const std::string* description(EntityId id) const;
  bool has_description(EntityId id) const { return description(id) != nullptr; }
  std::size_t described_count() const noexcept { return descriptions_.size(); }

  const PronunciationLexicon& lexicon() const noexcept { return *lexicon_; }
  std::shared_ptr<const PronunciationLexicon> lexicon_ptr() const noexcept { return lexicon_; }

  // Copy holding only entities with descriptions, ids renumbered in order.
  EntityCatalog with_descriptions_only() const;
  // Copy holding the given surfaces (in the order given) with their descriptions.
  EntityCatalog subset(const std::vector<std::string>& surfaces) const;

 private:
  std::vector<Entity> entities_;
  std::unordered_map<std::string, EntityId> by_surface_;
  std::map<EntityId, std::string> descriptions_;
  std::shared_ptr<const PronunciationLexicon> lexicon_;
};

struct IngestResult {
  EntityCatalog catalog;
  std::size_t duplicates = 0;
};

// One surface per line; blank lines skipped, duplicates dropped and counted.
IngestResult ingest_entities(std::istream& lines, std::shared_ptr<const PronunciationLexicon> lex);

struct DescriptionLoadStats {
  std::size_t attached = 0;
  std::size_t unknown_entities = 0;
};

// JSON Lines: {"entity": "<surface>", "description": "<text>"}.
DescriptionLoadStats load_descriptions(std::istream& jsonl, EntityCatalog& catalog);

inline constexpr std::size_t kDescriptionWordLimit = 100;

// Keeps the first `limit` words. Text containing whitespace is counted in
// whitespace tokens; unspaced text is counted in characters.
std::string truncate_description(const std::string& raw_text, std::size_t limit = kDescriptionWordLimit);

// Removes literal [CLS]/[SEP] control tokens.
std::string strip_control_tokens(const std::string& text);

using EntityPair = std::pair<EntityId, EntityId>;

// All pairs i < j with identical phonetic sequences and distinct surfaces.
std::vector<EntityPair> homophone_pairs(const EntityCatalog& catalog);

// A gold-annotated utterance: reference text plus NE character spans.
struct AnnotatedText {
  std::string text;
  std::vector<Range> ne_spans;
};

// Number of gold NE spans whose surface equals each entity (all ids present).
std::map<EntityId, std::size_t> occurrence_counts(const std::vector<AnnotatedText>& utterances,
                                                  const EntityCatalog& catalog);

}  // namespace dancer
