#include "dancer/entity_store.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "dancer/corpus.hpp"
#include "dancer/kernels.hpp"
#include "dancer/utf8.hpp"

namespace dancer {

namespace {

std::string trim(const std::string& s) {
  const auto text = utf8_decode(s);
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return utf8_encode(std::u32string_view(text).substr(b, e - b));
}

void erase_all(std::string& s, const std::string& needle) {
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos)) s.erase(pos, needle.size());
}

}  // namespace

std::optional<EntityId> EntityCatalog::add(const std::string& surface) {
  if (surface.empty()) throw std::invalid_argument("entity surface must be non-empty");
  if (by_surface_.count(surface) != 0) return std::nullopt;
  Entity e;
  e.id = static_cast<EntityId>(entities_.size());
  e.surface = surface;
  e.chars = utf8_decode(surface);
  e.phonetic = phoneticize(std::u32string_view(e.chars), *lexicon_);
  by_surface_.emplace(surface, e.id);
  entities_.push_back(std::move(e));
  return entities_.back().id;
}

void EntityCatalog::attach_description(const std::string& surface, const std::string& raw_text) {
  const auto id = find(surface);
  if (!id) throw NotFoundError("unknown entity: " + surface);
  descriptions_[*id] = truncate_description(strip_control_tokens(raw_text));
}

std::optional<EntityId> EntityCatalog::find(const std::string& surface) const {
  auto it = by_surface_.find(surface);
  if (it == by_surface_.end()) return std::nullopt;
  return it->second;
}

const std::string* EntityCatalog::description(EntityId id) const {
  auto it = descriptions_.find(id);
  return it == descriptions_.end() ? nullptr : &it->second;
}

EntityCatalog EntityCatalog::with_descriptions_only() const {
  EntityCatalog out(lexicon_);
  for (const auto& e : entities_) {
    if (const auto* d = description(e.id)) {
      const auto id = *out.add(e.surface);
      out.descriptions_[id] = *d;
    }
  }
  return out;
}

EntityCatalog EntityCatalog::subset(const std::vector<std::string>& surfaces) const {
  EntityCatalog out(lexicon_);
  for (const auto& s : surfaces) {
    const auto src = find(s);
    if (!src) throw NotFoundError("unknown entity: " + s);
    const auto id = out.add(s);
    if (!id) continue;
    if (const auto* d = description(*src)) out.descriptions_[*id] = *d;
  }
  return out;
}

IngestResult ingest_entities(std::istream& lines, std::shared_ptr<const PronunciationLexicon> lex) {
  IngestResult result{EntityCatalog(std::move(lex)), 0};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::string surface;
    try {
      surface = trim(line);
    } catch (const Utf8Error& e) {
      throw Utf8Error("NE list line " + std::to_string(line_no) + ": " + e.what());
    }
    if (surface.empty()) continue;
    if (!result.catalog.add(surface)) ++result.duplicates;
  }
  return result;
}

DescriptionLoadStats load_descriptions(std::istream& jsonl, EntityCatalog& catalog) {
  DescriptionLoadStats stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(jsonl, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("descriptions line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.contains("entity") || !rec.contains("description") || !rec["entity"].is_string() ||
        !rec["description"].is_string()) {
      throw InputError("descriptions line " + std::to_string(line_no) +
                               ": expected string fields \"entity\" and \"description\"");
    }
    const auto surface = rec["entity"].get<std::string>();
    if (!catalog.find(surface)) {
      ++stats.unknown_entities;
      continue;
    }
    catalog.attach_description(surface, rec["description"].get<std::string>());
    ++stats.attached;
  }
  return stats;
}

std::string truncate_description(const std::string& raw_text, std::size_t limit) {
  const auto text = utf8_decode(trim(raw_text));
  const bool spaced = std::any_of(text.begin(), text.end(), [](char32_t c) { return is_space(c); });
  if (!spaced) return utf8_encode(std::u32string_view(text).substr(0, std::min(limit, text.size())));

  // Cut right after the limit-th word so the original spacing survives.
  std::size_t words = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    if (words == limit) break;
    while (i < text.size() && !is_space(text[i])) ++i;
    ++words;
  }
  std::size_t end = i;
  while (end > 0 && is_space(text[end - 1])) --end;
  return utf8_encode(std::u32string_view(text).substr(0, end));
}

std::string strip_control_tokens(const std::string& text) {
  std::string out = text;
  erase_all(out, "[SEP]");
  erase_all(out, "[CLS]");
  return out;
}

std::vector<EntityPair> homophone_pairs(const EntityCatalog& catalog) {
  return kernels::parallel::homophone_pairs(catalog.entities());
}

std::map<EntityId, std::size_t> occurrence_counts(const std::vector<AnnotatedText>& utterances,
                                                  const EntityCatalog& catalog) {
  std::map<EntityId, std::size_t> counts;
  for (const auto& e : catalog.entities()) counts[e.id] = 0;
  for (const auto& utt : utterances) {
    const auto chars = utf8_decode(utt.text);
    for (const auto& span : utt.ne_spans) {
      if (span.end > chars.size() || span.start >= span.end) {
        throw std::out_of_range("NE span out of range in \"" + utt.text + "\"");
      }
      const auto surface = utf8_encode(std::u32string_view(chars).substr(span.start, span.length()));
      if (const auto id = catalog.find(surface)) ++counts[*id];
    }
  }
  return counts;
}

}  // namespace dancer
