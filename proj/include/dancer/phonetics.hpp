#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dancer {

enum class ToneMode { kWithTone, kToneless };

class LexiconError : public std::runtime_error {
 public:
  LexiconError(std::size_t line, const std::string& what)
      : std::runtime_error("lexicon line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Syllable-token sequence; the unit of every edit-distance computation.
struct PhoneticSequence {
  std::vector<std::string> syllables;

  std::size_t size() const noexcept { return syllables.size(); }
  bool empty() const noexcept { return syllables.empty(); }
  bool operator==(const PhoneticSequence&) const = default;
};

// Character -> ordered pronunciations. The first pronunciation of a character
// is its default; alternates are kept but never expanded.
class PronunciationLexicon {
 public:
  PronunciationLexicon() = default;
  explicit PronunciationLexicon(ToneMode mode) : tone_mode_(mode) {}

  void add(char32_t ch, std::string syllable);

  const std::vector<std::string>* lookup(char32_t ch) const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  ToneMode tone_mode() const noexcept { return tone_mode_; }
  void set_tone_mode(ToneMode mode) noexcept { tone_mode_ = mode; }

  const std::map<char32_t, std::vector<std::string>>& entries() const noexcept { return entries_; }

 private:
  std::map<char32_t, std::vector<std::string>> entries_;
  ToneMode tone_mode_ = ToneMode::kWithTone;
};

// Parses `char<TAB>syl1 syl2 ...` lines. `#` at column 0 starts a comment and
// blank lines are skipped. Repeated characters append alternates in order.
PronunciationLexicon load_lexicon(std::istream& in, ToneMode mode = ToneMode::kWithTone);
PronunciationLexicon load_lexicon_file(const std::string& path, ToneMode mode = ToneMode::kWithTone);

// Reserved token for characters the lexicon does not cover.
std::string unknown_token(char32_t ch);

PhoneticSequence phoneticize(std::u32string_view text, const PronunciationLexicon& lex);
PhoneticSequence phoneticize(std::string_view utf8_text, const PronunciationLexicon& lex);

// Unit-cost Levenshtein distance over syllable tokens.
std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b);
inline std::size_t edit_distance(const PhoneticSequence& a, const PhoneticSequence& b) {
  return edit_distance(std::span<const std::string>(a.syllables), std::span<const std::string>(b.syllables));
}

// edit_distance / max(|a|, |b|); 0 for two empty sequences.
double normalized_distance(const PhoneticSequence& a, const PhoneticSequence& b);

// 1 - normalized_distance. Exactly 1 iff the sequences are equal.
double similarity(const PhoneticSequence& a, const PhoneticSequence& b);

}  // namespace dancer
