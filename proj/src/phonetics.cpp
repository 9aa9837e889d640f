#include "dancer/phonetics.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dancer/utf8.hpp"

namespace dancer {

namespace {

std::string strip_tone(const std::string& syllable) {
  if (syllable.size() > 1 && std::isdigit(static_cast<unsigned char>(syllable.back()))) {
    return syllable.substr(0, syllable.size() - 1);
  }
  return syllable;
}

}  // namespace

void PronunciationLexicon::add(char32_t ch, std::string syllable) {
  entries_[ch].push_back(std::move(syllable));
}

const std::vector<std::string>* PronunciationLexicon::lookup(char32_t ch) const {
  auto it = entries_.find(ch);
  return it == entries_.end() ? nullptr : &it->second;
}

PronunciationLexicon load_lexicon(std::istream& in, ToneMode mode) {
  PronunciationLexicon lex(mode);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw LexiconError(line_no, "missing tab separator");
    std::u32string key;
    try {
      key = utf8_decode(std::string_view(line).substr(0, tab));
    } catch (const Utf8Error& e) {
      throw LexiconError(line_no, e.what());
    }
    if (key.size() != 1) throw LexiconError(line_no, "key must be exactly one character");

    std::istringstream syllables(line.substr(tab + 1));
    std::string syl;
    std::size_t added = 0;
    while (syllables >> syl) {
      lex.add(key.front(), syl);
      ++added;
    }
    if (added == 0) throw LexiconError(line_no, "empty pronunciation");
  }
  return lex;
}

PronunciationLexicon load_lexicon_file(const std::string& path, ToneMode mode) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon: " + path);
  return load_lexicon(in, mode);
}

std::string unknown_token(char32_t ch) { return "<unk:" + utf8_encode(ch) + ">"; }

PhoneticSequence phoneticize(std::u32string_view text, const PronunciationLexicon& lex) {
  PhoneticSequence out;
  out.syllables.reserve(text.size());
  for (char32_t ch : text) {
    const auto* prons = lex.lookup(ch);
    if (prons == nullptr) {
      out.syllables.push_back(unknown_token(ch));
    } else if (lex.tone_mode() == ToneMode::kToneless) {
      out.syllables.push_back(strip_tone(prons->front()));
    } else {
      out.syllables.push_back(prons->front());
    }
  }
  return out;
}

PhoneticSequence phoneticize(std::string_view utf8_text, const PronunciationLexicon& lex) {
  return phoneticize(std::u32string_view(utf8_decode(utf8_text)), lex);
}

std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[b.size()];
}

double normalized_distance(const PhoneticSequence& a, const PhoneticSequence& b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

double similarity(const PhoneticSequence& a, const PhoneticSequence& b) {
  return 1.0 - normalized_distance(a, b);
}

}  // namespace dancer
