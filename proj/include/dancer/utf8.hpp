#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dancer {

class Utf8Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Strict decoder: rejects overlongs, surrogates and truncated sequences.
std::u32string utf8_decode(std::string_view bytes);
std::string utf8_encode(std::u32string_view text);
std::string utf8_encode(char32_t cp);

bool is_valid_utf8(std::string_view bytes) noexcept;

inline std::size_t char_count(std::string_view bytes) { return utf8_decode(bytes).size(); }

bool is_space(char32_t cp) noexcept;

}  // namespace dancer
