#pragma once
// Language-aware text measurement helpers used by QA and truncation.
//
// Length is measured in words (whitespace-separated runs) except for Chinese,
// where it is measured in non-whitespace characters.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace aidetect {

std::string trim(std::string_view s);
bool is_blank(std::string_view s);

// Decodes UTF-8; invalid bytes decode to U+FFFD one byte at a time.
std::vector<char32_t> decode_utf8(std::string_view s);

bool is_char_counted_language(std::string_view language);

std::size_t word_count(std::string_view text);
std::size_t char_count(std::string_view text);  // non-whitespace code points
std::size_t text_length(std::string_view text, std::string_view language);

// Non-blank lines; blank-line and single-newline separated layouts agree.
std::size_t paragraph_count(std::string_view text);

// True when one token accounts for more than half of all positions. Outputs
// shorter than kMinDegeneracyTokens are never flagged.
inline constexpr std::size_t kMinDegeneracyTokens = 4;
bool is_degenerate(std::string_view text, std::string_view language);

// Cuts text at the last sentence boundary whose prefix length does not exceed
// max_units. Text already within the limit is returned unchanged. Returns an
// empty string when no boundary fits.
std::string truncate_at_sentence(std::string_view text, std::string_view language,
                                 std::size_t max_units);

std::string sha256_hex(std::string_view data);

// Shortest representation that round-trips through strtod.
std::string format_double(double v);

// Stderr logging with a process-wide warning counter (observable in tests).
void log_warning(const std::string& message);
void log_info(const std::string& message);
std::size_t warning_count();
void set_log_quiet(bool quiet);

}  // namespace aidetect
