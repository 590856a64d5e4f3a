#include "aidetect/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <charconv>
#include <iostream>
#include <mutex>
#include <unordered_map>

namespace aidetect {

namespace {

bool is_space(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0x00A0: case 0x3000: case 0x2028: case 0x2029:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_terminal(char32_t c) {
    switch (c) {
        case U'.': case U'!': case U'?':
        case 0x3002: case 0xFF01: case 0xFF1F: case 0x2026:  // 。！？…
            return true;
        default:
            return false;
    }
}

bool is_closing(char32_t c) {
    switch (c) {
        case U'"': case U'\'': case U')': case U']':
        case 0x201D: case 0x2019: case 0x00BB: case 0x300D: case 0x300F: case 0xFF09:
            return true;
        default:
            return false;
    }
}

// One decoded code point and the byte range it occupies.
struct CodePoint {
    char32_t value;
    std::size_t begin;
    std::size_t end;
};

std::vector<CodePoint> decode_with_offsets(std::string_view s) {
    std::vector<CodePoint> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        char32_t cp = 0xFFFD;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 >> 5) == 0x6) {
            len = 2;
        } else if ((b0 >> 4) == 0xE) {
            len = 3;
        } else if ((b0 >> 3) == 0x1E) {
            len = 4;
        } else {
            len = 0;
        }
        if (len > 1) {
            bool ok = i + len <= s.size();
            char32_t v = b0 & (0xFF >> (len + 1));
            for (std::size_t k = 1; ok && k < len; ++k) {
                const auto b = static_cast<unsigned char>(s[i + k]);
                if ((b >> 6) != 0x2) {
                    ok = false;
                } else {
                    v = (v << 6) | (b & 0x3F);
                }
            }
            if (ok) {
                cp = v;
            } else {
                len = 1;
            }
        } else if (len == 0) {
            len = 1;
        }
        out.push_back({cp, i, i + len});
        i += len;
    }
    return out;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (const auto& cp : decode_with_offsets(text)) {
        if (is_space(cp.value)) {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.append(text.substr(cp.begin, cp.end - cp.begin));
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

std::string ascii_lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::atomic<std::size_t> g_warnings{0};
std::atomic<bool> g_quiet{false};
std::mutex g_log_mutex;

}  // namespace

std::string trim(std::string_view s) {
    const auto cps = decode_with_offsets(s);
    std::size_t first = 0;
    while (first < cps.size() && is_space(cps[first].value)) ++first;
    if (first == cps.size()) return {};
    std::size_t last = cps.size();
    while (last > first && is_space(cps[last - 1].value)) --last;
    return std::string(s.substr(cps[first].begin, cps[last - 1].end - cps[first].begin));
}

bool is_blank(std::string_view s) {
    for (const auto& cp : decode_with_offsets(s)) {
        if (!is_space(cp.value)) return false;
    }
    return true;
}

std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    for (const auto& cp : decode_with_offsets(s)) out.push_back(cp.value);
    return out;
}

bool is_char_counted_language(std::string_view language) {
    const auto lang = ascii_lower(std::string(language));
    return lang == "zh" || lang.rfind("zh-", 0) == 0 || lang.rfind("zh_", 0) == 0 ||
           lang == "chinese";
}

std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (const auto& cp : decode_with_offsets(text)) {
        const bool space = is_space(cp.value);
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::size_t char_count(std::string_view text) {
    std::size_t n = 0;
    for (const auto& cp : decode_with_offsets(text)) {
        if (!is_space(cp.value)) ++n;
    }
    return n;
}

std::size_t text_length(std::string_view text, std::string_view language) {
    return is_char_counted_language(language) ? char_count(text) : word_count(text);
}

std::size_t paragraph_count(std::string_view text) {
    std::size_t n = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        if (!is_blank(text.substr(start, nl - start))) ++n;
        start = nl + 1;
    }
    return n;
}

bool is_degenerate(std::string_view text, std::string_view language) {
    std::vector<std::string> tokens;
    if (is_char_counted_language(language)) {
        const auto cps = decode_with_offsets(text);
        for (const auto& cp : cps) {
            if (!is_space(cp.value)) {
                tokens.emplace_back(text.substr(cp.begin, cp.end - cp.begin));
            }
        }
    } else {
        for (auto& w : split_words(text)) tokens.push_back(ascii_lower(std::move(w)));
    }
    if (tokens.size() < kMinDegeneracyTokens) return false;
    std::unordered_map<std::string, std::size_t> counts;
    std::size_t best = 0;
    for (const auto& t : tokens) best = std::max(best, ++counts[t]);
    return 2 * best > tokens.size();
}

std::string truncate_at_sentence(std::string_view text, std::string_view language,
                                 std::size_t max_units) {
    if (text_length(text, language) <= max_units) return std::string(text);

    const bool by_char = is_char_counted_language(language);
    const auto cps = decode_with_offsets(text);

    // Walk units; remember the byte end of the last unit that closes a sentence.
    std::size_t units = 0;
    std::size_t best_end = 0;
    std::size_t i = 0;
    bool prev_boundary = false;
    while (i < cps.size()) {
        if (is_space(cps[i].value)) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        if (!by_char) {
            while (j < cps.size() && !is_space(cps[j].value)) ++j;
        }
        ++units;
        if (units > max_units) break;

        // Strip closing quotes/brackets to find the sentence-ending character.
        std::size_t k = j;
        while (k > i && is_closing(cps[k - 1].value)) --k;
        bool boundary = k > i && is_terminal(cps[k - 1].value);
        if (by_char && !boundary && k == i && prev_boundary) boundary = true;
        if (boundary) best_end = cps[j - 1].end;
        prev_boundary = boundary;
        i = j;
    }
    if (best_end == 0) return {};
    return trim(text.substr(0, best_end));
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), ptr);
}

void log_warning(const std::string& message) {
    ++g_warnings;
    if (g_quiet) return;
    std::lock_guard lock(g_log_mutex);
    std::cerr << "warning: " << message << '\n';
}

void log_info(const std::string& message) {
    if (g_quiet) return;
    std::lock_guard lock(g_log_mutex);
    std::cerr << message << '\n';
}

std::size_t warning_count() { return g_warnings.load(); }

void set_log_quiet(bool quiet) { g_quiet = quiet; }

}  // namespace aidetect
