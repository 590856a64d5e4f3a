#pragma once
// Shared fixtures for the unit and acceptance tests.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aidetect/corpus.hpp"
#include "aidetect/language_model.hpp"

namespace aidetect::testing {

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("aidetect-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

// n words "tok0 tok1 ..." with a period after every `sentence` words.
inline std::string words(std::size_t n, const std::string& stem = "word", std::size_t sentence = 10) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += stem + std::to_string(i);
        if ((i + 1) % sentence == 0 || i + 1 == n) out += '.';
    }
    return out;
}

inline Document make_doc(const std::string& id, std::optional<int> type, const std::string& text,
                         const std::string& domain = "essay",
                         std::optional<Split> split = std::nullopt) {
    Document d;
    d.id = id;
    d.domain = domain;
    d.language = "en";
    if (type) d.ptype = StoredType{participation_type_from_int(*type)};
    d.text = text;
    d.split = split;
    return d;
}

// Uniform conditional over a numbered vocabulary.
inline std::shared_ptr<FunctionModel> uniform_model(std::size_t vocab) {
    return std::make_shared<FunctionModel>(
        VocabTokenizer::numbered(vocab),
        [vocab](std::span<const TokenId>) { return std::vector<double>(vocab, 1.0 / vocab); });
}

// Conditional fixed to `probs` at every position.
inline std::shared_ptr<FunctionModel> fixed_model(std::vector<double> probs) {
    const auto v = probs.size();
    return std::make_shared<FunctionModel>(
        VocabTokenizer::numbered(v), [probs](std::span<const TokenId>) { return probs; });
}

}  // namespace aidetect::testing
