#include "aidetect/language_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "aidetect/errors.hpp"

namespace aidetect {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string_view> split_ws(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (i < text.size()) {
        while (i < text.size() && ws(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !ws(text[j])) ++j;
        if (j > i) out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

VocabTokenizer::VocabTokenizer(std::string identity, std::vector<std::string> vocab)
    : identity_(std::move(identity)), vocab_(std::move(vocab)) {
    if (vocab_.empty()) throw ConfigError("tokenizer vocabulary is empty");
    index_.reserve(vocab_.size());
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        index_.emplace_back(vocab_[i], static_cast<TokenId>(i));
    }
    std::sort(index_.begin(), index_.end());
}

VocabTokenizer VocabTokenizer::numbered(std::size_t size) {
    std::vector<std::string> vocab;
    vocab.reserve(size);
    for (std::size_t i = 0; i < size; ++i) vocab.push_back("w" + std::to_string(i));
    return VocabTokenizer("numbered-v" + std::to_string(size), std::move(vocab));
}

std::vector<TokenId> VocabTokenizer::encode(std::string_view text) const {
    auto lookup = [this](std::string_view w) -> std::optional<TokenId> {
        auto it = std::lower_bound(
            index_.begin(), index_.end(), w,
            [](const auto& entry, std::string_view key) { return entry.first < key; });
        if (it != index_.end() && it->first == w) return it->second;
        return std::nullopt;
    };
    std::vector<TokenId> ids;
    for (auto word : split_ws(text)) {
        auto id = lookup(word);
        if (!id) {
            // Retry without trailing punctuation so "w3." resolves to "w3".
            auto stripped = word;
            while (!stripped.empty() &&
                   std::string_view(".,;:!?\"')").find(stripped.back()) != std::string_view::npos) {
                stripped.remove_suffix(1);
            }
            if (!stripped.empty()) id = lookup(stripped);
        }
        ids.push_back(id ? *id : static_cast<TokenId>(fnv1a(word) % vocab_.size()));
    }
    return ids;
}

std::string VocabTokenizer::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out.push_back(' ');
        out += vocab_.at(ids[i]);
    }
    return out;
}

FunctionModel::FunctionModel(VocabTokenizer tokenizer, Conditional conditional,
                             std::size_t context_limit)
    : tokenizer_(std::move(tokenizer)),
      conditional_(std::move(conditional)),
      context_limit_(context_limit) {}

std::vector<double> FunctionModel::next_token_probs(std::span<const TokenId> prefix) const {
    auto probs = conditional_(prefix);
    if (probs.size() != tokenizer_.size()) {
        throw ConfigError("conditional size does not match vocabulary");
    }
    return probs;
}

SyntheticBigramModel::SyntheticBigramModel(std::size_t vocab, std::uint64_t seed,
                                           double sharpness, std::size_t context_limit)
    : tokenizer_(VocabTokenizer::numbered(vocab)),
      logits_(vocab * vocab),
      context_limit_(context_limit) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sharpness);
    for (auto& l : logits_) l = normal(rng);
}

SyntheticBigramModel::SyntheticBigramModel(VocabTokenizer tokenizer, std::vector<double> logits,
                                           std::size_t context_limit)
    : tokenizer_(std::move(tokenizer)), logits_(std::move(logits)), context_limit_(context_limit) {}

SyntheticBigramModel SyntheticBigramModel::perturbed(std::uint64_t seed, double noise) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, noise);
    auto logits = logits_;
    for (auto& l : logits) l += normal(rng);
    return SyntheticBigramModel(tokenizer_, std::move(logits), context_limit_);
}

std::vector<double> SyntheticBigramModel::next_token_probs(
    std::span<const TokenId> prefix) const {
    if (prefix.empty()) throw InputError("bigram model needs a non-empty prefix");
    const std::size_t v = tokenizer_.size();
    const std::size_t prev = prefix.back();
    return softmax(std::span<const double>(logits_).subspan(prev * v, v));
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - mx) / temperature);
        sum += out[i];
    }
    for (auto& p : out) p /= sum;
    return out;
}

std::vector<double> adjust_distribution(std::span<const double> probs, double temperature,
                                        double top_p) {
    std::vector<double> out(probs.size(), 0.0);
    if (probs.empty()) return out;
    if (temperature <= 0.0) {
        const auto best = std::max_element(probs.begin(), probs.end()) - probs.begin();
        out[static_cast<std::size_t>(best)] = 1.0;
        return out;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        out[i] = probs[i] > 0.0 ? std::pow(probs[i], 1.0 / temperature) : 0.0;
        sum += out[i];
    }
    for (auto& p : out) p /= sum;
    if (top_p < 1.0) {
        std::vector<std::size_t> order(out.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return out[a] > out[b]; });
        double mass = 0.0;
        std::size_t keep = 0;
        while (keep < order.size() && mass < top_p) mass += out[order[keep++]];
        std::vector<double> kept(out.size(), 0.0);
        for (std::size_t k = 0; k < keep; ++k) kept[order[k]] = out[order[k]] / mass;
        out = std::move(kept);
    }
    return out;
}

TokenId sample_token(std::span<const double> probs, std::mt19937_64& rng) {
    // 53-bit uniform in [0, 1) so the draw does not depend on library distributions.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double acc = 0.0;
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last_nonzero = i;
        if (u < acc) return static_cast<TokenId>(i);
    }
    return static_cast<TokenId>(last_nonzero);
}

std::vector<TokenId> sample_continuation(const LanguageModel& model,
                                         std::vector<TokenId> prefix, std::size_t length,
                                         double temperature, double top_p,
                                         std::mt19937_64& rng) {
    if (prefix.empty()) throw InputError("sampling needs a non-empty prefix");
    prefix.reserve(prefix.size() + length);
    for (std::size_t i = 0; i < length; ++i) {
        const auto probs = model.next_token_probs(prefix);
        const auto adjusted = adjust_distribution(probs, temperature, top_p);
        prefix.push_back(sample_token(adjusted, rng));
    }
    return prefix;
}

std::vector<TokenId> greedy_continuation(const LanguageModel& model,
                                         std::vector<TokenId> prefix, std::size_t length) {
    if (prefix.empty()) throw InputError("greedy decoding needs a non-empty prefix");
    prefix.reserve(prefix.size() + length);
    for (std::size_t i = 0; i < length; ++i) {
        const auto probs = model.next_token_probs(prefix);
        const auto best = std::max_element(probs.begin(), probs.end()) - probs.begin();
        prefix.push_back(static_cast<TokenId>(best));
    }
    return prefix;
}

}  // namespace aidetect
