#pragma once
// In-process categorical language models used behind the stub provider.
// They expose full next-token distributions so that scoring statistics can be
// computed exactly; real deployments reach remote models over the wire instead.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aidetect/provider.hpp"

namespace aidetect {

// Whitespace tokenizer over a fixed vocabulary. Words outside the vocabulary
// map to a stable hashed id so arbitrary text can be scored.
class VocabTokenizer {
public:
    VocabTokenizer(std::string identity, std::vector<std::string> vocab);

    // Vocabulary "w0 ... w{size-1}".
    static VocabTokenizer numbered(std::size_t size);

    const std::string& identity() const { return identity_; }
    std::size_t size() const { return vocab_.size(); }
    std::vector<TokenId> encode(std::string_view text) const;
    std::string decode(std::span<const TokenId> ids) const;
    const std::string& token_text(TokenId id) const { return vocab_.at(id); }

private:
    std::string identity_;
    std::vector<std::string> vocab_;
    std::vector<std::pair<std::string, TokenId>> index_;  // sorted by text
};

class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    virtual const VocabTokenizer& tokenizer() const = 0;
    virtual std::size_t context_limit() const = 0;

    // Full next-token distribution after a non-empty prefix.
    virtual std::vector<double> next_token_probs(std::span<const TokenId> prefix) const = 0;
};

// Model whose conditional is an arbitrary function of the prefix.
class FunctionModel final : public LanguageModel {
public:
    using Conditional = std::function<std::vector<double>(std::span<const TokenId>)>;

    FunctionModel(VocabTokenizer tokenizer, Conditional conditional,
                  std::size_t context_limit = 4096);

    const VocabTokenizer& tokenizer() const override { return tokenizer_; }
    std::size_t context_limit() const override { return context_limit_; }
    std::vector<double> next_token_probs(std::span<const TokenId> prefix) const override;

private:
    VocabTokenizer tokenizer_;
    Conditional conditional_;
    std::size_t context_limit_;
};

// Seeded bigram model: the conditional depends on the previous token through
// a table of Gaussian logits, logits[prev][next] ~ N(0, sharpness^2).
class SyntheticBigramModel final : public LanguageModel {
public:
    SyntheticBigramModel(std::size_t vocab, std::uint64_t seed, double sharpness = 2.0,
                         std::size_t context_limit = 4096);

    // Same vocabulary with N(0, noise^2) added to every logit.
    SyntheticBigramModel perturbed(std::uint64_t seed, double noise) const;

    const VocabTokenizer& tokenizer() const override { return tokenizer_; }
    std::size_t context_limit() const override { return context_limit_; }
    std::vector<double> next_token_probs(std::span<const TokenId> prefix) const override;

private:
    SyntheticBigramModel(VocabTokenizer tokenizer, std::vector<double> logits,
                         std::size_t context_limit);

    VocabTokenizer tokenizer_;
    std::vector<double> logits_;  // vocab x vocab, row = previous token
    std::size_t context_limit_;
};

std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

// Applies temperature and nucleus truncation to a probability vector and
// returns the renormalized distribution. temperature == 0 selects the argmax
// (lowest id on ties).
std::vector<double> adjust_distribution(std::span<const double> probs, double temperature,
                                        double top_p);

TokenId sample_token(std::span<const double> probs, std::mt19937_64& rng);

// Continues `prefix` by `length` tokens drawn from the model.
std::vector<TokenId> sample_continuation(const LanguageModel& model,
                                         std::vector<TokenId> prefix, std::size_t length,
                                         double temperature, double top_p,
                                         std::mt19937_64& rng);

std::vector<TokenId> greedy_continuation(const LanguageModel& model,
                                         std::vector<TokenId> prefix, std::size_t length);

}  // namespace aidetect
