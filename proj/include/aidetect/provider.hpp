#pragma once
// Uniform access to language models: per-token scoring statistics and text
// generation. Detectors and the decoupler only ever talk to `Provider`.

#include <atomic>
#include <cstdint>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aidetect {

using TokenId = std::uint32_t;

struct ProviderConfig {
    std::string scoring_model;
    std::optional<std::string> sampling_model;  // needed by curvature/Binoculars
    std::string endpoint;                       // e.g. http://127.0.0.1:8080/v1/llm
    std::string credentials_env;                // env var holding the API key
    double request_timeout = 30.0;              // seconds
    int max_retries = 3;
};

// Scoring record for one token position (every token after the first).
// Moments are taken over the sampling model's conditional at that position
// and are absent when no sampling model is configured.
struct PositionStats {
    TokenId token_id = 0;
    std::string token_text;
    double logprob = 0.0;       // natural log, <= 0
    std::int64_t rank = 1;      // 1 = most probable under the scoring model
    std::optional<double> sampler_mean_logprob;
    std::optional<double> sampler_var_logprob;
    std::optional<double> xent_term;

    bool has_moments() const {
        return sampler_mean_logprob && sampler_var_logprob && xent_term;
    }
    bool operator==(const PositionStats&) const = default;
};

// Computes the record for an observed token given the full scoring
// distribution and, optionally, the sampling distribution (same vocabulary).
// rank = 1 + number of tokens strictly more probable than the observed one.
PositionStats position_stats(std::span<const double> scoring_probs,
                             std::span<const double> sampling_probs, TokenId observed);

struct GenRequest {
    std::string prompt;
    double temperature = 1.0;
    double top_p = 1.0;
    double frequency_penalty = 0.0;
    double presence_penalty = 0.0;
    std::size_t max_length = 2048;        // tokens
    std::optional<std::uint64_t> seed;
    std::optional<std::string> model;     // defaults to cfg.scoring_model

    bool operator==(const GenRequest&) const = default;
};

// Throws InputError when a parameter lies outside the supported ranges:
// temperature in [0, 2], top_p in (0, 1], penalties in [0, 1], max_length >= 1.
void validate_request(const GenRequest& req);

struct GenResult {
    std::string text;
    std::string finish_reason;  // "stop" | "length"
    bool operator==(const GenResult&) const = default;
};

class Provider {
public:
    virtual ~Provider() = default;

    // One record per token position after the first. Deterministic for a fixed
    // (cfg, text).
    virtual std::vector<PositionStats> score_text(const ProviderConfig& cfg,
                                                  std::string_view text) = 0;

    virtual GenResult generate(const ProviderConfig& cfg, const GenRequest& req) = 0;
};

// Model that actually serves a generation request.
inline const std::string& generation_model(const ProviderConfig& cfg, const GenRequest& req) {
    return req.model ? *req.model : cfg.scoring_model;
}

// Caps the number of in-flight calls to the wrapped provider.
class LimitedProvider final : public Provider {
public:
    LimitedProvider(Provider& inner, std::ptrdiff_t max_in_flight);

    std::vector<PositionStats> score_text(const ProviderConfig& cfg,
                                          std::string_view text) override;
    GenResult generate(const ProviderConfig& cfg, const GenRequest& req) override;

    std::size_t peak_in_flight() const { return peak_.load(); }

private:
    struct Slot;
    Provider& inner_;
    std::counting_semaphore<> slots_;
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> peak_{0};
};

}  // namespace aidetect
