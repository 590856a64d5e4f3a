#pragma once
// Deterministic in-process provider backed by LanguageModel instances and a
// pluggable text generator. Used by tests, the acceptance suite and the CLI's
// offline mode.

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "aidetect/language_model.hpp"
#include "aidetect/provider.hpp"

namespace aidetect {

using Generator = std::function<std::string(const ProviderConfig&, const GenRequest&)>;

// Always returns `text`.
Generator echo_generator(std::string text);

// Returns outputs[i] on the i-th call, then repeats the last one.
Generator scripted_generator(std::vector<std::string> outputs);

// Returns the text the prompt operates on (see prompt_payload), so every
// rewrite is the identity.
Generator mirror_generator();

// Samples from `model` with the request's temperature/top_p and seed. Length
// is the "in N words" figure when the prompt carries one, otherwise the
// payload's word count. Every 12th word ends a sentence.
Generator lm_generator(std::shared_ptr<const LanguageModel> model);

// The text a template was applied to: everything after the first line break,
// cut before a trailing "# Reference Text:" block.
std::string prompt_payload(std::string_view prompt);

class StubProvider final : public Provider {
public:
    explicit StubProvider(Generator generator = echo_generator("OK"),
                          std::size_t max_generation_length = 8192);

    void add_model(const std::string& id, std::shared_ptr<const LanguageModel> model);

    std::vector<PositionStats> score_text(const ProviderConfig& cfg,
                                          std::string_view text) override;
    GenResult generate(const ProviderConfig& cfg, const GenRequest& req) override;

    std::size_t score_calls() const { return score_calls_.load(); }
    std::size_t generate_calls() const { return generate_calls_.load(); }
    std::vector<std::string> prompts() const;  // every prompt seen, in call order

private:
    const LanguageModel& model(const std::string& id) const;

    Generator generator_;
    std::size_t max_generation_length_;
    std::map<std::string, std::shared_ptr<const LanguageModel>> models_;
    std::atomic<std::size_t> score_calls_{0};
    std::atomic<std::size_t> generate_calls_{0};
    mutable std::mutex prompts_mutex_;
    std::vector<std::string> prompts_;
};

}  // namespace aidetect
