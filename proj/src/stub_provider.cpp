#include "aidetect/stub_provider.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "aidetect/errors.hpp"
#include "aidetect/text.hpp"

namespace aidetect {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0;
    for (unsigned char c : s) h = mix(h ^ c);
    return h;
}

}  // namespace

Generator echo_generator(std::string text) {
    return [text = std::move(text)](const ProviderConfig&, const GenRequest&) { return text; };
}

Generator scripted_generator(std::vector<std::string> outputs) {
    if (outputs.empty()) throw ConfigError("scripted generator needs at least one output");
    auto state = std::make_shared<std::pair<std::mutex, std::size_t>>();
    return [outputs = std::move(outputs), state](const ProviderConfig&, const GenRequest&) {
        std::lock_guard lock(state->first);
        const auto i = std::min(state->second++, outputs.size() - 1);
        return outputs[i];
    };
}

std::string prompt_payload(std::string_view prompt) {
    const auto nl = prompt.find('\n');
    if (nl == std::string_view::npos) return std::string(prompt);
    auto body = prompt.substr(nl + 1);
    const auto ref = body.find("\n\n# Reference Text:");
    if (ref != std::string_view::npos) body = body.substr(0, ref);
    return trim(body);
}

Generator mirror_generator() {
    return [](const ProviderConfig&, const GenRequest& req) { return prompt_payload(req.prompt); };
}

Generator lm_generator(std::shared_ptr<const LanguageModel> model) {
    return [model = std::move(model)](const ProviderConfig&, const GenRequest& req) {
        static const std::regex kWords(R"(in (\d+) words)");
        std::size_t length = 0;
        std::smatch m;
        if (std::regex_search(req.prompt, m, kWords)) {
            length = std::stoul(m[1].str());
        } else {
            length = word_count(prompt_payload(req.prompt));
        }
        length = std::clamp<std::size_t>(length, 5, req.max_length);

        std::mt19937_64 rng(mix(req.seed.value_or(0)) ^ hash_string(req.prompt));
        const auto& tok = model->tokenizer();
        const TokenId start = static_cast<TokenId>(rng() % tok.size());
        const auto ids = sample_continuation(*model, {start}, length, req.temperature,
                                             req.top_p, rng);
        std::string out;
        for (std::size_t i = 1; i < ids.size(); ++i) {
            if (i > 1) out.push_back(' ');
            out += tok.token_text(ids[i]);
            if (i % 12 == 0 || i + 1 == ids.size()) out.push_back('.');
        }
        return out;
    };
}

StubProvider::StubProvider(Generator generator, std::size_t max_generation_length)
    : generator_(std::move(generator)), max_generation_length_(max_generation_length) {}

void StubProvider::add_model(const std::string& id, std::shared_ptr<const LanguageModel> model) {
    models_[id] = std::move(model);
}

const LanguageModel& StubProvider::model(const std::string& id) const {
    auto it = models_.find(id);
    if (it == models_.end()) throw ConfigError("unknown model '" + id + "'");
    return *it->second;
}

std::vector<PositionStats> StubProvider::score_text(const ProviderConfig& cfg,
                                                    std::string_view text) {
    ++score_calls_;
    if (is_blank(text)) throw InputError("cannot score empty text");
    const auto& scorer = model(cfg.scoring_model);
    const LanguageModel* sampler = nullptr;
    if (cfg.sampling_model) {
        sampler = &model(*cfg.sampling_model);
        if (sampler->tokenizer().identity() != scorer.tokenizer().identity()) {
            throw ConfigError("tokenizer mismatch: scoring model '" + cfg.scoring_model +
                              "' uses " + scorer.tokenizer().identity() +
                              ", sampling model '" + *cfg.sampling_model + "' uses " +
                              sampler->tokenizer().identity());
        }
    }
    const auto ids = scorer.tokenizer().encode(text);
    if (ids.size() > scorer.context_limit()) {
        throw TruncationError(ids.size(), scorer.context_limit());
    }
    if (ids.size() < 2) throw InputError("text must contain at least two tokens to be scored");

    std::vector<PositionStats> out;
    out.reserve(ids.size() - 1);
    const std::span<const TokenId> all(ids);
    for (std::size_t i = 1; i < ids.size(); ++i) {
        const auto prefix = all.first(i);
        const auto p = scorer.next_token_probs(prefix);
        std::vector<double> q;
        if (sampler) q = sampler->next_token_probs(prefix);
        auto stats = position_stats(p, q, ids[i]);
        stats.token_text = scorer.tokenizer().token_text(ids[i]);
        out.push_back(std::move(stats));
    }
    return out;
}

GenResult StubProvider::generate(const ProviderConfig& cfg, const GenRequest& req) {
    ++generate_calls_;
    validate_request(req);
    {
        std::lock_guard lock(prompts_mutex_);
        prompts_.push_back(req.prompt);
    }
    if (req.max_length > max_generation_length_) {
        throw GenerationError("max_length " + std::to_string(req.max_length) +
                              " exceeds the supported maximum of " +
                              std::to_string(max_generation_length_));
    }
    auto text = generator_(cfg, req);
    if (is_blank(text)) throw GenerationError("empty completion");

    GenResult result{std::move(text), "stop"};
    if (word_count(result.text) > req.max_length) {
        // Keep the first max_length words.
        std::size_t words = 0;
        bool in_word = false;
        for (std::size_t i = 0; i < result.text.size(); ++i) {
            const bool ws = std::isspace(static_cast<unsigned char>(result.text[i])) != 0;
            if (!ws && !in_word && ++words > req.max_length) {
                result.text = trim(std::string_view(result.text).substr(0, i));
                break;
            }
            in_word = !ws;
        }
        result.finish_reason = "length";
    }
    return result;
}

std::vector<std::string> StubProvider::prompts() const {
    std::lock_guard lock(prompts_mutex_);
    return prompts_;
}

}  // namespace aidetect
