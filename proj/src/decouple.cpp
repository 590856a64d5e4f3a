#include "aidetect/decouple.hpp"

#include <sstream>

#include "aidetect/errors.hpp"
#include "aidetect/text.hpp"

namespace aidetect {

std::string_view to_string(DecodeMode m) {
    return m == DecodeMode::Greedy ? "greedy" : "random_sampling";
}

DecodeMode parse_decode_mode(std::string_view s) {
    if (s == "greedy") return DecodeMode::Greedy;
    if (s == "random_sampling") return DecodeMode::RandomSampling;
    throw UsageError("unknown decode mode '" + std::string(s) +
                     "' (expected random_sampling|greedy)");
}

std::string_view prompt_key(Feature f) {
    switch (f) {
        case Feature::ContentOutline: return "c1";
        case Feature::ContentNeutral: return "c2";
        case Feature::ExpressionList: return "e1";
        case Feature::ExpressionNeutral: return "e2";
    }
    return "?";
}

QaPolicy qa_policy(Feature f) {
    switch (f) {
        case Feature::ContentNeutral: return kContentNeutralPolicy;
        case Feature::ExpressionNeutral: return kRewritePolicy;
        case Feature::ContentOutline:
        case Feature::ExpressionList: return kExtractionPolicy;
    }
    return kRewritePolicy;
}

std::optional<std::string> qa_rejection(std::string_view output, std::string_view source,
                                        std::string_view language, const QaPolicy& policy) {
    if (is_blank(output)) return "empty output";
    const auto src_len = text_length(source, language);
    const auto out_len = text_length(output, language);
    if (src_len > 0) {
        const double ratio = static_cast<double>(out_len) / static_cast<double>(src_len);
        if (ratio > policy.max_ratio || ratio < policy.min_ratio) {
            std::ostringstream msg;
            msg << "length ratio " << ratio << " outside [" << policy.min_ratio << ", "
                << policy.max_ratio << "] (" << out_len << " vs " << src_len << ")";
            return msg.str();
        }
    }
    if (policy.reject_degenerate && is_degenerate(output, language)) {
        return "degenerate repetition";
    }
    return std::nullopt;
}

std::string qa_regenerate(Provider& provider, const ProviderConfig& cfg, const GenRequest& base,
                          std::string_view source, std::string_view language,
                          const QaPolicy& policy, std::size_t max_attempts) {
    if (max_attempts < 1) throw InputError("max_attempts must be at least 1");
    std::optional<std::string> last_output;
    std::string last_reason;
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        GenRequest req = base;
        req.seed = base.seed.value_or(0) + attempt;
        std::string out;
        try {
            out = provider.generate(cfg, req).text;
        } catch (const GenerationError& e) {
            last_reason = e.what();
            continue;
        }
        auto reason = qa_rejection(out, source, language, policy);
        if (!reason) return out;
        last_reason = *reason;
        last_output = std::move(out);
    }
    if (!last_output) {
        throw ExtractionError("no usable completion after " + std::to_string(max_attempts) +
                              " attempts: " + last_reason);
    }
    throw QaError("output rejected after " + std::to_string(max_attempts) +
                      " attempts: " + last_reason,
                  std::move(*last_output));
}

Decoupler::Decoupler(Provider& provider, ProviderConfig cfg, PromptRegistry prompts,
                     DecoupleOptions options)
    : provider_(provider),
      cfg_(std::move(cfg)),
      prompts_(std::move(prompts)),
      options_(std::move(options)) {
    for (auto f : {Feature::ContentOutline, Feature::ContentNeutral, Feature::ExpressionList,
                   Feature::ExpressionNeutral}) {
        prompts_.get(prompt_key(f));
    }
}

const std::string& Decoupler::extractor_model() const {
    return options_.extractor_model.empty() ? cfg_.scoring_model : options_.extractor_model;
}

std::string Decoupler::extract(Feature f, std::string_view text, std::string_view language) {
    if (is_blank(text)) throw InputError("cannot decouple empty text");
    GenRequest req;
    req.prompt = prompts_.render(prompt_key(f), {{"text", std::string(text)}});
    req.model = extractor_model();
    req.max_length = options_.max_length;
    req.seed = options_.seed;
    if (options_.mode == DecodeMode::Greedy) {
        req.temperature = 0.0;
        req.top_p = 1.0;
    } else {
        req.temperature = options_.temperature;
        req.top_p = options_.top_p;
    }
    return qa_regenerate(provider_, cfg_, req, text, language, qa_policy(f),
                         options_.max_attempts);
}

std::string Decoupler::extract_content_outline(std::string_view text, std::string_view language) {
    return extract(Feature::ContentOutline, text, language);
}

std::string Decoupler::neutralize_content(std::string_view text, std::string_view language) {
    return extract(Feature::ContentNeutral, text, language);
}

std::string Decoupler::extract_expressions(std::string_view text, std::string_view language) {
    return extract(Feature::ExpressionList, text, language);
}

std::string Decoupler::neutralize_expression(std::string_view text, std::string_view language) {
    return extract(Feature::ExpressionNeutral, text, language);
}

DecoupledText Decoupler::decouple(std::string_view text, std::string_view language) {
    DecoupledText d;
    d.original = std::string(text);
    d.content_outline = extract_content_outline(text, language);
    d.content_neutral = neutralize_content(text, language);
    d.expression_list = extract_expressions(text, language);
    d.expression_neutral = neutralize_expression(text, language);
    d.extractor_model = extractor_model();
    d.decode_mode = options_.mode;
    return d;
}

}  // namespace aidetect
