#pragma once
// Prompt-based decoupling of a text T into content and expression features:
//   C1 content outline        (extraction)
//   C2 neutralized content    (simplified restatement)
//   E1 expression list        (extraction)
//   E2 neutralized expression (same style, generic topic)
// Generated features go through a length/degeneracy QA loop with regeneration.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "aidetect/prompts.hpp"
#include "aidetect/provider.hpp"

namespace aidetect {

enum class DecodeMode : std::uint8_t { RandomSampling, Greedy };
std::string_view to_string(DecodeMode m);
DecodeMode parse_decode_mode(std::string_view s);  // random_sampling | greedy

enum class Feature : std::uint8_t { ContentOutline, ContentNeutral, ExpressionList, ExpressionNeutral };
std::string_view prompt_key(Feature f);  // c1 | c2 | e1 | e2

struct DecoupledText {
    std::string original;            // T
    std::string content_outline;     // C1
    std::string content_neutral;     // C2
    std::string expression_list;     // E1
    std::string expression_neutral;  // E2
    std::string extractor_model;
    DecodeMode decode_mode = DecodeMode::RandomSampling;

    bool operator==(const DecoupledText&) const = default;
};

// Acceptance window for a regenerated output, as a ratio of output length to
// source length (words; characters for Chinese).
struct QaPolicy {
    double min_ratio = 0.5;
    double max_ratio = 2.0;
    bool reject_degenerate = true;
};

inline constexpr QaPolicy kRewritePolicy{0.5, 2.0, true};
// Content summaries are legitimately much shorter than the source.
inline constexpr QaPolicy kContentNeutralPolicy{0.2, 2.0, true};
// Outlines and expression lists are only checked for emptiness/degeneracy.
inline constexpr QaPolicy kExtractionPolicy{0.0, std::numeric_limits<double>::infinity(), true};

QaPolicy qa_policy(Feature f);

// Why a candidate output was rejected, or nullopt when it is acceptable.
std::optional<std::string> qa_rejection(std::string_view output, std::string_view source,
                                        std::string_view language, const QaPolicy& policy);

// Issues `base` up to max_attempts times (attempt k uses seed base.seed + k)
// and returns the first output accepted by `policy`. Throws QaError carrying
// the last output when every attempt is rejected, or ExtractionError when no
// attempt produced any text.
std::string qa_regenerate(Provider& provider, const ProviderConfig& cfg, const GenRequest& base,
                          std::string_view source, std::string_view language,
                          const QaPolicy& policy, std::size_t max_attempts);

struct DecoupleOptions {
    std::string extractor_model;  // empty => cfg.scoring_model
    DecodeMode mode = DecodeMode::RandomSampling;
    double temperature = 1.0;     // used in random-sampling mode
    double top_p = 1.0;
    std::size_t max_attempts = 3;
    std::size_t max_length = 2048;
    std::uint64_t seed = 0;
};

class Decoupler {
public:
    Decoupler(Provider& provider, ProviderConfig cfg, PromptRegistry prompts,
              DecoupleOptions options = {});

    std::string extract_content_outline(std::string_view text, std::string_view language = "en");
    std::string neutralize_content(std::string_view text, std::string_view language = "en");
    std::string extract_expressions(std::string_view text, std::string_view language = "en");
    std::string neutralize_expression(std::string_view text, std::string_view language = "en");

    std::string extract(Feature f, std::string_view text, std::string_view language = "en");

    // All four features.
    DecoupledText decouple(std::string_view text, std::string_view language = "en");

    const DecoupleOptions& options() const { return options_; }
    const std::string& extractor_model() const;

private:
    Provider& provider_;
    ProviderConfig cfg_;
    PromptRegistry prompts_;
    DecoupleOptions options_;
};

}  // namespace aidetect
