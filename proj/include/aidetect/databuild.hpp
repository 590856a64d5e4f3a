#pragma once
// Four-type benchmark construction from human-written source items.
//
// Each human item yields one group: the original (type 0), a refined copy
// (type 1), a generated text on the same title or prompt (type 3) and a
// humanized copy of that generation (type 2). Groups are length-aligned,
// split into dev/test as a unit and optionally checkpointed.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aidetect/corpus.hpp"
#include "aidetect/prompts.hpp"
#include "aidetect/provider.hpp"

namespace aidetect {

enum class SourceField : std::uint8_t { Title, Prompt };
std::string_view to_string(SourceField f);
SourceField parse_source_field(std::string_view s);  // title | prompt

inline const std::vector<std::string> kDefaultModelPool = {
    "gpt-3.5-turbo",  "gpt-4o",          "claude-3.5-sonnet",
    "gemini-1.5-pro", "llama-3.3-70b-instruct", "qwen-2.5-72b-instruct",
};

inline constexpr std::array<double, 3> kTemperatureGrid = {0.8, 1.0, 1.2};
inline constexpr std::array<double, 2> kTopPGrid = {0.96, 1.0};
inline constexpr std::array<double, 2> kPenaltyGrid = {0.0, 1.0};

inline constexpr std::size_t kMinAlignedLength = 30;

struct BuildSpec {
    std::string domain;
    std::string language = "en";
    std::string prompt_template_key = "generate.essay";
    SourceField field = SourceField::Title;
    std::size_t n_per_type = 1;
    std::uint64_t seed = 0;
    std::vector<std::string> model_pool = kDefaultModelPool;
    std::size_t max_attempts = 3;
    std::size_t max_length = 2048;
    std::size_t concurrency = 1;
    std::optional<std::filesystem::path> checkpoint_dir;
};

// Throws ValidationError when the spec cannot be built against `prompts`.
void validate_spec(const BuildSpec& spec, const PromptRegistry& prompts);

struct SampledParams {
    std::string source_model;
    double temperature = 1.0;
    double top_p = 1.0;
    double frequency_penalty = 0.0;
    double presence_penalty = 0.0;
    std::uint64_t request_seed = 0;
};

// Decoding parameters drawn from the benchmark grid. Streams are keyed by
// (seed, key), so every group draws the same values regardless of the order
// in which groups are processed.
class ParameterSampler {
public:
    ParameterSampler(std::uint64_t seed, std::string_view key);
    SampledParams draw(const std::vector<std::string>& model_pool);
    bool coin();  // fair coin used for mode choices
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t state_;
    std::uint64_t next();
};

// Shared context for the per-document operations.
struct BuildContext {
    Provider& provider;
    ProviderConfig cfg;
    const PromptRegistry& prompts;
    std::size_t max_attempts = 3;
    std::size_t max_length = 2048;
};

enum class RefineMode : std::uint8_t { Polish, Restructure };
enum class HumanizeMode : std::uint8_t { Diversify, Mimic };

// Prompt variables for the generation template of `human`.
PromptVars generation_vars(const BuildSpec& spec, const Document& human);

// Type-3 text written from the human item's title or prompt with matched
// length and paragraph count. QA exhaustion raises BuildError.
Document gen_machine_text(const BuildContext& ctx, const BuildSpec& spec, const Document& human,
                          const SampledParams& params);

// Type-0 document rewritten in AI style (type 1).
Document refine(const BuildContext& ctx, RefineMode mode, const Document& doc,
                const SampledParams& params);

// Type-3 document rewritten toward human style (type 2). Mimic needs a
// non-empty reference text.
Document humanize(const BuildContext& ctx, HumanizeMode mode, const Document& doc,
                  const std::optional<std::string>& reference, const SampledParams& params);

// Truncates every group (keyed by meta.source_id, else id) to the group's
// shortest text at sentence boundaries. Groups that would fall under
// min_length are dropped with a warning. Group order is preserved.
std::vector<Document> truncate_align(const std::vector<Document>& docs,
                                     std::size_t min_length = kMinAlignedLength);

struct BuildStats {
    std::size_t groups_built = 0;
    std::size_t groups_resumed = 0;
    std::size_t groups_dropped = 0;
};

struct BuildResult {
    std::vector<Document> corpus;
    BuildStats stats;
};

// Uses the first n_per_type human documents of spec.domain. Output is
// ordered by group, then type.
BuildResult build_dataset(const BuildContext& ctx, const BuildSpec& spec,
                          const std::vector<Document>& human_docs);

// Plain-text excerpt sheet of `n_groups` seeded groups for manual review.
std::string sampling_report(const std::vector<Document>& corpus, std::size_t n_groups,
                            std::uint64_t seed);

}  // namespace aidetect
