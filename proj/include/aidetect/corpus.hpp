#pragma once
// Documents, participation types and the three risk-level detection tasks.
//
// A corpus file holds one JSON object per line:
//   {"id": ..., "domain": ..., "language": ..., "type": 0-3 | "unknown-mixed",
//    "text": ..., "split": "dev" | "test", "meta": {...}}
// `type`, `split` and `meta` may be absent (unlabeled / unsplit input).

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aidetect {

// Who produced the content and who produced the expression.
enum class ParticipationType : std::uint8_t {
    HumanContentHumanExpression = 0,
    HumanContentAiExpression = 1,
    AiContentHumanExpression = 2,
    AiContentAiExpression = 3,
};

inline constexpr std::array<ParticipationType, 4> kAllParticipationTypes = {
    ParticipationType::HumanContentHumanExpression,
    ParticipationType::HumanContentAiExpression,
    ParticipationType::AiContentHumanExpression,
    ParticipationType::AiContentAiExpression,
};

int to_int(ParticipationType t);
ParticipationType participation_type_from_int(int v);

// Stored type of a document. Iteratively co-written texts have no defined
// risk level and are kept out of labeled evaluation.
struct StoredType {
    std::optional<ParticipationType> type;  // empty => unknown-mixed
    bool is_mixed() const { return !type.has_value(); }
    bool operator==(const StoredType&) const = default;
};

enum class DetectionTask : std::uint8_t { Level1, Level2, Level3 };

inline constexpr std::array<DetectionTask, 3> kAllTasks = {
    DetectionTask::Level1, DetectionTask::Level2, DetectionTask::Level3};

std::string_view to_string(DetectionTask task);
DetectionTask parse_task(std::string_view s);  // "level1" | "level2" | "level3"

enum class Label : std::uint8_t { Negative = 0, Positive = 1 };

// Level-1 targets {1,2,3}, level-2 targets {2,3}, level-3 targets {3}.
Label derive_label(DetectionTask task, ParticipationType ptype);

enum class Split : std::uint8_t { Dev, Test };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

enum class GenerationMethod : std::uint8_t {
    Original, Generate, Polish, Restructure, Diversify, Mimic
};
std::string_view to_string(GenerationMethod m);
GenerationMethod parse_method(std::string_view s);

struct GenerationMeta {
    std::string source_model;
    double temperature = 0.0;
    double top_p = 1.0;
    double frequency_penalty = 0.0;
    double presence_penalty = 0.0;
    GenerationMethod method = GenerationMethod::Original;
    std::optional<std::string> title;      // source field for generation
    std::optional<std::string> prompt;     // alternative source field
    std::optional<std::string> source_id;  // groups the variants of one human item

    bool operator==(const GenerationMeta&) const = default;
};

// Pipeline-produced documents must use the decoding grid the benchmark was
// built with: temperature in {0.8, 1.0, 1.2}, top_p in {0.96, 1.0},
// penalties in [0, 1].
bool meta_params_in_range(const GenerationMeta& meta);

struct Document {
    std::string id;
    std::string domain;
    std::string language;
    std::optional<StoredType> ptype;  // empty => unlabeled
    std::string text;
    std::optional<GenerationMeta> meta;
    std::optional<Split> split;

    bool operator==(const Document&) const = default;

    // Labeled with a concrete participation type.
    bool is_labeled() const { return ptype && !ptype->is_mixed(); }
    ParticipationType type() const;  // throws unless is_labeled()
};

// Throws ValidationError on empty text or blank id.
void validate_document(const Document& doc);

std::string to_json_line(const Document& doc);
Document document_from_json_line(std::string_view line, std::size_t line_no);

std::vector<Document> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::vector<Document>& docs, const std::filesystem::path& path);

// Per-type counts over labeled documents.
std::array<std::size_t, 4> type_counts(const std::vector<Document>& docs);

}  // namespace aidetect
