#pragma once
// Error hierarchy shared by every module. Each error carries a category so the
// CLI can map it onto an exit code without string matching.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace aidetect {

enum class ErrorCategory {
    Usage,      // bad flags or missing required inputs
    Data,       // malformed input data, validation, QA or fit failures
    Provider,   // configuration/transport failures talking to a model provider
    Io,         // filesystem failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define AIDETECT_DEFINE_ERROR(Name, Category)                                  \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what)                                 \
            : Error(ErrorCategory::Category, what) {}                          \
    };

AIDETECT_DEFINE_ERROR(UsageError, Usage)
AIDETECT_DEFINE_ERROR(InputError, Data)
AIDETECT_DEFINE_ERROR(ValidationError, Data)
AIDETECT_DEFINE_ERROR(MetricError, Data)
AIDETECT_DEFINE_ERROR(FitError, Data)
AIDETECT_DEFINE_ERROR(ExtractionError, Data)
AIDETECT_DEFINE_ERROR(BuildError, Data)
AIDETECT_DEFINE_ERROR(ConfigError, Provider)
AIDETECT_DEFINE_ERROR(TransportError, Provider)
AIDETECT_DEFINE_ERROR(GenerationError, Provider)
AIDETECT_DEFINE_ERROR(IoError, Io)

#undef AIDETECT_DEFINE_ERROR

// Malformed record in a line-delimited file; line numbers are 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorCategory::Data, "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Text longer than the scoring model's context window.
class TruncationError : public Error {
public:
    TruncationError(std::size_t tokens, std::size_t limit)
        : Error(ErrorCategory::Provider,
                "text has " + std::to_string(tokens) +
                    " tokens, exceeding the model context limit of " +
                    std::to_string(limit)),
          limit_(limit) {}

    std::size_t limit() const noexcept { return limit_; }

private:
    std::size_t limit_;
};

// All regeneration attempts produced unacceptable output.
class QaError : public Error {
public:
    QaError(const std::string& what, std::string last_output)
        : Error(ErrorCategory::Data, what), last_output_(std::move(last_output)) {}

    const std::string& last_output() const noexcept { return last_output_; }

private:
    std::string last_output_;
};

// Failure building features for a specific document.
class FeatureError : public Error {
public:
    FeatureError(std::string doc_id, const Error& cause)
        : Error(cause.category(), "document '" + doc_id + "': " + cause.what()),
          doc_id_(std::move(doc_id)) {}

    const std::string& doc_id() const noexcept { return doc_id_; }

private:
    std::string doc_id_;
};

}  // namespace aidetect
