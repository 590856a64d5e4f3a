#pragma once
// Keyed prompt templates with {placeholder} substitution.
//
// File format: an entry starts at a line "@@ <key>" and runs to the next
// "@@" line; trailing blank lines are dropped. Before the first entry, lines
// beginning with '#' are comments.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aidetect {

using PromptVars = std::map<std::string, std::string, std::less<>>;

class PromptRegistry {
public:
    // Registry shipped with the library (same content as prompts/registry.txt).
    static PromptRegistry builtin();
    static PromptRegistry parse(std::string_view content);
    static PromptRegistry load(const std::filesystem::path& path);

    bool contains(std::string_view key) const;
    const std::string& get(std::string_view key) const;  // throws ValidationError
    std::vector<std::string> keys() const;

    std::string render(std::string_view key, const PromptVars& vars) const;

    bool operator==(const PromptRegistry&) const = default;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

// Single-pass substitution; substituted values are never re-expanded. Every
// placeholder in the template must have a value.
std::string render_template(std::string_view tmpl, const PromptVars& vars);

// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view tmpl);

}  // namespace aidetect
