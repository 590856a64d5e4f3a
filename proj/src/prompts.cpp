#include "aidetect/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "aidetect/errors.hpp"
#include "aidetect/text.hpp"

namespace aidetect {

namespace detail {
extern const std::string_view kBuiltinPrompts;
}

PromptRegistry PromptRegistry::builtin() { return parse(detail::kBuiltinPrompts); }

PromptRegistry PromptRegistry::parse(std::string_view content) {
    PromptRegistry reg;
    std::string key;
    std::vector<std::string> body;
    auto flush = [&] {
        if (key.empty()) return;
        while (!body.empty() && is_blank(body.back())) body.pop_back();
        std::string tmpl;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (i) tmpl.push_back('\n');
            tmpl += body[i];
        }
        if (tmpl.empty()) throw ValidationError("prompt '" + key + "' is empty");
        if (!reg.templates_.emplace(key, std::move(tmpl)).second) {
            throw ValidationError("duplicate prompt key '" + key + "'");
        }
        body.clear();
    };

    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start <= content.size()) {
        auto nl = content.find('\n', start);
        if (nl == std::string_view::npos) nl = content.size();
        std::string line(content.substr(start, nl - start));
        start = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("@@", 0) == 0) {
            flush();
            key = trim(std::string_view(line).substr(2));
            if (key.empty()) throw ParseError(line_no, "prompt entry without a key");
            continue;
        }
        if (key.empty()) {
            if (is_blank(line) || line.front() == '#') continue;
            throw ParseError(line_no, "text outside a prompt entry");
        }
        body.push_back(std::move(line));
    }
    flush();
    return reg;
}

PromptRegistry PromptRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open prompt registry " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool PromptRegistry::contains(std::string_view key) const {
    return templates_.find(key) != templates_.end();
}

const std::string& PromptRegistry::get(std::string_view key) const {
    auto it = templates_.find(key);
    if (it == templates_.end()) {
        throw ValidationError("prompt registry has no entry '" + std::string(key) + "'");
    }
    return it->second;
}

std::vector<std::string> PromptRegistry::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : templates_) out.push_back(k);
    return out;
}

std::string PromptRegistry::render(std::string_view key, const PromptVars& vars) const {
    return render_template(get(key), vars);
}

namespace {

bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_';
}

// Visits literal text and placeholders in order.
template <typename Literal, typename Placeholder>
void scan(std::string_view tmpl, Literal&& on_literal, Placeholder&& on_placeholder) {
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const auto open = tmpl.find('{', i);
        if (open == std::string_view::npos) {
            on_literal(tmpl.substr(i));
            return;
        }
        std::size_t j = open + 1;
        while (j < tmpl.size() && is_name_char(tmpl[j])) ++j;
        if (j < tmpl.size() && tmpl[j] == '}' && j > open + 1) {
            on_literal(tmpl.substr(i, open - i));
            on_placeholder(tmpl.substr(open + 1, j - open - 1));
            i = j + 1;
        } else {
            on_literal(tmpl.substr(i, open + 1 - i));
            i = open + 1;
        }
    }
}

}  // namespace

std::string render_template(std::string_view tmpl, const PromptVars& vars) {
    std::string out;
    scan(
        tmpl, [&](std::string_view lit) { out += lit; },
        [&](std::string_view name) {
            auto it = vars.find(name);
            if (it == vars.end()) {
                throw InputError("no value for prompt placeholder {" + std::string(name) + "}");
            }
            out += it->second;
        });
    return out;
}

std::vector<std::string> placeholders(std::string_view tmpl) {
    std::vector<std::string> out;
    scan(
        tmpl, [](std::string_view) {},
        [&](std::string_view name) {
            if (std::find(out.begin(), out.end(), name) == out.end()) out.emplace_back(name);
        });
    return out;
}

}  // namespace aidetect
