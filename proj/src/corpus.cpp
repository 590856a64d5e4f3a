#include "aidetect/corpus.hpp"

#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "aidetect/errors.hpp"
#include "aidetect/text.hpp"

namespace aidetect {

using json = nlohmann::ordered_json;

int to_int(ParticipationType t) { return static_cast<int>(t); }

ParticipationType participation_type_from_int(int v) {
    if (v < 0 || v > 3) {
        throw ValidationError("participation type must be 0-3, got " + std::to_string(v));
    }
    return static_cast<ParticipationType>(v);
}

std::string_view to_string(DetectionTask task) {
    switch (task) {
        case DetectionTask::Level1: return "level1";
        case DetectionTask::Level2: return "level2";
        case DetectionTask::Level3: return "level3";
    }
    return "?";
}

DetectionTask parse_task(std::string_view s) {
    for (auto t : kAllTasks) {
        if (to_string(t) == s) return t;
    }
    throw UsageError("unknown task '" + std::string(s) + "' (expected level1|level2|level3)");
}

Label derive_label(DetectionTask task, ParticipationType ptype) {
    const int t = to_int(ptype);
    switch (task) {
        case DetectionTask::Level1: return t >= 1 ? Label::Positive : Label::Negative;
        case DetectionTask::Level2: return t >= 2 ? Label::Positive : Label::Negative;
        case DetectionTask::Level3: return t == 3 ? Label::Positive : Label::Negative;
    }
    return Label::Negative;
}

std::string_view to_string(Split s) { return s == Split::Dev ? "dev" : "test"; }

Split parse_split(std::string_view s) {
    if (s == "dev") return Split::Dev;
    if (s == "test") return Split::Test;
    throw ValidationError("split must be 'dev' or 'test', got '" + std::string(s) + "'");
}

std::string_view to_string(GenerationMethod m) {
    switch (m) {
        case GenerationMethod::Original: return "original";
        case GenerationMethod::Generate: return "generate";
        case GenerationMethod::Polish: return "polish";
        case GenerationMethod::Restructure: return "restructure";
        case GenerationMethod::Diversify: return "diversify";
        case GenerationMethod::Mimic: return "mimic";
    }
    return "?";
}

GenerationMethod parse_method(std::string_view s) {
    for (auto m : {GenerationMethod::Original, GenerationMethod::Generate,
                   GenerationMethod::Polish, GenerationMethod::Restructure,
                   GenerationMethod::Diversify, GenerationMethod::Mimic}) {
        if (to_string(m) == s) return m;
    }
    throw ValidationError("unknown generation method '" + std::string(s) + "'");
}

bool meta_params_in_range(const GenerationMeta& meta) {
    const bool temp_ok = meta.temperature == 0.8 || meta.temperature == 1.0 ||
                         meta.temperature == 1.2;
    const bool top_p_ok = meta.top_p == 0.96 || meta.top_p == 1.0;
    auto penalty_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    return temp_ok && top_p_ok && penalty_ok(meta.frequency_penalty) &&
           penalty_ok(meta.presence_penalty);
}

ParticipationType Document::type() const {
    if (!is_labeled()) {
        throw ValidationError("document '" + id + "' has no participation type");
    }
    return *ptype->type;
}

void validate_document(const Document& doc) {
    if (is_blank(doc.id)) throw ValidationError("document id is empty");
    if (is_blank(doc.text)) {
        throw ValidationError("document '" + doc.id + "' has empty text");
    }
}

namespace {

json meta_to_json(const GenerationMeta& m) {
    json j;
    j["source_model"] = m.source_model;
    j["temperature"] = m.temperature;
    j["top_p"] = m.top_p;
    j["frequency_penalty"] = m.frequency_penalty;
    j["presence_penalty"] = m.presence_penalty;
    j["method"] = to_string(m.method);
    if (m.title) j["title"] = *m.title;
    if (m.prompt) j["prompt"] = *m.prompt;
    if (m.source_id) j["source_id"] = *m.source_id;
    return j;
}

template <typename T>
T require(const json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string("missing key '") + key + "'");
    return j.at(key).get<T>();
}

template <typename T>
T optional_or(const json& j, const char* key, T fallback) {
    return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

GenerationMeta meta_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("meta must be an object");
    GenerationMeta m;
    m.source_model = optional_or<std::string>(j, "source_model", "");
    m.temperature = optional_or<double>(j, "temperature", 0.0);
    m.top_p = optional_or<double>(j, "top_p", 1.0);
    m.frequency_penalty = optional_or<double>(j, "frequency_penalty", 0.0);
    m.presence_penalty = optional_or<double>(j, "presence_penalty", 0.0);
    m.method = parse_method(optional_or<std::string>(j, "method", "original"));
    m.title = optional_string(j, "title");
    m.prompt = optional_string(j, "prompt");
    m.source_id = optional_string(j, "source_id");
    return m;
}

}  // namespace

std::string to_json_line(const Document& doc) {
    json j;
    j["id"] = doc.id;
    j["domain"] = doc.domain;
    j["language"] = doc.language;
    if (doc.ptype) {
        if (doc.ptype->is_mixed()) {
            j["type"] = "unknown-mixed";
        } else {
            j["type"] = to_int(*doc.ptype->type);
        }
    }
    if (doc.split) j["split"] = to_string(*doc.split);
    j["text"] = doc.text;
    if (doc.meta) j["meta"] = meta_to_json(*doc.meta);
    try {
        return j.dump();
    } catch (const json::exception& e) {
        throw ValidationError("document '" + doc.id + "' is not valid UTF-8: " + e.what());
    }
}

Document document_from_json_line(std::string_view line, std::size_t line_no) {
    try {
        const json j = json::parse(line);
        if (!j.is_object()) throw ValidationError("record is not a JSON object");
        Document doc;
        doc.id = require<std::string>(j, "id");
        doc.domain = require<std::string>(j, "domain");
        doc.language = require<std::string>(j, "language");
        doc.text = require<std::string>(j, "text");
        if (j.contains("type") && !j.at("type").is_null()) {
            const auto& t = j.at("type");
            if (t.is_string()) {
                if (t.get<std::string>() != "unknown-mixed") {
                    throw ValidationError("type must be 0-3 or \"unknown-mixed\"");
                }
                doc.ptype = StoredType{std::nullopt};
            } else if (t.is_number_integer()) {
                doc.ptype = StoredType{participation_type_from_int(t.get<int>())};
            } else {
                throw ValidationError("type must be 0-3 or \"unknown-mixed\"");
            }
        }
        if (j.contains("split") && !j.at("split").is_null()) {
            doc.split = parse_split(j.at("split").get<std::string>());
        }
        if (j.contains("meta") && !j.at("meta").is_null()) {
            doc.meta = meta_from_json(j.at("meta"));
        }
        validate_document(doc);
        return doc;
    } catch (const json::exception& e) {
        throw ParseError(line_no, e.what());
    } catch (const ValidationError& e) {
        throw ParseError(line_no, e.what());
    }
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file " + path.string());
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;
        auto doc = document_from_json_line(line, line_no);
        auto [it, inserted] = seen.emplace(doc.id, line_no);
        if (!inserted) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate id '" +
                                  doc.id + "' (first seen on line " +
                                  std::to_string(it->second) + ")");
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

void save_corpus(const std::vector<Document>& docs, const std::filesystem::path& path) {
    std::string out;
    for (const auto& doc : docs) {
        validate_document(doc);
        out += to_json_line(doc);
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write corpus file " + path.string());
    f << out;
    if (!f) throw IoError("write failed for " + path.string());
}

std::array<std::size_t, 4> type_counts(const std::vector<Document>& docs) {
    std::array<std::size_t, 4> counts{};
    for (const auto& d : docs) {
        if (d.is_labeled()) ++counts[static_cast<std::size_t>(to_int(d.type()))];
    }
    return counts;
}

}  // namespace aidetect
