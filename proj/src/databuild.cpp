#include "aidetect/databuild.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aidetect/decouple.hpp"
#include "aidetect/errors.hpp"
#include "aidetect/text.hpp"

namespace aidetect {

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t key_hash(std::uint64_t seed, std::string_view key) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ seed;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string group_key(const Document& d) {
    return d.meta && d.meta->source_id ? *d.meta->source_id : d.id;
}

std::string_view to_string(RefineMode m) { return m == RefineMode::Polish ? "polish" : "restructure"; }
std::string_view to_string(HumanizeMode m) { return m == HumanizeMode::Mimic ? "mimic" : "diversify"; }

GenerationMeta meta_from(const SampledParams& p, GenerationMethod method, const Document& src) {
    GenerationMeta m;
    if (src.meta) {
        m.title = src.meta->title;
        m.prompt = src.meta->prompt;
        m.source_id = src.meta->source_id;
    }
    if (!m.source_id) m.source_id = src.id;
    m.source_model = p.source_model;
    m.temperature = p.temperature;
    m.top_p = p.top_p;
    m.frequency_penalty = p.frequency_penalty;
    m.presence_penalty = p.presence_penalty;
    m.method = method;
    return m;
}

GenRequest request_for(const BuildContext& ctx, std::string prompt, const SampledParams& p) {
    GenRequest req;
    req.prompt = std::move(prompt);
    req.temperature = p.temperature;
    req.top_p = p.top_p;
    req.frequency_penalty = p.frequency_penalty;
    req.presence_penalty = p.presence_penalty;
    req.max_length = ctx.max_length;
    req.seed = p.request_seed;
    req.model = p.source_model;
    return req;
}

std::string generate_checked(const BuildContext& ctx, const GenRequest& req,
                             std::string_view reference_text, std::string_view language,
                             std::string_view what) {
    try {
        return qa_regenerate(ctx.provider, ctx.cfg, req, reference_text, language, kRewritePolicy,
                             ctx.max_attempts);
    } catch (const QaError& e) {
        throw BuildError(std::string(what) + ": " + e.what());
    } catch (const ExtractionError& e) {
        throw BuildError(std::string(what) + ": " + e.what());
    }
}

void require_type(const Document& doc, ParticipationType expected, std::string_view op) {
    if (!doc.is_labeled() || doc.type() != expected) {
        throw InputError(std::string(op) + " expects a type-" + std::to_string(to_int(expected)) +
                         " document, got '" + doc.id + "'");
    }
}

Document derived(const Document& src, ParticipationType type, std::string text,
                 GenerationMeta meta) {
    Document d;
    d.id = *meta.source_id + "-t" + std::to_string(to_int(type));
    d.domain = src.domain;
    d.language = src.language;
    d.ptype = StoredType{type};
    d.text = std::move(text);
    d.meta = std::move(meta);
    return d;
}

}  // namespace

std::string_view to_string(SourceField f) { return f == SourceField::Title ? "title" : "prompt"; }

SourceField parse_source_field(std::string_view s) {
    if (s == "title") return SourceField::Title;
    if (s == "prompt") return SourceField::Prompt;
    throw UsageError("unknown source field '" + std::string(s) + "' (expected title|prompt)");
}

void validate_spec(const BuildSpec& spec, const PromptRegistry& prompts) {
    if (spec.n_per_type < 1) throw ValidationError("n_per_type must be at least 1");
    if (!prompts.contains(spec.prompt_template_key)) {
        throw ValidationError("unknown prompt template '" + spec.prompt_template_key + "'");
    }
    for (const char* key : {"polish", "restructure", "diversify", "mimic"}) {
        if (!prompts.contains(key)) throw ValidationError(std::string("missing prompt '") + key + "'");
    }
    if (spec.model_pool.empty()) throw ValidationError("model pool is empty");
    if (spec.max_attempts < 1) throw ValidationError("max_attempts must be at least 1");
}

ParameterSampler::ParameterSampler(std::uint64_t seed, std::string_view key)
    : state_(key_hash(seed, key)) {}

std::uint64_t ParameterSampler::next() { return splitmix(state_); }

bool ParameterSampler::coin() { return (next() >> 63) != 0; }

std::uint64_t ParameterSampler::below(std::uint64_t n) { return next() % n; }

SampledParams ParameterSampler::draw(const std::vector<std::string>& model_pool) {
    if (model_pool.empty()) throw ValidationError("model pool is empty");
    SampledParams p;
    p.source_model = model_pool[next() % model_pool.size()];
    p.temperature = kTemperatureGrid[next() % kTemperatureGrid.size()];
    p.top_p = kTopPGrid[next() % kTopPGrid.size()];
    p.frequency_penalty = kPenaltyGrid[next() % kPenaltyGrid.size()];
    p.presence_penalty = kPenaltyGrid[next() % kPenaltyGrid.size()];
    p.request_seed = next() >> 11;  // stays exact as a JSON number
    return p;
}

PromptVars generation_vars(const BuildSpec& spec, const Document& human) {
    const auto& language = human.language.empty() ? spec.language : human.language;
    std::optional<std::string> value;
    if (human.meta) value = spec.field == SourceField::Title ? human.meta->title : human.meta->prompt;
    if (!value || is_blank(*value)) {
        throw InputError("document '" + human.id + "' has no " +
                         std::string(to_string(spec.field)) + " to generate from");
    }
    return {
        {"n_words", std::to_string(text_length(human.text, language))},
        {"n_paragraphs", std::to_string(paragraph_count(human.text))},
        {"field", std::string(to_string(spec.field))},
        {"field_value", *value},
        {"lang", language},
    };
}

Document gen_machine_text(const BuildContext& ctx, const BuildSpec& spec, const Document& human,
                          const SampledParams& params) {
    const auto vars = generation_vars(spec, human);
    const auto req = request_for(ctx, ctx.prompts.render(spec.prompt_template_key, vars), params);
    auto text = generate_checked(ctx, req, human.text, vars.at("lang"), "generation for '" + human.id + "'");
    return derived(human, ParticipationType::AiContentAiExpression, std::move(text),
                   meta_from(params, GenerationMethod::Generate, human));
}

Document refine(const BuildContext& ctx, RefineMode mode, const Document& doc,
                const SampledParams& params) {
    require_type(doc, ParticipationType::HumanContentHumanExpression, "refine");
    const auto req = request_for(ctx, ctx.prompts.render(to_string(mode), {{"generation", doc.text}}),
                                 params);
    auto text = generate_checked(ctx, req, doc.text, doc.language, "refining '" + doc.id + "'");
    return derived(doc, ParticipationType::HumanContentAiExpression, std::move(text),
                   meta_from(params,
                             mode == RefineMode::Polish ? GenerationMethod::Polish
                                                        : GenerationMethod::Restructure,
                             doc));
}

Document humanize(const BuildContext& ctx, HumanizeMode mode, const Document& doc,
                  const std::optional<std::string>& reference, const SampledParams& params) {
    require_type(doc, ParticipationType::AiContentAiExpression, "humanize");
    PromptVars vars{{"generation", doc.text}};
    if (mode == HumanizeMode::Mimic) {
        if (!reference || is_blank(*reference)) throw InputError("mimic requires a reference text");
        vars.emplace("reference", *reference);
    }
    const auto req = request_for(ctx, ctx.prompts.render(to_string(mode), vars), params);
    auto text = generate_checked(ctx, req, doc.text, doc.language, "humanizing '" + doc.id + "'");
    return derived(doc, ParticipationType::AiContentHumanExpression, std::move(text),
                   meta_from(params,
                             mode == HumanizeMode::Mimic ? GenerationMethod::Mimic
                                                         : GenerationMethod::Diversify,
                             doc));
}

std::vector<Document> truncate_align(const std::vector<Document>& docs, std::size_t min_length) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto key = group_key(docs[i]);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(i);
    }
    std::vector<Document> out;
    out.reserve(docs.size());
    for (const auto& key : order) {
        const auto& idx = groups.at(key);
        std::size_t limit = std::numeric_limits<std::size_t>::max();
        for (auto i : idx) limit = std::min(limit, text_length(docs[i].text, docs[i].language));

        std::vector<Document> aligned;
        bool keep = limit >= min_length;
        for (auto i : idx) {
            if (!keep) break;
            Document d = docs[i];
            d.text = truncate_at_sentence(d.text, d.language, limit);
            if (text_length(d.text, d.language) < min_length) keep = false;
            aligned.push_back(std::move(d));
        }
        if (!keep) {
            log_warning("group '" + key + "' dropped: aligned length below " +
                        std::to_string(min_length));
            continue;
        }
        for (auto& d : aligned) out.push_back(std::move(d));
    }
    return out;
}

namespace {

struct GroupOutcome {
    std::vector<Document> docs;  // empty when dropped
    bool resumed = false;
};

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, const std::string& id) {
    return dir / (sha256_hex(id).substr(0, 24) + ".json");
}

std::optional<std::vector<Document>> read_checkpoint(const std::filesystem::path& path,
                                                     const std::string& id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("source_id").get<std::string>() != id || j.at("status") != "done") return std::nullopt;
        std::vector<Document> docs;
        std::size_t line = 0;
        for (const auto& d : j.at("documents")) {
            docs.push_back(document_from_json_line(d.get<std::string>(), ++line));
        }
        return docs;
    } catch (const std::exception& e) {
        log_warning("ignoring unreadable checkpoint " + path.string() + ": " + e.what());
        return std::nullopt;
    }
}

void write_checkpoint(const std::filesystem::path& path, const std::string& id,
                      const std::vector<Document>& docs) {
    nlohmann::ordered_json j;
    j["source_id"] = id;
    j["status"] = "done";
    j["documents"] = nlohmann::ordered_json::array();
    for (const auto& d : docs) j["documents"].push_back(to_json_line(d));
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint " + tmp);
        out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, path);
}

std::vector<Document> build_group(const BuildContext& ctx, const BuildSpec& spec,
                                  const Document& human, const std::string& reference) {
    ParameterSampler sampler(spec.seed, human.id);
    Document original = human;
    original.ptype = StoredType{ParticipationType::HumanContentHumanExpression};
    original.split.reset();
    if (original.language.empty()) original.language = spec.language;
    GenerationMeta meta = human.meta.value_or(GenerationMeta{});
    meta.method = GenerationMethod::Original;
    meta.source_id = human.id;
    original.meta = meta;
    original.id = human.id + "-t0";

    const auto refine_params = sampler.draw(spec.model_pool);
    const auto refine_mode = sampler.coin() ? RefineMode::Restructure : RefineMode::Polish;
    const auto gen_params = sampler.draw(spec.model_pool);
    const auto humanize_params = sampler.draw(spec.model_pool);
    const auto humanize_mode = sampler.coin() ? HumanizeMode::Mimic : HumanizeMode::Diversify;

    auto t1 = refine(ctx, refine_mode, original, refine_params);
    auto t3 = gen_machine_text(ctx, spec, original, gen_params);
    auto t2 = humanize(ctx, humanize_mode, t3, reference, humanize_params);
    return truncate_align({original, t1, t2, t3});
}

}  // namespace

BuildResult build_dataset(const BuildContext& ctx, const BuildSpec& spec,
                          const std::vector<Document>& human_docs) {
    validate_spec(spec, ctx.prompts);
    if (human_docs.empty()) throw InputError("no human documents to build from");
    std::vector<const Document*> humans;
    for (const auto& d : human_docs) {
        if (spec.domain.empty() || d.domain == spec.domain) humans.push_back(&d);
        if (humans.size() == spec.n_per_type) break;
    }
    if (humans.size() < spec.n_per_type) {
        throw InputError("need " + std::to_string(spec.n_per_type) + " human documents in domain '" +
                         spec.domain + "', found " + std::to_string(humans.size()));
    }
    if (spec.checkpoint_dir) std::filesystem::create_directories(*spec.checkpoint_dir);

    // Mimic reference: the next human item of the same domain, cyclically.
    std::vector<std::string> references(humans.size());
    for (std::size_t i = 0; i < humans.size(); ++i) {
        references[i] = humans[i]->text;
        for (std::size_t k = 1; k < humans.size(); ++k) {
            const auto* cand = humans[(i + k) % humans.size()];
            if (cand->domain == humans[i]->domain) {
                references[i] = cand->text;
                break;
            }
        }
    }

    std::vector<GroupOutcome> outcomes(humans.size());
    std::vector<std::exception_ptr> errors(humans.size());
    std::mutex checkpoint_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < humans.size(); i = next++) {
            const auto& id = humans[i]->id;
            try {
                std::optional<std::filesystem::path> cp;
                if (spec.checkpoint_dir) {
                    cp = checkpoint_path(*spec.checkpoint_dir, id);
                    std::lock_guard lock(checkpoint_mutex);
                    if (auto docs = read_checkpoint(*cp, id)) {
                        outcomes[i] = {std::move(*docs), true};
                        continue;
                    }
                }
                outcomes[i].docs = build_group(ctx, spec, *humans[i], references[i]);
                if (cp) {
                    std::lock_guard lock(checkpoint_mutex);
                    write_checkpoint(*cp, id, outcomes[i].docs);
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_threads = std::max<std::size_t>(1, std::min(spec.concurrency, humans.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    BuildResult result;
    std::map<std::string, std::vector<std::size_t>> by_domain;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].resumed) ++result.stats.groups_resumed;
        if (outcomes[i].docs.empty()) {
            ++result.stats.groups_dropped;
            continue;
        }
        if (!outcomes[i].resumed) ++result.stats.groups_built;
        by_domain[humans[i]->domain].push_back(i);
    }

    // Whole groups go to one split; the first half of a seeded shuffle per
    // domain becomes dev.
    std::vector<std::optional<Split>> split(outcomes.size());
    for (auto& [domain, idx] : by_domain) {
        ParameterSampler shuffler(spec.seed, "split:" + domain);
        for (std::size_t k = idx.size(); k > 1; --k) {
            std::swap(idx[k - 1], idx[shuffler.below(k)]);
        }
        for (std::size_t k = 0; k < idx.size(); ++k) {
            split[idx[k]] = k < idx.size() / 2 ? Split::Dev : Split::Test;
        }
    }
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        for (auto& d : outcomes[i].docs) {
            d.split = split[i];
            result.corpus.push_back(std::move(d));
        }
    }
    return result;
}

std::string sampling_report(const std::vector<Document>& corpus, std::size_t n_groups,
                            std::uint64_t seed) {
    std::vector<std::string> keys;
    std::map<std::string, std::vector<const Document*>> groups;
    for (const auto& d : corpus) {
        const auto key = group_key(d);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) keys.push_back(key);
        it->second.push_back(&d);
    }
    std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
        return std::pair(key_hash(seed, a), a) < std::pair(key_hash(seed, b), b);
    });
    keys.resize(std::min(keys.size(), n_groups));

    std::ostringstream out;
    out << "# Sampling report: " << keys.size() << " of " << groups.size() << " groups\n";
    for (const auto& key : keys) {
        out << "\n## " << key << '\n';
        for (const auto* d : groups.at(key)) {
            const auto excerpt = truncate_at_sentence(d->text, d->language, 60);
            out << "\n[type " << (d->is_labeled() ? std::to_string(to_int(d->type())) : "?")
                << ", " << (d->meta ? to_string(d->meta->method) : "original") << ", "
                << text_length(d->text, d->language) << " units"
                << (is_degenerate(d->text, d->language) ? ", DEGENERATE" : "") << "]\n"
                << (excerpt.empty() ? d->text.substr(0, 400) : excerpt) << '\n';
        }
    }
    return out.str();
}

}  // namespace aidetect
