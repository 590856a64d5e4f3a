#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "aidetect/cache.hpp"
#include "aidetect/corpus.hpp"
#include "aidetect/databuild.hpp"
#include "aidetect/decouple.hpp"
#include "aidetect/detector2d.hpp"
#include "aidetect/evalharness.hpp"
#include "aidetect/language_model.hpp"
#include "aidetect/metrics.hpp"
#include "aidetect/prompts.hpp"
#include "aidetect/remote_provider.hpp"
#include "aidetect/stub_provider.hpp"
#include "aidetect/text.hpp"

namespace aidetect::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::Usage: return kExitUsage;
        case ErrorCategory::Provider: return kExitProvider;
        case ErrorCategory::Data:
        case ErrorCategory::Io: return kExitData;
    }
    return kExitData;
}

namespace {

// ---------------------------------------------------------------- config

struct StubSettings {
    std::size_t vocab = 50;
    std::uint64_t seed = 1;
    double sharpness = 2.0;
    double sampler_noise = 0.3;
    std::string generator = "lm";  // lm | mirror
};

struct RunConfig {
    std::string provider_kind = "stub";
    ProviderConfig provider;
    StubSettings stub;
    std::optional<fs::path> prompts;
    std::optional<fs::path> cache_dir;
    std::uint64_t seed = 0;
    std::size_t concurrency = 1;
    fs::path output_root = "runs";
    DecoupleOptions decouple;
};

RunConfig default_config() {
    RunConfig c;
    c.provider.scoring_model = "stub-scorer";
    c.provider.sampling_model = "stub-sampler";
    return c;
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

RunConfig load_config(const fs::path& path) {
    RunConfig c = default_config();
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    const auto base = path.parent_path();
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.contains("provider")) {
            const auto& p = j.at("provider");
            read_opt(p, "kind", c.provider_kind);
            read_opt(p, "scoring_model", c.provider.scoring_model);
            if (p.contains("sampling_model")) {
                if (p.at("sampling_model").is_null()) {
                    c.provider.sampling_model.reset();
                } else {
                    c.provider.sampling_model = p.at("sampling_model").get<std::string>();
                }
            }
            read_opt(p, "endpoint", c.provider.endpoint);
            read_opt(p, "credentials_env", c.provider.credentials_env);
            read_opt(p, "request_timeout", c.provider.request_timeout);
            read_opt(p, "max_retries", c.provider.max_retries);
        }
        if (j.contains("stub")) {
            const auto& s = j.at("stub");
            read_opt(s, "vocab", c.stub.vocab);
            read_opt(s, "seed", c.stub.seed);
            read_opt(s, "sharpness", c.stub.sharpness);
            read_opt(s, "sampler_noise", c.stub.sampler_noise);
            read_opt(s, "generator", c.stub.generator);
        }
        if (j.contains("prompts")) c.prompts = resolve(base, j.at("prompts").get<std::string>());
        if (j.contains("cache_dir")) c.cache_dir = resolve(base, j.at("cache_dir").get<std::string>());
        if (j.contains("output_root")) c.output_root = resolve(base, j.at("output_root").get<std::string>());
        read_opt(j, "seed", c.seed);
        read_opt(j, "concurrency", c.concurrency);
        if (j.contains("decouple")) {
            const auto& d = j.at("decouple");
            read_opt(d, "extractor_model", c.decouple.extractor_model);
            if (d.contains("mode")) c.decouple.mode = parse_decode_mode(d.at("mode").get<std::string>());
            read_opt(d, "temperature", c.decouple.temperature);
            read_opt(d, "top_p", c.decouple.top_p);
            read_opt(d, "max_attempts", c.decouple.max_attempts);
            read_opt(d, "max_length", c.decouple.max_length);
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file " + path.string() + ": " + e.what());
    }
    if (c.provider_kind != "stub" && c.provider_kind != "remote") {
        throw UsageError("provider.kind must be stub or remote");
    }
    if (c.concurrency < 1) throw UsageError("concurrency must be at least 1");
    return c;
}

json config_json(const RunConfig& c) {
    json j;
    j["provider"] = {{"kind", c.provider_kind},
                     {"scoring_model", c.provider.scoring_model},
                     {"sampling_model", c.provider.sampling_model ? json(*c.provider.sampling_model)
                                                                  : json(nullptr)},
                     {"endpoint", c.provider.endpoint},
                     {"credentials_env", c.provider.credentials_env},
                     {"request_timeout", c.provider.request_timeout},
                     {"max_retries", c.provider.max_retries}};
    if (c.provider_kind == "stub") {
        j["stub"] = {{"vocab", c.stub.vocab},
                     {"seed", c.stub.seed},
                     {"sharpness", c.stub.sharpness},
                     {"sampler_noise", c.stub.sampler_noise},
                     {"generator", c.stub.generator}};
    }
    j["prompts"] = c.prompts ? json(c.prompts->string()) : json(nullptr);
    j["seed"] = c.seed;
    j["decouple"] = {{"extractor_model", c.decouple.extractor_model},
                     {"mode", to_string(c.decouple.mode)},
                     {"temperature", c.decouple.temperature},
                     {"top_p", c.decouple.top_p},
                     {"max_attempts", c.decouple.max_attempts},
                     {"max_length", c.decouple.max_length}};
    return j;
}

// ------------------------------------------------------------- providers

class ProviderStack {
public:
    explicit ProviderStack(const RunConfig& c) {
        if (c.provider_kind == "stub") {
            auto scorer = std::make_shared<SyntheticBigramModel>(c.stub.vocab, c.stub.seed,
                                                                 c.stub.sharpness);
            Generator gen;
            if (c.stub.generator == "lm") {
                gen = lm_generator(scorer);
            } else if (c.stub.generator == "mirror") {
                gen = mirror_generator();
            } else {
                throw UsageError("stub.generator must be lm or mirror");
            }
            auto stub = std::make_unique<StubProvider>(std::move(gen));
            stub->add_model(c.provider.scoring_model, scorer);
            if (c.provider.sampling_model && *c.provider.sampling_model != c.provider.scoring_model) {
                stub->add_model(*c.provider.sampling_model,
                                std::make_shared<SyntheticBigramModel>(
                                    scorer->perturbed(c.stub.seed + 1, c.stub.sampler_noise)));
            }
            if (!c.decouple.extractor_model.empty()) {
                stub->add_model(c.decouple.extractor_model, scorer);
            }
            base_ = std::move(stub);
        } else {
            if (c.provider.endpoint.empty()) throw ConfigError("remote provider needs an endpoint");
            base_ = std::make_unique<RemoteProvider>();
        }
        Provider* top = base_.get();
        if (c.cache_dir) {
            cache_ = std::make_unique<CachedProvider>(*top, *c.cache_dir);
            top = cache_.get();
        }
        limited_ = std::make_unique<LimitedProvider>(*top, static_cast<std::ptrdiff_t>(c.concurrency));
    }

    Provider& provider() { return *limited_; }
    CacheStats cache_stats() const { return cache_ ? cache_->stats() : CacheStats{}; }

private:
    std::unique_ptr<Provider> base_;
    std::unique_ptr<CachedProvider> cache_;
    std::unique_ptr<LimitedProvider> limited_;
};

// ------------------------------------------------------------- run dirs

std::string utc_stamp(const char* fmt) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, fmt, &tm);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

class RunDir {
public:
    RunDir(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& argv,
           const std::optional<fs::path>& explicit_dir)
        : command_(command), argv_(argv) {
        config_ = config_json(cfg);
        json hashed = config_;
        hashed["command"] = command;
        hashed["argv"] = argv;
        config_hash_ = sha256_hex(hashed.dump());
        seed_ = cfg.seed;
        started_ = utc_stamp("%Y-%m-%dT%H:%M:%SZ");
        if (explicit_dir) {
            path_ = *explicit_dir;
        } else {
            const auto stem = utc_stamp("%Y%m%dT%H%M%SZ") + "-" + config_hash_.substr(0, 12);
            path_ = cfg.output_root / stem;
            for (int k = 1; fs::exists(path_); ++k) {
                path_ = cfg.output_root / (stem + "-" + std::to_string(k));
            }
        }
        fs::create_directories(path_);
    }

    const fs::path& path() const { return path_; }

    fs::path write(const std::string& name, const std::string& content) {
        const auto p = path_ / name;
        write_file(p, content);
        outputs_.push_back(name);
        return p;
    }

    void finish(const CacheStats& cache, json extra = json::object()) {
        json m;
        m["command"] = command_;
        m["argv"] = argv_;
        m["started_at"] = started_;
        m["config_hash"] = config_hash_;
        m["seed"] = seed_;
        m["config"] = config_;
        m["cache"] = {{"hits", cache.hits}, {"misses", cache.misses}, {"discarded", cache.discarded}};
        m["warnings"] = warning_count();
        m["outputs"] = outputs_;
        for (auto& [k, v] : extra.items()) m[k] = v;
        write_file(path_ / "manifest.json", m.dump(2) + "\n");
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    json config_;
    std::string config_hash_;
    std::uint64_t seed_ = 0;
    std::string started_;
    fs::path path_;
    std::vector<std::string> outputs_;
};

// --------------------------------------------------------------- helpers

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw UsageError("empty list '" + s + "'");
    return out;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t concurrency, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = std::max<std::size_t>(1, std::min(concurrency, n));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<std::size_t> seeded_subset(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    idx.resize(k);
    return idx;
}

PromptRegistry load_prompts(const RunConfig& cfg) {
    return cfg.prompts ? PromptRegistry::load(*cfg.prompts) : PromptRegistry::builtin();
}

struct Session {
    RunConfig cfg;
    ProviderStack stack;
    PromptRegistry prompts;
    Decoupler decoupler;

    explicit Session(RunConfig c)
        : cfg(std::move(c)),
          stack(cfg),
          prompts(load_prompts(cfg)),
          decoupler(stack.provider(), cfg.provider, prompts, decouple_options(cfg)) {}

    static DecoupleOptions decouple_options(const RunConfig& c) {
        auto o = c.decouple;
        o.seed = c.seed;
        return o;
    }
};

// ---------------------------------------------------------- common flags

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> concurrency;
    std::string cache_dir;
    std::string out_root;
    std::string run_dir;
    std::string prompts;
    bool quiet = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "Run seed");
        app->add_option("--concurrency", concurrency, "Maximum in-flight provider calls");
        app->add_option("--cache-dir", cache_dir, "Provider cache directory");
        app->add_option("--out", out_root, "Root directory for run outputs");
        app->add_option("--run-dir", run_dir, "Exact output directory (overrides --out)");
        app->add_option("--prompts", prompts, "Prompt registry file")->check(CLI::ExistingFile);
        app->add_flag("--quiet", quiet, "Suppress informational logging");
    }

    RunConfig resolve() const {
        RunConfig c = config.empty() ? default_config() : load_config(config);
        if (seed) c.seed = *seed;
        if (concurrency) {
            if (*concurrency < 1) throw UsageError("--concurrency must be at least 1");
            c.concurrency = *concurrency;
        }
        if (!cache_dir.empty()) c.cache_dir = cache_dir;
        if (!out_root.empty()) c.output_root = out_root;
        if (!prompts.empty()) c.prompts = prompts;
        return c;
    }

    std::optional<fs::path> explicit_run_dir() const {
        return run_dir.empty() ? std::nullopt : std::optional<fs::path>(run_dir);
    }
};

std::vector<Document> labeled_only(const std::vector<Document>& docs) {
    std::vector<Document> out;
    for (const auto& d : docs) {
        if (d.is_labeled()) out.push_back(d);
    }
    return out;
}

json metrics_json(std::span<const ScoredSample> scored, double fpr_budget) {
    const auto tpr = tpr_at_fpr(scored, fpr_budget);
    const auto f1 = best_f1(scored);
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"n", scored.size()},
            {"auroc", auroc(scored)},
            {"tpr5", tpr.tpr},
            {"tpr5_threshold", num(tpr.threshold)},
            {"best_f1", f1.f1},
            {"best_f1_threshold", num(f1.threshold)}};
}

// -------------------------------------------------------------- commands

struct ScoreArgs {
    std::string input;
    std::string task = "level2";
    std::string metric = "fastdetect";
    std::string mode = "single";
    std::string clf;
    std::string pair = "c2-t";
    bool report = false;
    double fpr = 0.05;
};

int cmd_score(const CommonFlags& flags, const ScoreArgs& a, const std::vector<std::string>& argv,
              std::ostream& out) {
    const auto task = parse_task(a.task);
    const auto metric = parse_metric(a.metric);
    if (a.mode != "single" && a.mode != "2d") throw UsageError("--mode must be single or 2d");
    std::optional<Classifier2D> clf;
    if (a.mode == "2d") {
        if (a.clf.empty()) throw UsageError("--mode 2d requires --clf");
        if (!fs::exists(a.clf)) throw UsageError("classifier file not found: " + a.clf);
        clf = load_classifier(a.clf);
        if (clf->metric != metric) {
            throw UsageError("classifier was fit for metric " + std::string(to_string(clf->metric)));
        }
    }
    const auto docs = load_corpus(a.input);
    if (a.report) {
        for (const auto& d : docs) {
            if (!d.is_labeled()) {
                throw UsageError("--report needs labeled input; document '" + d.id + "' has no type");
            }
        }
    }

    Session s(flags.resolve());
    RunDir run(s.cfg, "score", argv, flags.explicit_run_dir());
    FeatureBuilder fb(s.stack.provider(), s.cfg.provider, s.decoupler, metric,
                      clf ? clf->pair : parse_feature_pair(a.pair));
    std::vector<double> scores(docs.size());
    parallel_for(docs.size(), s.cfg.concurrency, [&](std::size_t i) {
        scores[i] = clf ? score2d(*clf, fb.build(docs[i])) : fb.score(docs[i].text);
    });

    std::string lines;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        lines += json{{"id", docs[i].id}, {"score", scores[i]}}.dump() + "\n";
    }
    run.write("scores.jsonl", lines);
    out << lines;

    if (a.report) {
        std::vector<ScoredSample> scored;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            scored.push_back({docs[i].id, scores[i], derive_label(task, docs[i].type()),
                              docs[i].domain, docs[i].type()});
        }
        json m{{"task", to_string(task)}, {"metric", to_string(metric)}, {"mode", a.mode}};
        m.update(metrics_json(scored, a.fpr));
        run.write("metrics.json", m.dump(2) + "\n");
    }
    run.finish(s.stack.cache_stats());
    log_info("run directory: " + run.path().string());
    return kExitOk;
}

struct FitArgs {
    std::string input;
    std::string task = "level2";
    std::string metric = "fastdetect";
    std::string pair = "c2-t";
    std::optional<std::size_t> n_dev;
    double l2 = 1.0;
    std::string output;
};

int cmd_fit(const CommonFlags& flags, const FitArgs& a, const std::vector<std::string>& argv,
            std::ostream& out) {
    const auto task = parse_task(a.task);
    const auto metric = parse_metric(a.metric);
    const auto pair = parse_feature_pair(a.pair);
    const auto docs = labeled_only(load_corpus(a.input));
    const bool any_split = std::any_of(docs.begin(), docs.end(), [](const auto& d) { return d.split; });
    std::vector<const Document*> dev;
    for (const auto& d : docs) {
        if (!any_split || d.split == Split::Dev) dev.push_back(&d);
    }
    if (dev.empty()) throw InputError("no labeled dev documents in " + a.input);

    Session s(flags.resolve());
    if (a.n_dev) {
        if (*a.n_dev > dev.size()) {
            throw UsageError("--n-dev " + std::to_string(*a.n_dev) + " exceeds the " +
                             std::to_string(dev.size()) + " available dev documents");
        }
        std::vector<const Document*> picked;
        for (auto i : seeded_subset(dev.size(), *a.n_dev, s.cfg.seed)) picked.push_back(dev[i]);
        dev = std::move(picked);
    }
    RunDir run(s.cfg, "fit", argv, flags.explicit_run_dir());
    FeatureBuilder fb(s.stack.provider(), s.cfg.provider, s.decoupler, metric, pair);
    std::vector<LabeledFeature> features(dev.size());
    parallel_for(dev.size(), s.cfg.concurrency, [&](std::size_t i) {
        features[i] = {fb.build(*dev[i]), derive_label(task, dev[i]->type())};
    });
    FitOptions fit_options;
    fit_options.l2 = a.l2;
    const auto clf = fit(features, metric, task, pair, fit_options);
    const auto text = serialize(clf);
    const auto path = run.write("classifier.txt", text);
    if (!a.output.empty()) write_file(a.output, text);
    run.finish(s.stack.cache_stats(), {{"n_dev", dev.size()}});
    out << (a.output.empty() ? path.string() : a.output) << '\n';
    log_info("run directory: " + run.path().string());
    return kExitOk;
}

struct EvalArgs {
    std::string input;
    std::string tasks = "level1,level2,level3";
    std::string metrics = "fastdetect";
    std::string detectors = "2d";
    std::string pair = "c2-t";
    std::optional<std::size_t> n_dev;
    bool macro = false;
    bool per_domain_clf = false;
    double fpr = 0.05;
    double l2 = 1.0;
};

int cmd_eval(const CommonFlags& flags, const EvalArgs& a, const std::vector<std::string>& argv,
             std::ostream& out) {
    std::vector<DetectionTask> tasks;
    for (const auto& t : split_list(a.tasks)) tasks.push_back(parse_task(t));
    std::vector<MetricKind> metrics;
    for (const auto& m : split_list(a.metrics)) metrics.push_back(parse_metric(m));
    std::vector<DetectorKind> detectors;
    for (const auto& d : split_list(a.detectors)) detectors.push_back(parse_detector(d));
    const auto pair = parse_feature_pair(a.pair);
    const auto docs = load_corpus(a.input);

    Session s(flags.resolve());
    RunDir run(s.cfg, "eval", argv, flags.explicit_run_dir());
    EvalOptions options;
    options.fpr_budget = a.fpr;
    options.macro = a.macro;
    options.per_domain_classifier = a.per_domain_clf;
    options.n_dev = a.n_dev;
    options.seed = s.cfg.seed;
    options.pair = pair;
    options.fit.l2 = a.l2;

    std::vector<std::string> reports;
    for (auto metric : metrics) {
        FeatureBuilder fb(s.stack.provider(), s.cfg.provider, s.decoupler, metric, pair);
        const auto samples = collect_samples(
            docs, [&](const Document& d) { return fb.build(d); }, s.cfg.concurrency);
        const std::string m(to_string(metric));
        run.write("points_" + m + ".tsv", distribution_points_tsv(samples));
        bool summary_written = false;
        for (auto task : tasks) {
            for (auto detector : detectors) {
                const auto report = evaluate_task(task, metric, detector, samples, options);
                const auto stem = std::string(to_string(task)) + "_" + m + "_" +
                                  std::string(to_string(detector));
                run.write("report_" + stem + ".json", report_to_json(report));
                run.write("roc_" + stem + ".tsv", roc_points_tsv(report));
                reports.push_back("report_" + stem + ".json");
                if (!summary_written) {
                    run.write("distribution_" + m + ".tsv",
                              distribution_summary_tsv(report.distribution));
                    summary_written = true;
                }
            }
        }
    }
    run.finish(s.stack.cache_stats());
    for (const auto& r : reports) out << (run.path() / r).string() << '\n';
    log_info("run directory: " + run.path().string());
    return kExitOk;
}

struct BuildArgs {
    std::string input;
    std::string spec;
    std::string domain;
    std::string language;
    std::string templ;
    std::string field;
    std::optional<std::size_t> n_per_type;
    std::string checkpoint_dir;
    std::size_t report_groups = 5;
};

BuildSpec load_build_spec(const BuildArgs& a, const RunConfig& cfg) {
    BuildSpec spec;
    spec.seed = cfg.seed;
    spec.concurrency = cfg.concurrency;
    if (!a.spec.empty()) {
        std::ifstream in(a.spec);
        if (!in) throw UsageError("cannot open build spec " + a.spec);
        try {
            const auto j = nlohmann::json::parse(in);
            read_opt(j, "domain", spec.domain);
            read_opt(j, "language", spec.language);
            read_opt(j, "template", spec.prompt_template_key);
            if (j.contains("field")) spec.field = parse_source_field(j.at("field").get<std::string>());
            read_opt(j, "n_per_type", spec.n_per_type);
            read_opt(j, "seed", spec.seed);
            read_opt(j, "model_pool", spec.model_pool);
            read_opt(j, "max_attempts", spec.max_attempts);
            read_opt(j, "max_length", spec.max_length);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("build spec " + a.spec + ": " + e.what());
        }
    }
    if (!a.domain.empty()) spec.domain = a.domain;
    if (!a.language.empty()) spec.language = a.language;
    if (!a.templ.empty()) spec.prompt_template_key = a.templ;
    if (!a.field.empty()) spec.field = parse_source_field(a.field);
    if (a.n_per_type) spec.n_per_type = *a.n_per_type;
    return spec;
}

int cmd_build(const CommonFlags& flags, const BuildArgs& a, const std::vector<std::string>& argv,
              std::ostream& out) {
    const auto humans = load_corpus(a.input);
    Session s(flags.resolve());
    auto spec = load_build_spec(a, s.cfg);
    try {
        validate_spec(spec, s.prompts);
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    RunDir run(s.cfg, "build", argv, flags.explicit_run_dir());
    spec.checkpoint_dir = a.checkpoint_dir.empty() ? run.path() / "checkpoints" : fs::path(a.checkpoint_dir);

    BuildContext ctx{s.stack.provider(), s.cfg.provider, s.prompts, spec.max_attempts,
                     spec.max_length};
    const auto result = build_dataset(ctx, spec, humans);
    save_corpus(result.corpus, run.path() / "corpus.jsonl");
    run.write("sampling_report.txt", sampling_report(result.corpus, a.report_groups, spec.seed));
    const auto counts = type_counts(result.corpus);
    run.finish(s.stack.cache_stats(),
               {{"groups_built", result.stats.groups_built},
                {"groups_resumed", result.stats.groups_resumed},
                {"groups_dropped", result.stats.groups_dropped},
                {"type_counts", counts}});
    out << (run.path() / "corpus.jsonl").string() << '\n';
    log_info("run directory: " + run.path().string());
    return kExitOk;
}

struct DecoupleArgs {
    std::string input;
};

int cmd_decouple(const CommonFlags& flags, const DecoupleArgs& a,
                 const std::vector<std::string>& argv, std::ostream& out) {
    const auto docs = load_corpus(a.input);
    Session s(flags.resolve());
    RunDir run(s.cfg, "decouple", argv, flags.explicit_run_dir());
    std::vector<DecoupledText> results(docs.size());
    parallel_for(docs.size(), s.cfg.concurrency, [&](std::size_t i) {
        results[i] = s.decoupler.decouple(docs[i].text, docs[i].language);
    });
    std::string lines;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto& r = results[i];
        lines += json{{"id", docs[i].id},
                      {"T", r.original},
                      {"C1", r.content_outline},
                      {"C2", r.content_neutral},
                      {"E1", r.expression_list},
                      {"E2", r.expression_neutral},
                      {"extractor_model", r.extractor_model},
                      {"decode_mode", to_string(r.decode_mode)}}
                     .dump() +
                 "\n";
    }
    const auto path = run.write("decoupled.jsonl", lines);
    run.finish(s.stack.cache_stats());
    out << path.string() << '\n';
    log_info("run directory: " + run.path().string());
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const argv[], std::ostream& out, std::ostream& err) {
    CLI::App app{"AI text risk detection toolkit", "aidetect"};
    app.require_subcommand(1);

    CommonFlags flags;

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "Score documents with one metric or a 2D classifier");
    flags.attach(score);
    score->add_option("input", score_args.input, "Corpus (JSON lines)")->required()->check(CLI::ExistingFile);
    score->add_option("--task", score_args.task, "level1 | level2 | level3");
    score->add_option("--metric", score_args.metric, "logppl | logrank | lrr | fastdetect | binoculars");
    score->add_option("--mode", score_args.mode, "single | 2d");
    score->add_option("--clf", score_args.clf, "Classifier file for 2d mode");
    score->add_option("--pair", score_args.pair, "Feature pair for 2d features: c2-t | c2-e2");
    score->add_option("--fpr", score_args.fpr, "False positive budget for TPR");
    score->add_flag("--report", score_args.report, "Also compute metrics (labels required)");

    FitArgs fit_args;
    auto* fitc = app.add_subcommand("fit", "Fit a 2D classifier on dev documents");
    flags.attach(fitc);
    fitc->add_option("input", fit_args.input, "Dev corpus")->required()->check(CLI::ExistingFile);
    fitc->add_option("--task", fit_args.task);
    fitc->add_option("--metric", fit_args.metric);
    fitc->add_option("--pair", fit_args.pair);
    fitc->add_option("--n-dev", fit_args.n_dev, "Seeded subsample size of the dev split");
    fitc->add_option("--l2", fit_args.l2, "L2 penalty strength")->check(CLI::NonNegativeNumber);
    fitc->add_option("-o,--output", fit_args.output, "Also write the classifier here");

    EvalArgs eval_args;
    auto* evalc = app.add_subcommand("eval", "Evaluate tasks x metrics x detectors");
    flags.attach(evalc);
    evalc->add_option("input", eval_args.input, "Corpus with dev/test splits")->required()->check(CLI::ExistingFile);
    evalc->add_option("--tasks", eval_args.tasks, "Comma-separated tasks");
    evalc->add_option("--metrics", eval_args.metrics, "Comma-separated metrics");
    evalc->add_option("--detectors", eval_args.detectors, "Comma-separated: expression, content, 2d");
    evalc->add_option("--pair", eval_args.pair);
    evalc->add_option("--n-dev", eval_args.n_dev, "Seeded dev subsample for fitting");
    evalc->add_option("--fpr", eval_args.fpr);
    evalc->add_option("--l2", eval_args.l2, "L2 penalty strength")->check(CLI::NonNegativeNumber);
    evalc->add_flag("--macro", eval_args.macro, "Also report the macro average over domains");
    evalc->add_flag("--per-domain-clf", eval_args.per_domain_clf, "Fit one classifier per domain");

    BuildArgs build_args;
    auto* buildc = app.add_subcommand("build", "Build a four-type dataset from human documents");
    flags.attach(buildc);
    buildc->add_option("input", build_args.input, "Human corpus")->required()->check(CLI::ExistingFile);
    buildc->add_option("--spec", build_args.spec, "Build spec (JSON)")->check(CLI::ExistingFile);
    buildc->add_option("--domain", build_args.domain);
    buildc->add_option("--language", build_args.language);
    buildc->add_option("--template", build_args.templ, "Generation prompt key");
    buildc->add_option("--field", build_args.field, "title | prompt");
    buildc->add_option("--n-per-type", build_args.n_per_type);
    buildc->add_option("--checkpoint-dir", build_args.checkpoint_dir, "Resume from / write checkpoints here");
    buildc->add_option("--report-groups", build_args.report_groups, "Groups in the sampling report");

    DecoupleArgs decouple_args;
    auto* decouplec = app.add_subcommand("decouple", "Emit T/C1/C2/E1/E2 for every document");
    flags.attach(decouplec);
    decouplec->add_option("input", decouple_args.input, "Corpus")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    set_log_quiet(flags.quiet);
    const std::vector<std::string> args(argv + 1, argv + argc);

    try {
        if (score->parsed()) return cmd_score(flags, score_args, args, out);
        if (fitc->parsed()) return cmd_fit(flags, fit_args, args, out);
        if (evalc->parsed()) return cmd_eval(flags, eval_args, args, out);
        if (buildc->parsed()) return cmd_build(flags, build_args, args, out);
        if (decouplec->parsed()) return cmd_decouple(flags, decouple_args, args, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace aidetect::cli
