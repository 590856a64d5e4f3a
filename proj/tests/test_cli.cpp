#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "aidetect/corpus.hpp"
#include "cli.hpp"
#include "test_support.hpp"

namespace aidetect {
namespace {

using testing::TempDir;
using testing::make_doc;
using testing::read_file;

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "aidetect");
    args.push_back("--quiet");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Random bag of in-vocabulary words; the stub scorer knows w0..w49.
std::string text_for(std::mt19937_64& rng, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += "w" + std::to_string(rng() % 50);
        if ((i + 1) % 8 == 0 || i + 1 == n) s += '.';
    }
    return s;
}

std::filesystem::path labeled_corpus(const TempDir& dir, std::size_t per_type = 6) {
    std::mt19937_64 rng(3);
    std::vector<Document> docs;
    for (auto t : kAllParticipationTypes) {
        for (std::size_t i = 0; i < per_type; ++i) {
            docs.push_back(make_doc("t" + std::to_string(to_int(t)) + "-" + std::to_string(i), to_int(t),
                                    text_for(rng, 20 + rng() % 10), i % 3 == 0 ? "news" : "essay",
                                    i % 2 == 0 ? Split::Dev : Split::Test));
        }
    }
    const auto path = dir / "corpus.jsonl";
    save_corpus(docs, path);
    return path;
}

TEST(Cli, ScoreTwoDWithoutClassifierIsUsageError) {
    TempDir dir;
    const auto corpus = labeled_corpus(dir, 2);
    const auto r = run({"score", corpus.string(), "--mode", "2d", "--run-dir", (dir / "run").string()});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("--clf"), std::string::npos);
}

TEST(Cli, ReportNeedsLabels) {
    TempDir dir;
    std::vector<Document> docs{make_doc("a", std::nullopt, "w1 w2 w3.")};
    save_corpus(docs, dir / "u.jsonl");
    EXPECT_EQ(run({"score", (dir / "u.jsonl").string(), "--report"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"score", (dir / "missing.jsonl").string()}).code, cli::kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"score", (dir / "u.jsonl").string(), "--metric", "nope"}).code, cli::kExitUsage);
}

TEST(Cli, ScoreIsDeterministic) {
    TempDir dir;
    const auto corpus = labeled_corpus(dir, 3);
    const auto a = run({"score", corpus.string(), "--metric", "lrr", "--report", "--run-dir",
                        (dir / "a").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = run({"score", corpus.string(), "--metric", "lrr", "--report", "--run-dir",
                        (dir / "b").string()});
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(read_file(dir / "a" / "scores.jsonl"), a.out);
    EXPECT_EQ(read_file(dir / "a" / "metrics.json"), read_file(dir / "b" / "metrics.json"));
    const auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
    EXPECT_EQ(manifest["command"], "score");
    EXPECT_EQ(manifest["config"]["provider"]["scoring_model"], "stub-scorer");
    EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 64u);
}

TEST(Cli, FitSubsampleReproducibleAndScores) {
    TempDir dir;
    const auto corpus = labeled_corpus(dir, 6);
    const auto a = run({"fit", corpus.string(), "--n-dev", "10", "--seed", "4", "-o",
                        (dir / "a.clf").string(), "--run-dir", (dir / "fa").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = run({"fit", corpus.string(), "--n-dev", "10", "--seed", "4", "-o",
                        (dir / "b.clf").string(), "--run-dir", (dir / "fb").string()});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(read_file(dir / "a.clf"), read_file(dir / "b.clf"));
    EXPECT_EQ(read_file(dir / "fa" / "classifier.txt"), read_file(dir / "a.clf"));

    const auto s = run({"score", corpus.string(), "--mode", "2d", "--clf", (dir / "a.clf").string(),
                        "--run-dir", (dir / "s").string()});
    EXPECT_EQ(s.code, 0) << s.err;
    EXPECT_EQ(static_cast<std::size_t>(std::count(s.out.begin(), s.out.end(), '\n')), 24u);

    const auto wrong = run({"score", corpus.string(), "--mode", "2d", "--metric", "lrr", "--clf",
                            (dir / "a.clf").string(), "--run-dir", (dir / "w").string()});
    EXPECT_EQ(wrong.code, cli::kExitUsage);
}

TEST(Cli, FitErrors) {
    TempDir dir;
    const auto corpus = labeled_corpus(dir, 6);
    EXPECT_EQ(run({"fit", corpus.string(), "--n-dev", "500", "--run-dir", (dir / "r").string()}).code,
              cli::kExitUsage);

    std::vector<Document> one_class;
    for (int i = 0; i < 6; ++i) one_class.push_back(make_doc("d" + std::to_string(i), 0, "w1 w2 w3 w4 w5."));
    save_corpus(one_class, dir / "one.jsonl");
    const auto r = run({"fit", (dir / "one.jsonl").string(), "--run-dir", (dir / "r2").string()});
    EXPECT_EQ(r.code, cli::kExitData);
}

TEST(Cli, EvalWritesReportsAndManifest) {
    TempDir dir;
    const auto corpus = labeled_corpus(dir, 6);
    const auto run_dir = dir / "eval";
    const auto r = run({"eval", corpus.string(), "--metrics", "fastdetect,lrr", "--run-dir",
                        run_dir.string(), "--macro"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::size_t reports = 0;
    for (const auto& e : std::filesystem::directory_iterator(run_dir)) {
        reports += e.path().filename().string().rfind("report_", 0) == 0;
    }
    EXPECT_EQ(reports, 6u);
    EXPECT_TRUE(std::filesystem::exists(run_dir / "manifest.json"));
    EXPECT_TRUE(std::filesystem::exists(run_dir / "points_lrr.tsv"));
    EXPECT_TRUE(std::filesystem::exists(run_dir / "roc_level3_fastdetect_2d.tsv"));
    const auto rep = nlohmann::json::parse(read_file(run_dir / "report_level2_lrr_2d.json"));
    EXPECT_EQ(rep["overall"]["n_test"], 12u);
    EXPECT_TRUE(rep["overall"].contains("macro_auroc"));
}

TEST(Cli, EvalWarmCacheIsIdempotent) {
    TempDir dir;
    const auto corpus = labeled_corpus(dir, 4);
    const auto cache = (dir / "cache").string();
    for (const char* name : {"one", "two"}) {
        const auto r = run({"eval", corpus.string(), "--tasks", "level2", "--cache-dir", cache,
                            "--run-dir", (dir / name).string()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    EXPECT_EQ(read_file(dir / "one" / "report_level2_fastdetect_2d.json"),
              read_file(dir / "two" / "report_level2_fastdetect_2d.json"));
    const auto m = nlohmann::json::parse(read_file(dir / "two" / "manifest.json"));
    EXPECT_EQ(m["cache"]["misses"], 0);
    EXPECT_GT(m["cache"]["hits"].get<int>(), 0);
}

TEST(Cli, BuildProducesFourTypes) {
    TempDir dir;
    std::mt19937_64 rng(1);
    std::vector<Document> humans;
    for (int i = 0; i < 8; ++i) {
        auto d = make_doc("h" + std::to_string(i), std::nullopt, text_for(rng, 60));
        d.meta = GenerationMeta{};
        d.meta->title = "Topic " + std::to_string(i);
        humans.push_back(d);
    }
    save_corpus(humans, dir / "humans.jsonl");
    const auto r = run({"build", (dir / "humans.jsonl").string(), "--domain", "essay", "--n-per-type",
                        "8", "--seed", "2", "--run-dir", (dir / "b").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto corpus = load_corpus(dir / "b" / "corpus.jsonl");
    EXPECT_EQ(corpus.size(), 32u);
    EXPECT_EQ(type_counts(corpus), (std::array<std::size_t, 4>{8, 8, 8, 8}));
    EXPECT_TRUE(std::filesystem::exists(dir / "b" / "sampling_report.txt"));

    EXPECT_EQ(run({"build", (dir / "humans.jsonl").string(), "--template", "generate.poem",
                   "--run-dir", (dir / "c").string()})
                  .code,
              cli::kExitUsage);
}

TEST(Cli, DecoupleEmitsAllFeatures) {
    TempDir dir;
    std::mt19937_64 rng(2);
    std::vector<Document> docs{make_doc("x", 0, text_for(rng, 30)), make_doc("y", 3, text_for(rng, 25))};
    save_corpus(docs, dir / "c.jsonl");
    const auto r = run({"decouple", (dir / "c.jsonl").string(), "--run-dir", (dir / "d").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(read_file(dir / "d" / "decoupled.jsonl"));
    std::size_t n = 0;
    for (std::string line; std::getline(lines, line); ++n) {
        const auto j = nlohmann::json::parse(line);
        for (const char* key : {"id", "T", "C1", "C2", "E1", "E2", "extractor_model", "decode_mode"}) {
            EXPECT_TRUE(j.contains(key)) << key;
        }
        EXPECT_EQ(j["T"], docs[n].text);
    }
    EXPECT_EQ(n, 2u);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(cli::exit_code(ErrorCategory::Usage), 2);
    EXPECT_EQ(cli::exit_code(ErrorCategory::Data), 3);
    EXPECT_EQ(cli::exit_code(ErrorCategory::Io), 3);
    EXPECT_EQ(cli::exit_code(ErrorCategory::Provider), 4);
    EXPECT_EQ(run({"--help"}).code, 0);
}

}  // namespace
}  // namespace aidetect
