#include <gtest/gtest.h>

#include "aidetect/corpus.hpp"
#include "aidetect/errors.hpp"
#include "test_support.hpp"

namespace aidetect {
namespace {

using testing::make_doc;
using testing::read_file;
using testing::TempDir;
using testing::write_text;

TEST(DeriveLabel, TaskTargets) {
    using PT = ParticipationType;
    EXPECT_EQ(derive_label(DetectionTask::Level2, PT::AiContentHumanExpression), Label::Positive);
    EXPECT_EQ(derive_label(DetectionTask::Level1, PT::HumanContentHumanExpression), Label::Negative);
    EXPECT_EQ(derive_label(DetectionTask::Level3, PT::HumanContentAiExpression), Label::Negative);
}

TEST(DeriveLabel, MonotoneInRisk) {
    for (auto t : kAllParticipationTypes) {
        if (derive_label(DetectionTask::Level3, t) == Label::Positive) {
            EXPECT_EQ(derive_label(DetectionTask::Level2, t), Label::Positive);
        }
        if (derive_label(DetectionTask::Level2, t) == Label::Positive) {
            EXPECT_EQ(derive_label(DetectionTask::Level1, t), Label::Positive);
        }
    }
}

TEST(ParticipationTypeTest, RejectsOutOfRange) {
    EXPECT_THROW(participation_type_from_int(4), ValidationError);
    EXPECT_THROW(participation_type_from_int(-1), ValidationError);
    EXPECT_EQ(to_int(participation_type_from_int(2)), 2);
}

TEST(Task, ParseAndPrint) {
    for (auto t : kAllTasks) EXPECT_EQ(parse_task(to_string(t)), t);
    EXPECT_THROW(parse_task("level4"), UsageError);
}

TEST(LoadCorpus, ThreeLinesInOrder) {
    TempDir dir;
    const auto path = dir / "c.jsonl";
    write_text(path,
               R"({"id":"a","domain":"essay","language":"en","type":0,"text":"x y","split":"dev"})" "\n"
               R"({"id":"b","domain":"news","language":"de","type":3,"text":"z","split":"test"})" "\n"
               R"({"id":"c","domain":"essay","language":"en","text":"unlabeled"})" "\n");
    const auto docs = load_corpus(path);
    ASSERT_EQ(docs.size(), 3u);
    EXPECT_EQ(docs[0].id, "a");
    EXPECT_EQ(docs[1].id, "b");
    EXPECT_EQ(docs[2].id, "c");
    EXPECT_EQ(docs[1].type(), ParticipationType::AiContentAiExpression);
    EXPECT_EQ(docs[0].split, Split::Dev);
    EXPECT_FALSE(docs[2].ptype.has_value());
}

TEST(LoadCorpus, DuplicateIdCitesLine) {
    TempDir dir;
    const auto path = dir / "dup.jsonl";
    write_text(path, R"({"id":"a","domain":"d","language":"en","type":0,"text":"x"})" "\n"
                     R"({"id":"a","domain":"d","language":"en","type":1,"text":"y"})" "\n");
    try {
        load_corpus(path);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(LoadCorpus, MalformedLineIsParseErrorWithLine) {
    TempDir dir;
    const auto path = dir / "bad.jsonl";
    write_text(path, R"({"id":"a","domain":"d","language":"en","type":0,"text":"x"})" "\n"
                     "\n"
                     "{not json\n");
    try {
        load_corpus(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(LoadCorpus, RejectsBlankTextAndBadType) {
    TempDir dir;
    write_text(dir / "blank.jsonl", R"({"id":"a","domain":"d","language":"en","type":0,"text":"   "})" "\n");
    EXPECT_THROW(load_corpus(dir / "blank.jsonl"), Error);
    write_text(dir / "type.jsonl", R"({"id":"a","domain":"d","language":"en","type":7,"text":"x"})" "\n");
    EXPECT_THROW(load_corpus(dir / "type.jsonl"), Error);
}

TEST(LoadCorpus, EmptyFileIsEmptyList) {
    TempDir dir;
    write_text(dir / "e.jsonl", "");
    EXPECT_TRUE(load_corpus(dir / "e.jsonl").empty());
}

TEST(LoadCorpus, UnknownMixedIsUnlabeled) {
    TempDir dir;
    write_text(dir / "m.jsonl",
               R"({"id":"a","domain":"d","language":"en","type":"unknown-mixed","text":"x"})" "\n");
    const auto docs = load_corpus(dir / "m.jsonl");
    ASSERT_TRUE(docs[0].ptype.has_value());
    EXPECT_TRUE(docs[0].ptype->is_mixed());
    EXPECT_FALSE(docs[0].is_labeled());
    EXPECT_THROW(docs[0].type(), ValidationError);
}

std::vector<Document> sample_docs(std::size_t n) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        auto d = testing::make_doc("doc-" + std::to_string(i), static_cast<int>(i % 4),
                                   "text number " + std::to_string(i), i % 2 ? "news" : "essay",
                                   i % 3 ? Split::Dev : Split::Test);
        if (i % 2) {
            GenerationMeta m;
            m.source_model = "gpt-4o";
            m.temperature = 1.2;
            m.top_p = 0.96;
            m.frequency_penalty = 1.0;
            m.method = GenerationMethod::Mimic;
            m.title = "Title " + std::to_string(i);
            m.source_id = "src-" + std::to_string(i);
            d.meta = m;
        }
        docs.push_back(d);
    }
    return docs;
}

TEST(SaveCorpus, RoundTripIsIdentityAndByteStable) {
    TempDir dir;
    const auto docs = sample_docs(10);
    save_corpus(docs, dir / "a.jsonl");
    const auto loaded = load_corpus(dir / "a.jsonl");
    EXPECT_EQ(loaded, docs);
    save_corpus(loaded, dir / "b.jsonl");
    EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
}

TEST(SaveCorpus, NonAsciiPreserved) {
    TempDir dir;
    std::vector<Document> docs{make_doc("u", 0, "Ünïcödé · 漢字 “quotes” 😀\nline two", "news")};
    save_corpus(docs, dir / "u.jsonl");
    EXPECT_EQ(load_corpus(dir / "u.jsonl")[0].text, docs[0].text);
}

TEST(SaveCorpus, EmptyListGivesEmptyFile) {
    TempDir dir;
    save_corpus({}, dir / "e.jsonl");
    EXPECT_TRUE(std::filesystem::exists(dir / "e.jsonl"));
    EXPECT_TRUE(load_corpus(dir / "e.jsonl").empty());
}

TEST(SaveCorpus, UnwritablePathIsIoError) {
    TempDir dir;
    EXPECT_THROW(save_corpus(sample_docs(1), dir / "missing" / "x.jsonl"), IoError);
}

TEST(Meta, ParameterGrid) {
    GenerationMeta m;
    m.temperature = 1.0;
    m.top_p = 0.96;
    EXPECT_TRUE(meta_params_in_range(m));
    m.temperature = 0.9;
    EXPECT_FALSE(meta_params_in_range(m));
    m.temperature = 0.8;
    m.presence_penalty = 1.5;
    EXPECT_FALSE(meta_params_in_range(m));
}

TEST(TypeCounts, CountsLabeledOnly) {
    auto docs = sample_docs(8);
    docs.push_back(make_doc("x", std::nullopt, "t"));
    const auto counts = type_counts(docs);
    EXPECT_EQ(counts, (std::array<std::size_t, 4>{2, 2, 2, 2}));
}

}  // namespace
}  // namespace aidetect
