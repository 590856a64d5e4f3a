#include <gtest/gtest.h>

#include <array>
#include <chrono>
#include <functional>
#include <cmath>
#include <numeric>
#include <thread>

#include "aidetect/errors.hpp"
#include "aidetect/language_model.hpp"
#include "aidetect/provider.hpp"
#include "aidetect/stub_provider.hpp"
#include "aidetect/text.hpp"
#include "test_support.hpp"

namespace aidetect {
namespace {

using testing::fixed_model;
using testing::uniform_model;

ProviderConfig same_model_cfg(const std::string& id = "m") {
    ProviderConfig cfg;
    cfg.scoring_model = id;
    cfg.sampling_model = id;
    return cfg;
}

// Direct enumeration of E_q[ln p] and Var_q[ln p].
struct Moments {
    double mean = 0.0;
    double var = 0.0;
};
Moments enumerate_moments(const std::vector<double>& p, const std::vector<double>& q) {
    Moments m;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (q[j] > 0) m.mean += q[j] * std::log(p[j]);
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (q[j] > 0) m.var += q[j] * (std::log(p[j]) - m.mean) * (std::log(p[j]) - m.mean);
    }
    return m;
}

TEST(PositionStats, TwoOutcomeEnumeration) {
    const std::vector<double> p{0.75, 0.25};
    const auto s = position_stats(p, p, 0);
    const auto oracle = enumerate_moments(p, p);
    EXPECT_NEAR(s.logprob, std::log(0.75), 1e-12);
    EXPECT_NEAR(*s.sampler_mean_logprob, oracle.mean, 1e-12);
    EXPECT_NEAR(*s.sampler_var_logprob, oracle.var, 1e-12);
    EXPECT_NEAR(*s.xent_term, -oracle.mean, 1e-12);
    EXPECT_NEAR(*s.sampler_mean_logprob, -0.5623, 5e-5);
    EXPECT_NEAR(*s.sampler_var_logprob, 0.2263, 5e-5);
    EXPECT_EQ(s.rank, 1u);
}

TEST(PositionStats, NoSamplerMeansNoMoments) {
    const std::vector<double> p{0.5, 0.5};
    const auto s = position_stats(p, {}, 1);
    EXPECT_FALSE(s.has_moments());
    EXPECT_EQ(s.rank, 1u);
}

TEST(PositionStats, RandomDistributionsMatchOracle) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t v = 2 + rng() % 12;
        std::vector<double> p(v), q(v);
        for (auto& x : p) x = std::floor(u(rng) * 4) + 1;  // ties are common
        for (auto& x : q) x = u(rng);
        const double sp = std::accumulate(p.begin(), p.end(), 0.0);
        const double sq = std::accumulate(q.begin(), q.end(), 0.0);
        for (auto& x : p) x /= sp;
        for (auto& x : q) x /= sq;
        const TokenId obs = static_cast<TokenId>(rng() % v);

        const auto s = position_stats(p, q, obs);
        const auto m = enumerate_moments(p, q);
        EXPECT_NEAR(*s.sampler_mean_logprob, m.mean, 1e-10);
        EXPECT_NEAR(*s.sampler_var_logprob, m.var, 1e-10);
        EXPECT_GE(*s.sampler_var_logprob, 0.0);
        EXPECT_GE(*s.xent_term, 0.0);
        EXPECT_LE(s.logprob, 0.0);

        std::size_t higher = 0;
        for (double x : p) higher += x > p[obs];
        EXPECT_EQ(s.rank, higher + 1);
        if (s.rank == 1) {
            for (double x : p) EXPECT_GE(s.logprob, std::log(x) - 1e-15);
        }

        // Sampling == scoring: xent is the entropy and mean = -xent.
        const auto self = position_stats(p, p, obs);
        double entropy = 0.0;
        for (double x : p) entropy -= x * std::log(x);
        EXPECT_NEAR(*self.xent_term, entropy, 1e-10);
        EXPECT_NEAR(*self.sampler_mean_logprob, -*self.xent_term, 1e-12);
    }
}

TEST(StubScore, UniformVocabFour) {
    StubProvider stub;
    stub.add_model("m", uniform_model(4));
    const auto stats = stub.score_text(same_model_cfg(), "w0 w1 w2");
    ASSERT_EQ(stats.size(), 2u);
    for (const auto& s : stats) {
        EXPECT_NEAR(s.logprob, std::log(0.25), 1e-12);
        EXPECT_EQ(s.rank, 1u);
        EXPECT_NEAR(*s.sampler_var_logprob, 0.0, 1e-12);
        EXPECT_NEAR(*s.xent_term, std::log(4.0), 1e-12);
    }
    EXPECT_EQ(stats[0].token_text, "w1");
    EXPECT_EQ(stats[1].token_id, 2u);
}

TEST(StubScore, DeterministicObservedToken) {
    StubProvider stub;
    stub.add_model("m", fixed_model({1.0, 0.0}));
    for (const auto& s : stub.score_text(same_model_cfg(), "w0 w0 w0")) {
        EXPECT_EQ(s.logprob, 0.0);
        EXPECT_EQ(s.rank, 1u);
        EXPECT_EQ(*s.sampler_var_logprob, 0.0);
        EXPECT_EQ(*s.xent_term, 0.0);
    }
}

TEST(StubScore, TwoOutcomeModel) {
    StubProvider stub;
    stub.add_model("m", fixed_model({0.75, 0.25}));
    const auto stats = stub.score_text(same_model_cfg(), "w1 w0");
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_NEAR(stats[0].logprob, -0.2877, 5e-5);
    EXPECT_NEAR(*stats[0].sampler_mean_logprob, -0.5623, 5e-5);
    EXPECT_NEAR(*stats[0].sampler_var_logprob, 0.2263, 5e-5);
}

TEST(StubScore, Errors) {
    StubProvider stub;
    stub.add_model("m4", uniform_model(4));
    stub.add_model("m5", uniform_model(5));
    stub.add_model("short", std::make_shared<FunctionModel>(
                                VocabTokenizer::numbered(4),
                                [](std::span<const TokenId>) { return std::vector<double>(4, 0.25); },
                                3));
    ProviderConfig mismatch;
    mismatch.scoring_model = "m4";
    mismatch.sampling_model = "m5";
    EXPECT_THROW(stub.score_text(mismatch, "w0 w1"), ConfigError);

    ProviderConfig unknown;
    unknown.scoring_model = "nope";
    EXPECT_THROW(stub.score_text(unknown, "w0 w1"), ConfigError);

    ProviderConfig shortcfg;
    shortcfg.scoring_model = "short";
    try {
        stub.score_text(shortcfg, "w0 w1 w2 w3 w0");
        FAIL() << "expected TruncationError";
    } catch (const TruncationError& e) {
        EXPECT_EQ(e.limit(), 3u);
        EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
    }

    ProviderConfig ok;
    ok.scoring_model = "m4";
    EXPECT_THROW(stub.score_text(ok, ""), InputError);
    EXPECT_THROW(stub.score_text(ok, "w0"), InputError);
}

TEST(StubScore, DeterministicForFixedInput) {
    StubProvider stub;
    auto model = std::make_shared<SyntheticBigramModel>(20, 3);
    stub.add_model("a", model);
    stub.add_model("b", std::make_shared<SyntheticBigramModel>(model->perturbed(4, 0.5)));
    ProviderConfig cfg;
    cfg.scoring_model = "a";
    cfg.sampling_model = "b";
    EXPECT_EQ(stub.score_text(cfg, "w1 w5 w7 w2"), stub.score_text(cfg, "w1 w5 w7 w2"));
}

TEST(StubGenerate, EchoAndErrors) {
    StubProvider stub(echo_generator("OK"), 100);
    ProviderConfig cfg;
    cfg.scoring_model = "m";
    GenRequest req;
    req.prompt = "anything";
    req.max_length = 10;
    EXPECT_EQ(stub.generate(cfg, req).text, "OK");

    req.max_length = 101;
    EXPECT_THROW(stub.generate(cfg, req), GenerationError);

    StubProvider blank(echo_generator("   "));
    req.max_length = 10;
    EXPECT_THROW(blank.generate(cfg, req), GenerationError);
}

TEST(StubGenerate, ValidatesRanges) {
    StubProvider stub;
    ProviderConfig cfg;
    GenRequest req;
    req.prompt = "p";
    for (auto mutate : std::vector<std::function<void(GenRequest&)>>{
             [](GenRequest& r) { r.temperature = -0.1; },
             [](GenRequest& r) { r.top_p = 0.0; },
             [](GenRequest& r) { r.top_p = 1.5; },
             [](GenRequest& r) { r.frequency_penalty = 1.5; },
             [](GenRequest& r) { r.presence_penalty = -1.0; },
             [](GenRequest& r) { r.max_length = 0; },
             [](GenRequest& r) { r.prompt.clear(); }}) {
        GenRequest bad = req;
        mutate(bad);
        EXPECT_THROW(stub.generate(cfg, bad), InputError);
    }
}

TEST(StubGenerate, SeededLmGeneratorIsDeterministic) {
    auto model = std::make_shared<SyntheticBigramModel>(30, 9);
    StubProvider stub(lm_generator(model));
    ProviderConfig cfg;
    GenRequest req;
    req.prompt = "Write a student essay (no title) in 40 words";
    req.seed = 17;
    const auto a = stub.generate(cfg, req).text;
    const auto b = stub.generate(cfg, req).text;
    EXPECT_EQ(a, b);
    EXPECT_EQ(word_count(a), 40u);
    req.seed = 18;
    EXPECT_NE(stub.generate(cfg, req).text, a);
}

TEST(StubGenerate, LongOutputIsCut) {
    StubProvider stub(echo_generator("a b c d e f"));
    ProviderConfig cfg;
    GenRequest req;
    req.prompt = "p";
    req.max_length = 3;
    const auto r = stub.generate(cfg, req);
    EXPECT_EQ(r.text, "a b c");
    EXPECT_EQ(r.finish_reason, "length");
}

TEST(PromptPayload, StripsInstructionAndReference) {
    EXPECT_EQ(prompt_payload("Do this:\nthe text\n\n# Reference Text:\nref"), "the text");
    EXPECT_EQ(prompt_payload("no newline"), "no newline");
}

TEST(LanguageModel, SoftmaxAndAdjust) {
    const std::vector<double> logits{1.0, 2.0, 3.0};
    const auto p = softmax(logits);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    EXPECT_GT(p[2], p[1]);

    const auto greedy = adjust_distribution(p, 0.0, 1.0);
    EXPECT_EQ(greedy, (std::vector<double>{0.0, 0.0, 1.0}));

    const auto nucleus = adjust_distribution(std::vector<double>{0.5, 0.3, 0.2}, 1.0, 0.6);
    EXPECT_NEAR(nucleus[0], 0.5 / 0.8, 1e-12);
    EXPECT_NEAR(nucleus[1], 0.3 / 0.8, 1e-12);
    EXPECT_EQ(nucleus[2], 0.0);

    const auto hot = adjust_distribution(std::vector<double>{0.9, 0.1}, 2.0, 1.0);
    EXPECT_LT(hot[0], 0.9);
}

TEST(LanguageModel, SampleTokenFrequencies) {
    std::mt19937_64 rng(5);
    const std::vector<double> p{0.2, 0.5, 0.3};
    std::array<int, 3> counts{};
    for (int i = 0; i < 20000; ++i) ++counts[sample_token(p, rng)];
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(counts[k] / 20000.0, p[k], 0.015);
}

TEST(LanguageModel, BigramRowsAreDistributions) {
    SyntheticBigramModel m(10, 1);
    for (TokenId prev = 0; prev < 10; ++prev) {
        const std::vector<TokenId> prefix{prev};
        const auto p = m.next_token_probs(prefix);
        EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    }
    const auto other = m.perturbed(2, 0.5);
    EXPECT_EQ(other.tokenizer().identity(), m.tokenizer().identity());
    const std::vector<TokenId> prefix{0};
    EXPECT_NE(other.next_token_probs(prefix), m.next_token_probs(prefix));
}

TEST(Tokenizer, UnknownWordsHashStably) {
    const auto tok = VocabTokenizer::numbered(8);
    EXPECT_EQ(tok.encode("w3 w7."), (std::vector<TokenId>{3, 7}));
    const auto a = tok.encode("hello world");
    EXPECT_EQ(a, tok.encode("hello   world"));
    for (auto id : a) EXPECT_LT(id, 8u);
}

// Counts concurrent calls to check the in-flight limit.
class SlowProvider final : public Provider {
public:
    std::vector<PositionStats> score_text(const ProviderConfig&, std::string_view) override {
        enter();
        return {};
    }
    GenResult generate(const ProviderConfig&, const GenRequest&) override {
        enter();
        return {"x", "stop"};
    }
    std::size_t peak() const { return peak_; }

private:
    void enter() {
        const auto now = ++active_;
        std::size_t prev = peak_.load();
        while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(15));
        --active_;
    }
    std::atomic<std::size_t> active_{0};
    std::atomic<std::size_t> peak_{0};
};

TEST(LimitedProvider, CapsInFlightCalls) {
    SlowProvider slow;
    LimitedProvider limited(slow, 2);
    ProviderConfig cfg;
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] { limited.score_text(cfg, "a b"); });
    }
    for (auto& t : threads) t.join();
    EXPECT_LE(slow.peak(), 2u);
    EXPECT_LE(limited.peak_in_flight(), 2u);
    EXPECT_GE(slow.peak(), 1u);
}

}  // namespace
}  // namespace aidetect
