#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aidetect/errors.hpp"
#include "aidetect/metrics.hpp"
#include "aidetect/stub_provider.hpp"
#include "test_support.hpp"

namespace aidetect {
namespace {

PositionStats pos(double logprob, std::uint32_t rank = 1) {
    PositionStats s;
    s.logprob = logprob;
    s.rank = rank;
    return s;
}

PositionStats pos_m(double logprob, std::uint32_t rank, double mean, double var, double xent) {
    PositionStats s = pos(logprob, rank);
    s.sampler_mean_logprob = mean;
    s.sampler_var_logprob = var;
    s.xent_term = xent;
    return s;
}

std::vector<PositionStats> uniform_stats(std::size_t vocab, std::size_t tokens) {
    StubProvider stub;
    stub.add_model("u", testing::uniform_model(vocab));
    ProviderConfig cfg;
    cfg.scoring_model = "u";
    cfg.sampling_model = "u";
    std::string text;
    for (std::size_t i = 0; i < tokens; ++i) text += "w" + std::to_string(i % vocab) + " ";
    return stub.score_text(cfg, text);
}

TEST(LogPerplexity, Examples) {
    const std::vector<PositionStats> s{pos(-1.0), pos(-2.0), pos(-3.0)};
    EXPECT_DOUBLE_EQ(ppl_score(s), -2.0);
    EXPECT_NEAR(ppl_score(uniform_stats(4, 3)), std::log(0.25), 1e-12);
    EXPECT_EQ(ppl_score(std::vector<PositionStats>{pos(0.0)}), 0.0);
    EXPECT_THROW(ppl_score({}), InputError);
}

TEST(LogRank, Examples) {
    EXPECT_EQ(logrank_score(std::vector<PositionStats>{pos(-1, 1), pos(-1, 1), pos(-1, 1)}), 0.0);
    EXPECT_NEAR(logrank_score(std::vector<PositionStats>{pos(-1, 1), pos(-1, 2), pos(-1, 4)}),
                -(std::log(2.0) + std::log(4.0)) / 3.0, 1e-12);
    EXPECT_NEAR(logrank_score(std::vector<PositionStats>{pos(-1, 8)}), -2.0794, 5e-5);
    EXPECT_THROW(logrank_score(std::vector<PositionStats>{pos(-1, 0)}), MetricError);
}

TEST(Lrr, Examples) {
    EXPECT_NEAR(lrr_score(std::vector<PositionStats>{pos(-std::log(2.0), 2), pos(-std::log(2.0), 2)}),
                1.0, 1e-12);
    EXPECT_EQ(lrr_score(std::vector<PositionStats>{pos(-0.5, 1), pos(-2.0, 1)}), kLrrCap);
    const double expected = 2.0 / ((std::log(2.0) + std::log(8.0)) / 2.0);
    EXPECT_NEAR(lrr_score(std::vector<PositionStats>{pos(-1.0, 2), pos(-3.0, 8)}), expected, 1e-12);
    EXPECT_NEAR(expected, 1.4427, 5e-5);
    EXPECT_THROW(lrr_score({}), InputError);
}

TEST(FastDetect, Examples) {
    EXPECT_EQ(fastdetect_score(std::vector<PositionStats>{pos_m(0, 1, 0, 0, 0), pos_m(0, 1, 0, 0, 0)}),
              0.0);

    // Two-outcome conditional {0.75, 0.25}, observed the likelier token.
    const double lp = std::log(0.75);
    const double mean = 0.75 * std::log(0.75) + 0.25 * std::log(0.25);
    const double var = 0.75 * lp * lp + 0.25 * std::log(0.25) * std::log(0.25) - mean * mean;
    const double score = fastdetect_score(std::vector<PositionStats>{pos_m(lp, 1, mean, var, -mean)});
    EXPECT_NEAR(score, (lp - mean) / std::sqrt(var), 1e-12);
    EXPECT_NEAR(score, 0.577, 5e-4);

    EXPECT_EQ(fastdetect_score(std::vector<PositionStats>{pos_m(-1.0, 1, -1.0, 0.5, 1.0),
                                                          pos_m(-2.0, 2, -2.0, 0.3, 2.0)}),
              0.0);
    EXPECT_THROW(fastdetect_score(std::vector<PositionStats>{pos(-1.0)}), ConfigError);
}

TEST(Binoculars, Examples) {
    EXPECT_NEAR(binoculars_score(uniform_stats(7, 5)), -1.0, 1e-12);
    EXPECT_EQ(binoculars_score(std::vector<PositionStats>{pos_m(0, 1, 0, 0, 0)}), 0.0);
    EXPECT_NEAR(binoculars_score(std::vector<PositionStats>{pos_m(-1, 1, -2, 0, 2), pos_m(-1, 1, -2, 0, 2)}),
                -0.5, 1e-12);
    EXPECT_THROW(binoculars_score(std::vector<PositionStats>{pos(-1.0)}), ConfigError);
}

TEST(ComputeMetric, Dispatch) {
    EXPECT_EQ(compute_metric(MetricKind::LogPerplexity, std::vector<PositionStats>{pos(-2), pos(-2)}), -2.0);
    EXPECT_THROW(compute_metric(MetricKind::FastDetect, std::vector<PositionStats>{pos(-2)}), ConfigError);
    EXPECT_EQ(compute_metric(MetricKind::Lrr, std::vector<PositionStats>{pos(-2, 1), pos(-1, 1)}), kLrrCap);
    for (auto k : kAllMetrics) EXPECT_EQ(parse_metric(to_string(k)), k);
    EXPECT_THROW(parse_metric("glimpse"), UsageError);
    EXPECT_TRUE(requires_sampling_model(MetricKind::FastDetect));
    EXPECT_TRUE(requires_sampling_model(MetricKind::Binoculars));
    EXPECT_FALSE(requires_sampling_model(MetricKind::Lrr));
}

// Random per-position records with self-consistent moments.
std::vector<PositionStats> random_stats(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> lp(-6.0, 0.0);
    std::uniform_real_distribution<double> var(0.0, 3.0);
    std::vector<PositionStats> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = lp(rng);
        out.push_back(pos_m(lp(rng), 1 + static_cast<std::uint32_t>(rng() % 20), m, var(rng), -m));
    }
    return out;
}

TEST(MetricProperties, SignsAndPermutationInvariance) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto stats = random_stats(rng, 1 + rng() % 30);
        EXPECT_LE(logrank_score(stats), 0.0);
        EXPECT_LE(ppl_score(stats), 0.0);
        EXPECT_GE(lrr_score(stats), 0.0);
        std::vector<double> before;
        for (auto k : kAllMetrics) before.push_back(compute_metric(k, stats));
        std::reverse(stats.begin(), stats.end());
        std::rotate(stats.begin(), stats.begin() + stats.size() / 2, stats.end());
        for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
            EXPECT_NEAR(compute_metric(kAllMetrics[k], stats), before[k],
                        1e-9 * std::max(1.0, std::abs(before[k])));
        }
    }
}

TEST(MetricProperties, NoNegativeZero) {
    const std::vector<PositionStats> s{pos_m(0, 1, 0, 0, 0)};
    for (auto k : kAllMetrics) {
        if (k == MetricKind::Lrr) continue;
        EXPECT_FALSE(std::signbit(compute_metric(k, s))) << to_string(k);
    }
}

}  // namespace
}  // namespace aidetect
