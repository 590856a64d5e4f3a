#pragma once
// Zero-shot detector metrics over per-token scoring statistics.
//
// Every score is oriented so that HIGHER means more AI-like:
//   log-perplexity  mean log p(x_i)
//   log-rank        -mean ln rank_i
//   LRR             (-mean log p) / mean ln rank
//   Fast-Detect     (sum log p - sum mu_i) / sqrt(sum sigma_i^2)
//   Binoculars      -(-mean log p) / mean cross-entropy

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "aidetect/provider.hpp"

namespace aidetect {

enum class MetricKind : std::uint8_t { LogPerplexity, LogRank, Lrr, FastDetect, Binoculars };

inline constexpr std::array<MetricKind, 5> kAllMetrics = {
    MetricKind::LogPerplexity, MetricKind::LogRank, MetricKind::Lrr,
    MetricKind::FastDetect, MetricKind::Binoculars};

std::string_view to_string(MetricKind kind);
MetricKind parse_metric(std::string_view s);  // logppl|logrank|lrr|fastdetect|binoculars

// Fast-Detect and Binoculars consume sampling-model moments.
bool requires_sampling_model(MetricKind kind);

inline constexpr double kRatioEpsilon = 1e-6;
inline constexpr double kVarianceEpsilon = 1e-12;
inline constexpr double kLrrCap = 1e6;

double ppl_score(std::span<const PositionStats> stats);
double logrank_score(std::span<const PositionStats> stats);
// Returns kLrrCap whenever the log-rank denominator falls below kRatioEpsilon.
double lrr_score(std::span<const PositionStats> stats);
double fastdetect_score(std::span<const PositionStats> stats);
double binoculars_score(std::span<const PositionStats> stats);

double compute_metric(MetricKind kind, std::span<const PositionStats> stats);

}  // namespace aidetect
