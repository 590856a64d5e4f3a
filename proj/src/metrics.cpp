#include "aidetect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aidetect/errors.hpp"

namespace aidetect {

namespace {

void require_non_empty(std::span<const PositionStats> stats) {
    if (stats.empty()) throw InputError("metric needs at least one scored position");
}

void require_moments(std::span<const PositionStats> stats, std::string_view metric) {
    for (const auto& s : stats) {
        if (!s.has_moments()) {
            throw ConfigError(std::string(metric) +
                              " needs sampling-model moments; configure a sampling model");
        }
    }
}

double mean_logprob(std::span<const PositionStats> stats) {
    double sum = 0.0;
    for (const auto& s : stats) sum += s.logprob;
    return sum / static_cast<double>(stats.size());
}

double mean_log_rank(std::span<const PositionStats> stats) {
    double sum = 0.0;
    for (const auto& s : stats) {
        if (s.rank < 1) {
            throw MetricError("rank must be >= 1, got " + std::to_string(s.rank));
        }
        sum += std::log(static_cast<double>(s.rank));
    }
    return sum / static_cast<double>(stats.size());
}

}  // namespace

std::string_view to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::LogPerplexity: return "logppl";
        case MetricKind::LogRank: return "logrank";
        case MetricKind::Lrr: return "lrr";
        case MetricKind::FastDetect: return "fastdetect";
        case MetricKind::Binoculars: return "binoculars";
    }
    return "?";
}

MetricKind parse_metric(std::string_view s) {
    for (auto k : kAllMetrics) {
        if (to_string(k) == s) return k;
    }
    throw UsageError("unknown metric '" + std::string(s) +
                     "' (expected logppl|logrank|lrr|fastdetect|binoculars)");
}

bool requires_sampling_model(MetricKind kind) {
    return kind == MetricKind::FastDetect || kind == MetricKind::Binoculars;
}

double ppl_score(std::span<const PositionStats> stats) {
    require_non_empty(stats);
    return mean_logprob(stats);
}

double logrank_score(std::span<const PositionStats> stats) {
    require_non_empty(stats);
    return -mean_log_rank(stats) + 0.0;
}

double lrr_score(std::span<const PositionStats> stats) {
    require_non_empty(stats);
    const double denom = mean_log_rank(stats);
    if (denom < kRatioEpsilon) return kLrrCap;
    return std::min(-mean_logprob(stats) / denom, kLrrCap) + 0.0;
}

double fastdetect_score(std::span<const PositionStats> stats) {
    require_non_empty(stats);
    require_moments(stats, "fastdetect");
    double lp = 0.0;
    double mu = 0.0;
    double var = 0.0;
    for (const auto& s : stats) {
        lp += s.logprob;
        mu += *s.sampler_mean_logprob;
        var += *s.sampler_var_logprob;
    }
    if (var < kVarianceEpsilon) return 0.0;
    return (lp - mu) / std::sqrt(var);
}

double binoculars_score(std::span<const PositionStats> stats) {
    require_non_empty(stats);
    require_moments(stats, "binoculars");
    double xent = 0.0;
    for (const auto& s : stats) xent += *s.xent_term;
    xent /= static_cast<double>(stats.size());
    const double ratio = -mean_logprob(stats) / std::max(xent, kRatioEpsilon);
    return -ratio + 0.0;
}

double compute_metric(MetricKind kind, std::span<const PositionStats> stats) {
    switch (kind) {
        case MetricKind::LogPerplexity: return ppl_score(stats);
        case MetricKind::LogRank: return logrank_score(stats);
        case MetricKind::Lrr: return lrr_score(stats);
        case MetricKind::FastDetect: return fastdetect_score(stats);
        case MetricKind::Binoculars: return binoculars_score(stats);
    }
    throw MetricError("unknown metric kind");
}

}  // namespace aidetect
