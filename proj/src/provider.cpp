#include "aidetect/provider.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aidetect/errors.hpp"

namespace aidetect {

namespace {

double safe_log(double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::max();
}

}  // namespace

PositionStats position_stats(std::span<const double> scoring_probs,
                             std::span<const double> sampling_probs, TokenId observed) {
    if (observed >= scoring_probs.size()) {
        throw InputError("observed token id " + std::to_string(observed) +
                         " outside vocabulary of size " +
                         std::to_string(scoring_probs.size()));
    }
    PositionStats s;
    s.token_id = observed;
    const double p_obs = scoring_probs[observed];
    s.logprob = std::min(0.0, safe_log(p_obs));

    std::int64_t better = 0;
    for (double p : scoring_probs) {
        if (p > p_obs) ++better;
    }
    s.rank = better + 1;

    if (!sampling_probs.empty()) {
        if (sampling_probs.size() != scoring_probs.size()) {
            throw ConfigError("sampling and scoring distributions differ in vocabulary size");
        }
        // Moments of log p_scoring(X) with X ~ p_sampling. Zero-probability
        // sampling outcomes contribute nothing.
        double mean = 0.0;
        double second = 0.0;
        for (std::size_t j = 0; j < scoring_probs.size(); ++j) {
            const double q = sampling_probs[j];
            if (q <= 0.0) continue;
            const double lp = safe_log(scoring_probs[j]);
            mean += q * lp;
            second += q * lp * lp;
        }
        mean = std::min(0.0, mean);
        s.sampler_mean_logprob = mean;
        s.sampler_var_logprob = std::max(0.0, second - mean * mean);
        s.xent_term = -mean;
    }
    return s;
}

void validate_request(const GenRequest& req) {
    auto fail = [](const std::string& what) { throw InputError("generation request: " + what); };
    if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) fail("temperature outside [0, 2]");
    if (!(req.top_p > 0.0 && req.top_p <= 1.0)) fail("top_p outside (0, 1]");
    if (!(req.frequency_penalty >= 0.0 && req.frequency_penalty <= 1.0)) {
        fail("frequency_penalty outside [0, 1]");
    }
    if (!(req.presence_penalty >= 0.0 && req.presence_penalty <= 1.0)) {
        fail("presence_penalty outside [0, 1]");
    }
    if (req.max_length < 1) fail("max_length must be at least 1");
    if (req.prompt.empty()) fail("empty prompt");
}

struct LimitedProvider::Slot {
    explicit Slot(LimitedProvider& p) : owner(p) {
        owner.slots_.acquire();
        const auto now = ++owner.in_flight_;
        auto peak = owner.peak_.load();
        while (now > peak && !owner.peak_.compare_exchange_weak(peak, now)) {
        }
    }
    ~Slot() {
        --owner.in_flight_;
        owner.slots_.release();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

    LimitedProvider& owner;
};

LimitedProvider::LimitedProvider(Provider& inner, std::ptrdiff_t max_in_flight)
    : inner_(inner), slots_(max_in_flight < 1 ? 1 : max_in_flight) {}

std::vector<PositionStats> LimitedProvider::score_text(const ProviderConfig& cfg,
                                                       std::string_view text) {
    Slot slot(*this);
    return inner_.score_text(cfg, text);
}

GenResult LimitedProvider::generate(const ProviderConfig& cfg, const GenRequest& req) {
    Slot slot(*this);
    return inner_.generate(cfg, req);
}

}  // namespace aidetect
