#pragma once

#include <chrono>
#include <string>

#include "aidetect/provider.hpp"

namespace aidetect {

// Talks to a provider over HTTP using the wire contract (see wire.hpp).
// Connection failures and 5xx responses are retried up to cfg.max_retries
// times with exponential backoff; 4xx responses are mapped back to the
// matching error type and never retried.
class RemoteProvider final : public Provider {
public:
    explicit RemoteProvider(std::chrono::milliseconds initial_backoff = std::chrono::milliseconds(100));

    std::vector<PositionStats> score_text(const ProviderConfig& cfg,
                                          std::string_view text) override;
    GenResult generate(const ProviderConfig& cfg, const GenRequest& req) override;

private:
    std::string post(const ProviderConfig& cfg, const std::string& body);

    std::chrono::milliseconds initial_backoff_;
};

}  // namespace aidetect
