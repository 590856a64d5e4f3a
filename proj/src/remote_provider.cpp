#include "aidetect/remote_provider.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>

#include "aidetect/errors.hpp"
#include "aidetect/text.hpp"
#include "aidetect/wire.hpp"

namespace aidetect {

namespace {

struct Endpoint {
    std::string base;  // scheme://host:port
    std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) {
        throw ConfigError("invalid provider endpoint '" + url + "'");
    }
    return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

}  // namespace

RemoteProvider::RemoteProvider(std::chrono::milliseconds initial_backoff)
    : initial_backoff_(initial_backoff) {}

std::string RemoteProvider::post(const ProviderConfig& cfg, const std::string& body) {
    const auto ep = parse_endpoint(cfg.endpoint);
    httplib::Headers headers;
    if (!cfg.credentials_env.empty()) {
        const char* secret = std::getenv(cfg.credentials_env.c_str());
        if (!secret || !*secret) {
            throw ConfigError("credentials variable " + cfg.credentials_env + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + secret);
    }

    httplib::Client client(ep.base);
    const auto timeout = std::chrono::duration<double>(cfg.request_timeout);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    std::string last_failure;
    auto backoff = initial_backoff_;
    const int attempts = std::max(0, cfg.max_retries) + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post(ep.path, headers, body, "application/json");
        if (!res) {
            last_failure = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status) + ": " + res->body;
            continue;
        }
        if (res->status >= 400) {
            wire::json j;
            try {
                j = wire::json::parse(res->body);
            } catch (const wire::json::exception&) {
                throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
            }
            wire::throw_error(j);
        }
        return res->body;
    }
    throw TransportError("provider unreachable after " + std::to_string(attempts) +
                         " attempts (" + last_failure + ")");
}

std::vector<PositionStats> RemoteProvider::score_text(const ProviderConfig& cfg,
                                                      std::string_view text) {
    if (is_blank(text)) throw InputError("cannot score empty text");
    const auto body = post(cfg, wire::encode_score_request(cfg, text).dump());
    try {
        return wire::decode_positions(wire::json::parse(body));
    } catch (const wire::json::exception& e) {
        throw TransportError(std::string("malformed scoring response: ") + e.what());
    }
}

GenResult RemoteProvider::generate(const ProviderConfig& cfg, const GenRequest& req) {
    validate_request(req);
    const auto body = post(cfg, wire::encode_generate_request(cfg, req).dump());
    GenResult result;
    try {
        result = wire::decode_result(wire::json::parse(body));
    } catch (const wire::json::exception& e) {
        throw TransportError(std::string("malformed generation response: ") + e.what());
    }
    if (is_blank(result.text)) throw GenerationError("empty completion");
    return result;
}

}  // namespace aidetect
