#include "aidetect/cache.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "aidetect/errors.hpp"
#include "aidetect/text.hpp"
#include "aidetect/wire.hpp"

namespace aidetect {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "aidetect-cache-v1";

std::string key_of(const wire::json& request) {
    wire::json keyed = {{"format", kFormat}, {"request", request}};
    return sha256_hex(keyed.dump());
}

std::optional<std::string> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

CachedProvider::CachedProvider(Provider& inner, fs::path dir)
    : inner_(inner), dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::string CachedProvider::score_key(const ProviderConfig& cfg, std::string_view text) {
    return key_of(wire::encode_score_request(cfg, text));
}

std::string CachedProvider::generate_key(const ProviderConfig& cfg, const GenRequest& req) {
    return key_of(wire::encode_generate_request(cfg, req));
}

fs::path CachedProvider::entry_path(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
}

std::mutex& CachedProvider::key_mutex(const std::string& key) {
    std::lock_guard lock(locks_mutex_);
    auto& slot = locks_[key];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

template <typename Compute, typename Encode, typename Decode>
auto CachedProvider::lookup_or_compute(const std::string& key, Compute&& compute,
                                       Encode&& encode, Decode&& decode) {
    std::lock_guard lock(key_mutex(key));
    const auto path = entry_path(key);
    if (auto raw = read_file(path)) {
        try {
            const auto j = wire::json::parse(*raw);
            if (j.at("key").get<std::string>() != key) throw std::runtime_error("key mismatch");
            auto value = decode(j.at("result"));
            ++hits_;
            return value;
        } catch (const std::exception& e) {
            ++discarded_;
            log_warning("discarding corrupted cache entry " + path.string() + " (" + e.what() + ")");
            std::error_code ec;
            fs::remove(path, ec);
        }
    }
    ++misses_;
    auto value = compute();

    const wire::json entry = {{"key", key}, {"result", encode(value)}};
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ostringstream tid;
    tid << std::this_thread::get_id();
    const auto tmp = path.string() + ".tmp." + tid.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write cache entry " + tmp);
        out << entry.dump();
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot commit cache entry " + path.string() + ": " + ec.message());
    return value;
}

std::vector<PositionStats> CachedProvider::score_text(const ProviderConfig& cfg,
                                                      std::string_view text) {
    return lookup_or_compute(
        score_key(cfg, text), [&] { return inner_.score_text(cfg, text); },
        [](const std::vector<PositionStats>& v) { return wire::encode_positions(v); },
        [](const wire::json& j) { return wire::decode_positions(j); });
}

GenResult CachedProvider::generate(const ProviderConfig& cfg, const GenRequest& req) {
    return lookup_or_compute(
        generate_key(cfg, req), [&] { return inner_.generate(cfg, req); },
        [](const GenResult& r) { return wire::encode_result(r); },
        [](const wire::json& j) { return wire::decode_result(j); });
}

CacheStats CachedProvider::stats() const {
    return {hits_.load(), misses_.load(), discarded_.load()};
}

}  // namespace aidetect
