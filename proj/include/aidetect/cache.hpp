#pragma once
// Transparent on-disk cache in front of a provider.
//
// Entries are keyed by the SHA-256 of the canonical wire request (model ids,
// operation name and full payload) and stored as <dir>/<k[0:2]>/<k>.json.
// An entry is written once, atomically (temp file + rename), and never
// rewritten. Unreadable entries are discarded and recomputed.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "aidetect/provider.hpp"

namespace aidetect {

struct CacheStats {
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t discarded = 0;  // corrupted entries recomputed
};

class CachedProvider final : public Provider {
public:
    CachedProvider(Provider& inner, std::filesystem::path dir);

    std::vector<PositionStats> score_text(const ProviderConfig& cfg,
                                          std::string_view text) override;
    GenResult generate(const ProviderConfig& cfg, const GenRequest& req) override;

    CacheStats stats() const;
    const std::filesystem::path& dir() const { return dir_; }

    static std::string score_key(const ProviderConfig& cfg, std::string_view text);
    static std::string generate_key(const ProviderConfig& cfg, const GenRequest& req);
    std::filesystem::path entry_path(const std::string& key) const;

private:
    template <typename Compute, typename Encode, typename Decode>
    auto lookup_or_compute(const std::string& key, Compute&& compute, Encode&& encode,
                           Decode&& decode);

    std::mutex& key_mutex(const std::string& key);

    Provider& inner_;
    std::filesystem::path dir_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
    std::atomic<std::size_t> discarded_{0};
    std::mutex locks_mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace aidetect
