#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace sce {

struct CacheEntry {
    std::string key;
    std::string model;
    std::string prompt_hash;
    double temperature = 0.0;
    int replicate = 0;
    std::string response;
    std::string created_at;
};

// Replicates only enter the key when sampling is stochastic (temperature > 0).
std::string cache_key(const std::string& model, const std::string& system_prompt, const std::string& prompt,
                      double temperature, int replicate);

// Append-only line-delimited cache file. One writer per file, enforced with an
// advisory lock held for the lifetime of the object.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path file);
    ~ResponseCache();
    ResponseCache(const ResponseCache&) = delete;
    ResponseCache& operator=(const ResponseCache&) = delete;

    [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
    // No-op when the key is already present.
    void put(CacheEntry entry);

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::size_t corrupt_lines() const noexcept { return corrupt_lines_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return file_; }

private:
    std::filesystem::path file_;
    int fd_ = -1;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> entries_;
    std::size_t corrupt_lines_ = 0;
};

// Opens one cache file per (model, dataset, stage) under a directory.
class CacheStore {
public:
    explicit CacheStore(std::filesystem::path dir);

    ResponseCache& open(const std::string& model, const std::string& dataset, const std::string& stage);
    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::mutex mutex_;
    std::map<std::string, std::unique_ptr<ResponseCache>> caches_;
};

std::string utc_timestamp();

}  // namespace sce
