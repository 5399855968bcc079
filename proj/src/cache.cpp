#include "sce/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "sce/errors.hpp"
#include "sce/hashing.hpp"

namespace sce {

std::string cache_key(const std::string& model, const std::string& system_prompt, const std::string& prompt,
                      double temperature, int replicate) {
    const int effective_replicate = temperature > 0.0 ? replicate : 0;
    nlohmann::json material = {{"model", model},
                               {"system", system_prompt},
                               {"prompt", prompt},
                               {"temperature", temperature},
                               {"replicate", effective_replicate}};
    return sha256_hex(material.dump());
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
    if (file_.has_parent_path()) {
        std::filesystem::create_directories(file_.parent_path());
    }
    {
        std::ifstream in(file_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto record = nlohmann::json::parse(line, nullptr, false);
            if (record.is_discarded() || !record.is_object() || !record.contains("key") || !record["key"].is_string() ||
                !record.contains("response") || !record["response"].is_string()) {
                ++corrupt_lines_;
                continue;
            }
            entries_.emplace(record["key"].get<std::string>(), record["response"].get<std::string>());
        }
    }
    if (corrupt_lines_ > 0) {
        spdlog::warn("cache {}: ignored {} malformed entries", file_.string(), corrupt_lines_);
    }
    fd_ = ::open(file_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
        throw Error(Errc::io_error, fmt::format("cannot open cache {}: {}", file_.string(), std::strerror(errno)));
    }
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw Error(Errc::io_error, fmt::format("cache {} is locked by another process", file_.string()));
    }
}

ResponseCache::~ResponseCache() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::put(CacheEntry entry) {
    std::lock_guard lock(mutex_);
    if (entries_.contains(entry.key)) return;
    if (entry.created_at.empty()) entry.created_at = utc_timestamp();
    nlohmann::ordered_json record = {{"key", entry.key},
                                     {"model", entry.model},
                                     {"prompt_hash", entry.prompt_hash},
                                     {"temperature", entry.temperature},
                                     {"replicate", entry.replicate},
                                     {"response", entry.response},
                                     {"created_at", entry.created_at}};
    const std::string line = record.dump() + "\n";
    // O_APPEND makes each write land at the end as one unit.
    std::size_t written = 0;
    while (written < line.size()) {
        const auto n = ::write(fd_, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(Errc::io_error, fmt::format("cache write to {} failed: {}", file_.string(), std::strerror(errno)));
        }
        written += static_cast<std::size_t>(n);
    }
    entries_.emplace(std::move(entry.key), std::move(entry.response));
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

namespace {

std::string sanitize(const std::string& text) {
    std::string out;
    for (char c : text) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    return out;
}

}  // namespace

CacheStore::CacheStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

ResponseCache& CacheStore::open(const std::string& model, const std::string& dataset, const std::string& stage) {
    const std::string name = fmt::format("{}__{}__{}.jsonl", sanitize(model), sanitize(dataset), sanitize(stage));
    std::lock_guard lock(mutex_);
    auto& slot = caches_[name];
    if (!slot) {
        slot = std::make_unique<ResponseCache>(dir_ / name);
    }
    return *slot;
}

}  // namespace sce
