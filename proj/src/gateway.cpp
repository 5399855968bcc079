#include "sce/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "sce/hashing.hpp"
#include "sce/text.hpp"

namespace sce {

namespace {

void reject_unknown_keys(const nlohmann::json& doc, const std::set<std::string>& known, std::string_view what) {
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) {
            throw Error(Errc::config_error, fmt::format("{}: unknown field '{}'", what, key));
        }
    }
}

std::string credential_from_env(const std::string& env_name) {
    if (env_name.empty()) return {};
    const char* value = std::getenv(env_name.c_str());
    if (value == nullptr || *value == '\0') {
        throw Error(Errc::provider_unavailable, fmt::format("credential variable {} is not set", env_name));
    }
    return value;
}

bool retryable(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

void validate_endpoint(const ModelEndpointConfig& config) {
    if (config.base_url.empty()) throw Error(Errc::config_error, "endpoint base_url is required");
    if (config.model.empty()) throw Error(Errc::config_error, "endpoint model is required");
    if (!std::isfinite(config.temperature) || config.temperature < 0.0) {
        throw Error(Errc::config_error, "endpoint temperature must be finite and non-negative");
    }
    if (config.max_concurrency < 1) throw Error(Errc::config_error, "max_concurrency must be at least 1");
    if (config.retry.max_attempts < 1) throw Error(Errc::config_error, "retry.max_attempts must be at least 1");
}

ModelEndpointConfig endpoint_from_json(const nlohmann::json& doc) {
    reject_unknown_keys(doc,
                        {"base_url", "model", "temperature", "max_concurrency", "retry", "credential_env", "path",
                         "auth_header", "auth_prefix", "system_prompt", "structured_output", "timeout_s"},
                        "endpoint");
    try {
        ModelEndpointConfig c;
        c.base_url = doc.at("base_url").get<std::string>();
        c.model = doc.at("model").get<std::string>();
        c.temperature = doc.value("temperature", 0.0);
        c.max_concurrency = doc.value("max_concurrency", std::size_t{4});
        if (auto it = doc.find("retry"); it != doc.end()) {
            reject_unknown_keys(*it, {"max_attempts", "initial_backoff_ms"}, "endpoint.retry");
            c.retry.max_attempts = it->value("max_attempts", 3);
            c.retry.initial_backoff = std::chrono::milliseconds(it->value("initial_backoff_ms", 1000));
        }
        c.credential_env = doc.value("credential_env", std::string{});
        c.path = doc.value("path", c.path);
        c.auth_header = doc.value("auth_header", c.auth_header);
        c.auth_prefix = doc.value("auth_prefix", c.auth_prefix);
        // absent -> default greeting; explicit null -> no system message
        if (auto it = doc.find("system_prompt"); it == doc.end()) {
            c.system_prompt = std::string(kDefaultSystemPrompt);
        } else if (!it->is_null()) {
            c.system_prompt = it->get<std::string>();
        }
        c.structured_output = doc.value("structured_output", false);
        c.timeout = std::chrono::seconds(doc.value("timeout_s", 120));
        validate_endpoint(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::config_error, std::string("endpoint: ") + e.what());
    }
}

RemoteChatBackend::RemoteChatBackend(ModelEndpointConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    validate_endpoint(config_);
}

nlohmann::json RemoteChatBackend::request_body(const Query& query) const {
    nlohmann::json messages = nlohmann::json::array();
    if (config_.system_prompt) {
        messages.push_back({{"role", "system"}, {"content", *config_.system_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", query.prompt}});
    nlohmann::json body = {{"model", config_.model}, {"messages", messages}, {"temperature", config_.temperature}};
    if (config_.structured_output && query.response_schema) {
        body["response_format"] = {{"type", "json_schema"},
                                   {"json_schema", {{"name", "counterfactual"}, {"schema", *query.response_schema}}}};
    }
    return body;
}

std::string RemoteChatBackend::complete(const Query& query) {
    const std::string body = request_body(query).dump();
    HttpHeaders headers;
    if (!config_.credential_env.empty()) {
        headers.emplace_back(config_.auth_header, config_.auth_prefix + credential_from_env(config_.credential_env));
    }
    std::string last_error;
    auto backoff = config_.retry.initial_backoff;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        HttpResponse response;
        try {
            response = transport_->post(config_.path, headers, body);
        } catch (const Error& e) {
            last_error = e.what();
            continue;
        }
        if (response.status == 200) {
            auto doc = nlohmann::json::parse(response.body, nullptr, false);
            if (!doc.is_discarded()) {
                const auto* content = &doc;
                try {
                    content = &doc.at("choices").at(0).at("message").at("content");
                } catch (const nlohmann::json::exception&) {
                    content = nullptr;
                }
                if (content != nullptr && content->is_string()) {
                    return content->get<std::string>();
                }
            }
            last_error = "response has no choices[0].message.content string";
            continue;
        }
        last_error = fmt::format("HTTP {}", response.status);
        if (!retryable(response.status)) {
            break;
        }
    }
    throw Error(Errc::transport_error, fmt::format("model '{}': {}", config_.model, last_error));
}

namespace {

std::string_view strip_decoration(std::string_view text) {
    text = trim(text);
    while (!text.empty() && std::string_view("\"'`*.").find(text.front()) != std::string_view::npos) {
        text.remove_prefix(1);
    }
    while (!text.empty() && std::string_view("\"'`*.").find(text.back()) != std::string_view::npos) {
        text.remove_suffix(1);
    }
    return trim(text);
}

}  // namespace

std::optional<int> resolve_label(std::string_view response, const std::array<std::string, 2>& labels) {
    const auto bare = strip_decoration(response);
    for (int i = 0; i < 2; ++i) {
        if (bare == labels[static_cast<std::size_t>(i)]) return i;
    }
    const bool first = contains_icase(response, labels[0]);
    const bool second = contains_icase(response, labels[1]);
    if (first != second) {
        return first ? 0 : 1;
    }
    return std::nullopt;
}

std::string label_reminder(const std::array<std::string, 2>& labels) {
    return fmt::format("\n\nAnswer with exactly one of: \"{}\" or \"{}\". Reply with the answer only.", labels[0],
                       labels[1]);
}

Gateway::Gateway(Backend& backend, ResponseCache* cache, GatewayOptions options)
    : backend_(backend), cache_(cache), options_(options) {}

std::string Gateway::complete_one(const Query& query) {
    const std::string model = backend_.model_id();
    const double temperature = backend_.temperature();
    const std::string key = cache_key(model, backend_.system_prompt(), query.prompt, temperature, query.replicate);
    if (cache_ != nullptr) {
        if (auto hit = cache_->get(key)) {
            ++hits_;
            return *hit;
        }
    }
    if (options_.offline) {
        throw Error(Errc::cache_miss_offline, fmt::format("offline mode: no cached response for key {}", key));
    }
    ++misses_;
    ++transport_calls_;
    std::string response = backend_.complete(query);
    if (cache_ != nullptr) {
        cache_->put(CacheEntry{key, model, sha256_hex(query.prompt), temperature,
                               temperature > 0.0 ? query.replicate : 0, response, {}});
    }
    return response;
}

int Gateway::predict_one(const Query& query) {
    if (query.labels[0].empty() || query.labels[1].empty() || query.labels[0] == query.labels[1]) {
        throw Error(Errc::config_error, "predict needs two distinct labels");
    }
    const std::string first = complete_one(query);
    if (auto label = resolve_label(first, query.labels)) {
        return *label;
    }
    Query retry = query;
    retry.prompt += label_reminder(query.labels);
    const std::string second = complete_one(retry);
    if (auto label = resolve_label(second, query.labels)) {
        return *label;
    }
    throw Error(Errc::unresolved_label,
                fmt::format("could not resolve a label from response '{}'", second.substr(0, 200)));
}

template <typename T, typename Fn>
std::vector<Outcome<T>> Gateway::run_pool(std::span<const Query> queries, Fn&& fn) {
    std::vector<Outcome<T>> results(queries.size(), Outcome<T>{Error(Errc::transport_error, "not run")});
    auto run = [&](std::size_t i) {
        try {
            results[i] = fn(queries[i]);
        } catch (const Error& e) {
            results[i] = e;
        } catch (const std::exception& e) {
            results[i] = Error(Errc::transport_error, e.what());
        }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(backend_.max_concurrency(), 1), queries.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < queries.size(); ++i) run(i);
        return results;
    }
    // Each worker holds at most one request in flight.
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < queries.size(); i = next++) run(i);
        });
    }
    pool.clear();
    return results;
}

std::vector<Outcome<std::string>> Gateway::complete_all(std::span<const Query> queries) {
    return run_pool<std::string>(queries, [this](const Query& q) { return complete_one(q); });
}

std::string Gateway::complete(const Query& query) {
    return complete_one(query);
}

std::vector<Outcome<int>> Gateway::predict_all(std::span<const Query> queries) {
    return run_pool<int>(queries, [this](const Query& q) { return predict_one(q); });
}

int Gateway::predict(const Query& query) {
    return predict_one(query);
}

GatewayStats Gateway::stats() const {
    return GatewayStats{hits_.load(), misses_.load(), transport_calls_.load()};
}

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

MockEmbeddingProvider::MockEmbeddingProvider(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ < 1) throw Error(Errc::config_error, "embedding dimension must be at least 1");
}

std::string MockEmbeddingProvider::id() const {
    return fmt::format("mock-embedding-{}", dimension_);
}

std::vector<double> MockEmbeddingProvider::embed(std::string_view text) {
    std::vector<double> v(dimension_, 0.0);
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        const std::uint64_t h = fnv1a(token);
        for (std::size_t j = 0; j < dimension_; ++j) {
            const std::uint64_t r = splitmix(h + j);
            v[j] += static_cast<double>(r >> 11) / static_cast<double>(1ULL << 53) * 2.0 - 1.0;
        }
        token.clear();
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    return v;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(EmbeddingEndpointConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.dimension < 1) throw Error(Errc::config_error, "embedding dimension must be at least 1");
}

std::vector<double> RemoteEmbeddingProvider::embed(std::string_view text) {
    HttpHeaders headers;
    if (!config_.credential_env.empty()) {
        headers.emplace_back(config_.auth_header, config_.auth_prefix + credential_from_env(config_.credential_env));
    }
    const nlohmann::json body = {{"model", config_.model}, {"input", std::string(text)}};
    const auto response = transport_->post(config_.path, headers, body.dump());
    if (response.status != 200) {
        throw Error(Errc::transport_error, fmt::format("embedding endpoint returned HTTP {}", response.status));
    }
    auto doc = nlohmann::json::parse(response.body, nullptr, false);
    const nlohmann::json* vec = nullptr;
    if (!doc.is_discarded()) {
        if (doc.contains("vector")) {
            vec = &doc["vector"];
        } else if (doc.contains("embedding")) {
            vec = &doc["embedding"];
        } else if (doc.contains("data") && doc["data"].is_array() && !doc["data"].empty() &&
                   doc["data"][0].contains("embedding")) {
            vec = &doc["data"][0]["embedding"];
        }
    }
    if (vec == nullptr || !vec->is_array()) {
        throw Error(Errc::transport_error, "embedding response carries no vector");
    }
    if (vec->size() != config_.dimension) {
        throw Error(Errc::dimension_mismatch,
                    fmt::format("embedding has {} coordinates, expected {}", vec->size(), config_.dimension));
    }
    std::vector<double> out;
    out.reserve(vec->size());
    for (const auto& x : *vec) {
        out.push_back(x.get<double>());
    }
    return out;
}

std::shared_ptr<EmbeddingProvider> embedding_provider_from_json(const nlohmann::json& doc) {
    const std::string type = doc.value("type", std::string("mock"));
    if (type == "mock") {
        reject_unknown_keys(doc, {"type", "dimension"}, "embedding");
        return std::make_shared<MockEmbeddingProvider>(doc.value("dimension", std::size_t{64}));
    }
    if (type == "remote") {
        reject_unknown_keys(doc, {"type", "base_url", "model", "dimension", "credential_env", "path", "auth_header",
                                  "auth_prefix"},
                            "embedding");
        EmbeddingEndpointConfig c;
        try {
            c.base_url = doc.at("base_url").get<std::string>();
            c.model = doc.at("model").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::config_error, std::string("embedding: ") + e.what());
        }
        c.dimension = doc.value("dimension", c.dimension);
        c.credential_env = doc.value("credential_env", std::string{});
        c.path = doc.value("path", c.path);
        c.auth_header = doc.value("auth_header", c.auth_header);
        c.auth_prefix = doc.value("auth_prefix", c.auth_prefix);
        return std::make_shared<RemoteEmbeddingProvider>(c, std::make_shared<HttpTransport>(c.base_url));
    }
    throw Error(Errc::config_error, fmt::format("unknown embedding provider type '{}'", type));
}

}  // namespace sce
