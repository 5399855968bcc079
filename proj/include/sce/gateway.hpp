#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sce/cache.hpp"
#include "sce/dataset.hpp"
#include "sce/errors.hpp"
#include "sce/prompting.hpp"
#include "sce/transport.hpp"

namespace sce {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
};

inline constexpr std::string_view kDefaultSystemPrompt = "You are a helpful assistant.";

struct ModelEndpointConfig {
    std::string base_url;
    std::string model;
    double temperature = 0.0;
    std::size_t max_concurrency = 4;
    RetryPolicy retry;
    // Name of the environment variable holding the credential; never the credential.
    std::string credential_env;
    std::string path = "/v1/chat/completions";
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
    std::optional<std::string> system_prompt;
    bool structured_output = false;
    std::chrono::seconds timeout{120};
};

void validate_endpoint(const ModelEndpointConfig& config);
ModelEndpointConfig endpoint_from_json(const nlohmann::json& doc);

enum class QueryKind { predict, sce, mcq };

// One model request. Remote backends only see the prompt text; the structured
// fields let local mock models answer without reading natural language.
struct Query {
    QueryKind kind = QueryKind::predict;
    std::string prompt;
    std::optional<nlohmann::json> response_schema;
    std::optional<Instance> subject;
    std::array<std::string, 2> labels;
    int predicted = -1;
    PromptSetting setting = PromptSetting::unconstrained;
    std::vector<Instance> options;
    int replicate = 0;
};

class Backend {
public:
    virtual ~Backend() = default;
    [[nodiscard]] virtual std::string model_id() const = 0;
    [[nodiscard]] virtual double temperature() const = 0;
    [[nodiscard]] virtual std::size_t max_concurrency() const { return 1; }
    [[nodiscard]] virtual std::string system_prompt() const { return {}; }
    // Raw assistant text. Must be safe to call concurrently.
    virtual std::string complete(const Query& query) = 0;
};

// Chat-completion HTTP backend.
class RemoteChatBackend final : public Backend {
public:
    RemoteChatBackend(ModelEndpointConfig config, std::shared_ptr<Transport> transport);

    [[nodiscard]] std::string model_id() const override { return config_.model; }
    [[nodiscard]] double temperature() const override { return config_.temperature; }
    [[nodiscard]] std::size_t max_concurrency() const override { return config_.max_concurrency; }
    [[nodiscard]] std::string system_prompt() const override { return config_.system_prompt.value_or(""); }
    std::string complete(const Query& query) override;

    [[nodiscard]] nlohmann::json request_body(const Query& query) const;

private:
    ModelEndpointConfig config_;
    std::shared_ptr<Transport> transport_;
};

// Exact (trimmed) match first, then case-insensitive containment of exactly one label.
std::optional<int> resolve_label(std::string_view response, const std::array<std::string, 2>& labels);
std::string label_reminder(const std::array<std::string, 2>& labels);

struct GatewayOptions {
    bool offline = false;
};

struct GatewayStats {
    std::size_t cache_hits = 0;
    std::size_t cache_misses = 0;
    std::size_t transport_calls = 0;
};

template <typename T>
using Outcome = std::variant<T, Error>;

// Cache-through, concurrency-bounded front door to a backend. Results always come
// back in input order regardless of completion order.
class Gateway {
public:
    Gateway(Backend& backend, ResponseCache* cache, GatewayOptions options = {});

    std::vector<Outcome<std::string>> complete_all(std::span<const Query> queries);
    std::string complete(const Query& query);

    std::vector<Outcome<int>> predict_all(std::span<const Query> queries);
    int predict(const Query& query);

    [[nodiscard]] GatewayStats stats() const;
    [[nodiscard]] Backend& backend() noexcept { return backend_; }

private:
    std::string complete_one(const Query& query);
    int predict_one(const Query& query);

    template <typename T, typename Fn>
    std::vector<Outcome<T>> run_pool(std::span<const Query> queries, Fn&& fn);

    Backend& backend_;
    ResponseCache* cache_;
    GatewayOptions options_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
    std::atomic<std::size_t> transport_calls_{0};
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    [[nodiscard]] virtual std::size_t dimension() const = 0;
    [[nodiscard]] virtual std::string id() const = 0;
    virtual std::vector<double> embed(std::string_view text) = 0;
};

// Hashed bag-of-tokens vectors; a pure function of the input text.
class MockEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit MockEmbeddingProvider(std::size_t dimension = 64);
    [[nodiscard]] std::size_t dimension() const override { return dimension_; }
    [[nodiscard]] std::string id() const override;
    std::vector<double> embed(std::string_view text) override;

private:
    std::size_t dimension_;
};

struct EmbeddingEndpointConfig {
    std::string base_url;
    std::string model;
    std::size_t dimension = 768;
    std::string credential_env;
    std::string path = "/v1/embeddings";
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
};

class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(EmbeddingEndpointConfig config, std::shared_ptr<Transport> transport);
    [[nodiscard]] std::size_t dimension() const override { return config_.dimension; }
    [[nodiscard]] std::string id() const override { return config_.model; }
    std::vector<double> embed(std::string_view text) override;

private:
    EmbeddingEndpointConfig config_;
    std::shared_ptr<Transport> transport_;
};

std::shared_ptr<EmbeddingProvider> embedding_provider_from_json(const nlohmann::json& doc);

}  // namespace sce
