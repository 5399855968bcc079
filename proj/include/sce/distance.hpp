#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "sce/dataset.hpp"
#include "sce/gateway.hpp"
#include "sce/prompting.hpp"

namespace sce {

enum class DistanceTag { gower, l1_mad, l2_std, semantic };

std::string_view to_string(DistanceTag tag) noexcept;
DistanceTag parse_distance_tag(std::string_view text);

struct DistanceKind {
    DistanceTag tag = DistanceTag::gower;
    // semantic only
    std::shared_ptr<EmbeddingProvider> provider;
    std::shared_ptr<const PromptTemplate> prompt;

    static DistanceKind gower() { return {DistanceTag::gower, nullptr, nullptr}; }
    static DistanceKind l1_mad() { return {DistanceTag::l1_mad, nullptr, nullptr}; }
    static DistanceKind l2_std() { return {DistanceTag::l2_std, nullptr, nullptr}; }
    static DistanceKind semantic(std::shared_ptr<EmbeddingProvider> provider, std::shared_ptr<const PromptTemplate> prompt);

    bool operator==(const DistanceKind& other) const noexcept { return tag == other.tag; }
};

struct FeatureStat {
    double range = 0.0;
    double median = 0.0;
    double mad = 0.0;
    // population standard deviation
    double std = 0.0;

    [[nodiscard]] bool degenerate() const noexcept { return range == 0.0; }
};

struct FeatureStats {
    std::vector<FeatureStat> features;

    [[nodiscard]] std::vector<std::size_t> zero_mad_features() const;
    [[nodiscard]] std::vector<std::size_t> zero_std_features() const;
};

FeatureStats compute_stats(const Dataset& dataset);

double gower(const DatasetSpec& spec, const Instance& a, const Instance& b);
double l1_mad(const FeatureStats& stats, const Instance& a, const Instance& b);
double l2_std(const FeatureStats& stats, const Instance& a, const Instance& b);
double semantic_distance(EmbeddingProvider& provider, const PromptTemplate& tmpl, const Instance& a, const Instance& b);

// 1 - cosine similarity, clamped to [0, 2].
double cosine_distance(std::span<const double> u, std::span<const double> v);

// Semantic maxima are found by pair scan, which is only attempted up to this size.
inline constexpr std::size_t kSemanticScanLimit = 5000;

double max_pairwise_distance(const Dataset& dataset, const DistanceKind& kind);

// Distance over the instance ids of one dataset. Every path computes a given
// pair with the same expression in the same order, so equal distances compare
// equal exactly.
class DistanceEvaluator {
public:
    DistanceEvaluator(const Dataset& dataset, DistanceKind kind);

    [[nodiscard]] double operator()(std::size_t a, std::size_t b) const;
    [[nodiscard]] double between(const Instance& a, const Instance& b) const;
    [[nodiscard]] double max_pairwise() const;

    [[nodiscard]] const DistanceKind& kind() const noexcept { return kind_; }
    [[nodiscard]] const SpecPtr& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] const FeatureStats& stats() const noexcept { return stats_; }

private:
    [[nodiscard]] double coordinate_distance(std::span<const double> a, std::span<const double> b) const;

    SpecPtr spec_;
    DistanceKind kind_;
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::vector<double> coords_;
    std::vector<double> scale_;
    FeatureStats stats_;
    std::vector<std::vector<double>> embeddings_;
    double max_pairwise_ = 0.0;
};

}  // namespace sce
