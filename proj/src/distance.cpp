#include "sce/distance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sce/errors.hpp"

namespace sce {

std::string_view to_string(DistanceTag tag) noexcept {
    switch (tag) {
        case DistanceTag::gower: return "gower";
        case DistanceTag::l1_mad: return "l1_mad";
        case DistanceTag::l2_std: return "l2_std";
        case DistanceTag::semantic: return "semantic";
    }
    return "gower";
}

DistanceTag parse_distance_tag(std::string_view text) {
    for (auto tag : {DistanceTag::gower, DistanceTag::l1_mad, DistanceTag::l2_std, DistanceTag::semantic}) {
        if (to_string(tag) == text) return tag;
    }
    throw Error(Errc::config_error, fmt::format("unknown distance kind '{}'", text));
}

DistanceKind DistanceKind::semantic(std::shared_ptr<EmbeddingProvider> provider,
                                    std::shared_ptr<const PromptTemplate> prompt) {
    if (!provider) {
        throw Error(Errc::provider_unavailable, "semantic distance requires an embedding provider");
    }
    if (!prompt) {
        throw Error(Errc::config_error, "semantic distance requires a prompt template");
    }
    return {DistanceTag::semantic, std::move(provider), std::move(prompt)};
}

std::vector<std::size_t> FeatureStats::zero_mad_features() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < features.size(); ++k) {
        if (features[k].mad == 0.0) out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> FeatureStats::zero_std_features() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < features.size(); ++k) {
        if (features[k].std == 0.0) out.push_back(k);
    }
    return out;
}

namespace {

// Midpoint of the two central order statistics for even counts.
double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double gower_kernel(std::span<const double> a, std::span<const double> b, std::span<const double> ranges) {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (ranges[k] > 0.0) {
            sum += std::fabs(a[k] - b[k]) / ranges[k];
        }
    }
    return sum / static_cast<double>(a.size());
}

double l1_kernel(std::span<const double> a, std::span<const double> b, std::span<const double> mads) {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sum += std::fabs(a[k] - b[k]) / mads[k];
    }
    return sum;
}

// Squared differences over sigma, without a root.
double l2_kernel(std::span<const double> a, std::span<const double> b, std::span<const double> stds) {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        sum += d * d / stds[k];
    }
    return sum;
}

std::vector<double> coordinates_of(const Instance& x) {
    std::vector<double> c(x.spec().feature_count());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = x.coordinate(k);
    return c;
}

void require_same(const DatasetSpec& spec, const Instance& a, const Instance& b) {
    if (!same_spec(spec, a.spec()) || !same_spec(spec, b.spec())) {
        throw Error(Errc::spec_mismatch, "instances belong to different datasets");
    }
}

std::vector<double> mad_scales(const FeatureStats& stats, std::size_t p) {
    if (stats.features.size() != p) throw Error(Errc::spec_mismatch, "feature stats do not match the dataset");
    if (auto zero = stats.zero_mad_features(); !zero.empty()) {
        throw Error(Errc::degenerate_feature, fmt::format("feature {} has zero median absolute deviation", zero.front()));
    }
    std::vector<double> s;
    for (const auto& f : stats.features) s.push_back(f.mad);
    return s;
}

std::vector<double> std_scales(const FeatureStats& stats, std::size_t p) {
    if (stats.features.size() != p) throw Error(Errc::spec_mismatch, "feature stats do not match the dataset");
    if (auto zero = stats.zero_std_features(); !zero.empty()) {
        throw Error(Errc::degenerate_feature, fmt::format("feature {} has zero standard deviation", zero.front()));
    }
    std::vector<double> s;
    for (const auto& f : stats.features) s.push_back(f.std);
    return s;
}

std::vector<double> range_scales(const DatasetSpec& spec) {
    std::vector<double> s;
    for (const auto& f : spec.features) s.push_back(f.coordinate_range());
    return s;
}

}  // namespace

FeatureStats compute_stats(const Dataset& dataset) {
    if (dataset.size() == 0) {
        throw Error(Errc::empty_input, "cannot compute statistics of an empty dataset");
    }
    const std::size_t n = dataset.size();
    const std::size_t p = dataset.spec().feature_count();
    FeatureStats stats;
    stats.features.resize(p);
    std::vector<double> column(n);
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t i = 0; i < n; ++i) column[i] = dataset.row(i)[k];
        auto& s = stats.features[k];
        const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
        s.range = *hi - *lo;
        s.median = median_of(column);
        std::vector<double> deviations(n);
        for (std::size_t i = 0; i < n; ++i) deviations[i] = std::fabs(column[i] - s.median);
        s.mad = median_of(std::move(deviations));
        double mean = 0.0;
        for (double x : column) mean += x;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double x : column) ss += (x - mean) * (x - mean);
        s.std = std::sqrt(ss / static_cast<double>(n));
    }
    return stats;
}

double gower(const DatasetSpec& spec, const Instance& a, const Instance& b) {
    require_same(spec, a, b);
    const auto ranges = range_scales(spec);
    return gower_kernel(coordinates_of(a), coordinates_of(b), ranges);
}

double l1_mad(const FeatureStats& stats, const Instance& a, const Instance& b) {
    if (!same_spec(a.spec(), b.spec())) throw Error(Errc::spec_mismatch, "instances belong to different datasets");
    const auto scales = mad_scales(stats, a.spec().feature_count());
    return l1_kernel(coordinates_of(a), coordinates_of(b), scales);
}

double l2_std(const FeatureStats& stats, const Instance& a, const Instance& b) {
    if (!same_spec(a.spec(), b.spec())) throw Error(Errc::spec_mismatch, "instances belong to different datasets");
    const auto scales = std_scales(stats, a.spec().feature_count());
    return l2_kernel(coordinates_of(a), coordinates_of(b), scales);
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw Error(Errc::dimension_mismatch, "embedding dimensions differ");
    }
    if (std::equal(u.begin(), u.end(), v.begin(), v.end())) {
        bool any = false;
        for (double x : u) any = any || x != 0.0;
        if (!any) throw Error(Errc::zero_vector, "zero-vector embedding");
        return 0.0;
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        throw Error(Errc::zero_vector, "zero-vector embedding");
    }
    const double d = 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
    return std::clamp(d, 0.0, 2.0);
}

double semantic_distance(EmbeddingProvider& provider, const PromptTemplate& tmpl, const Instance& a, const Instance& b) {
    require_same(*tmpl.spec, a, b);
    const auto ea = provider.embed(render_respondent(tmpl, a));
    const auto eb = provider.embed(render_respondent(tmpl, b));
    if (ea.size() != provider.dimension() || eb.size() != provider.dimension()) {
        throw Error(Errc::dimension_mismatch, "embedding length differs from the provider's dimension");
    }
    return cosine_distance(ea, eb);
}

double max_pairwise_distance(const Dataset& dataset, const DistanceKind& kind) {
    return DistanceEvaluator(dataset, kind).max_pairwise();
}

DistanceEvaluator::DistanceEvaluator(const Dataset& dataset, DistanceKind kind)
    : spec_(dataset.spec_ptr()),
      kind_(std::move(kind)),
      n_(dataset.size()),
      p_(dataset.spec().feature_count()),
      coords_(dataset.coordinates().begin(), dataset.coordinates().end()),
      stats_(compute_stats(dataset)) {
    switch (kind_.tag) {
        case DistanceTag::gower: scale_ = range_scales(*spec_); break;
        case DistanceTag::l1_mad: scale_ = mad_scales(stats_, p_); break;
        case DistanceTag::l2_std: scale_ = std_scales(stats_, p_); break;
        case DistanceTag::semantic: {
            if (!kind_.provider) throw Error(Errc::provider_unavailable, "semantic distance requires an embedding provider");
            if (!kind_.prompt) throw Error(Errc::config_error, "semantic distance requires a prompt template");
            if (n_ > kSemanticScanLimit) {
                throw Error(Errc::too_many_instances,
                            fmt::format("semantic distance needs a pair scan; {} instances exceed the limit of {}", n_,
                                        kSemanticScanLimit));
            }
            embeddings_.reserve(n_);
            for (const auto& x : dataset) {
                auto e = kind_.provider->embed(render_respondent(*kind_.prompt, x));
                if (e.size() != kind_.provider->dimension()) {
                    throw Error(Errc::dimension_mismatch, "embedding length differs from the provider's dimension");
                }
                embeddings_.push_back(std::move(e));
            }
            double best = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = i + 1; j < n_; ++j) {
                    best = std::max(best, cosine_distance(embeddings_[i], embeddings_[j]));
                }
            }
            max_pairwise_ = best;
            return;
        }
    }
    // The maximizing pair sits at opposite extremes of every coordinate.
    std::vector<double> lo(p_);
    std::vector<double> hi(p_);
    for (std::size_t k = 0; k < p_; ++k) {
        const auto& f = spec_->features[k];
        lo[k] = f.coordinate(0);
        hi[k] = f.coordinate(f.cardinality() - 1);
    }
    max_pairwise_ = n_ <= 1 ? 0.0 : coordinate_distance(lo, hi);
}

double DistanceEvaluator::coordinate_distance(std::span<const double> a, std::span<const double> b) const {
    switch (kind_.tag) {
        case DistanceTag::gower: return gower_kernel(a, b, scale_);
        case DistanceTag::l1_mad: return l1_kernel(a, b, scale_);
        case DistanceTag::l2_std: return l2_kernel(a, b, scale_);
        case DistanceTag::semantic: break;
    }
    throw Error(Errc::kind_mismatch, "semantic distance has no coordinate form");
}

double DistanceEvaluator::operator()(std::size_t a, std::size_t b) const {
    if (kind_.tag == DistanceTag::semantic) {
        if (a == b) return 0.0;
        return cosine_distance(embeddings_.at(a), embeddings_.at(b));
    }
    const std::span<const double> all(coords_);
    return coordinate_distance(all.subspan(a * p_, p_), all.subspan(b * p_, p_));
}

double DistanceEvaluator::between(const Instance& a, const Instance& b) const {
    if (!same_spec(*spec_, a.spec()) || !same_spec(*spec_, b.spec())) {
        throw Error(Errc::spec_mismatch, "instances belong to a different dataset");
    }
    return (*this)(a.id(), b.id());
}

double DistanceEvaluator::max_pairwise() const {
    return max_pairwise_;
}

}  // namespace sce
