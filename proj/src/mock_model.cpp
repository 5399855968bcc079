#include "sce/mock_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "sce/errors.hpp"
#include "sce/hashing.hpp"

namespace sce {

double normalized_rank(const Instance& x, std::size_t feature) {
    const auto card = x.spec().features.at(feature).cardinality();
    if (card <= 1) return 0.0;
    return static_cast<double>(x.index(feature)) / static_cast<double>(card - 1);
}

double LinearRule::score(const Instance& x) const {
    if (weights.size() != x.spec().feature_count()) {
        throw Error(Errc::spec_mismatch, fmt::format("mock rule has {} weights but '{}' has {} features", weights.size(),
                                                     x.spec().name, x.spec().feature_count()));
    }
    double s = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) s += weights[k] * normalized_rank(x, k);
    return s;
}

int LinearRule::classify(const Instance& x) const {
    return score(x) >= threshold ? 0 : 1;
}

std::string_view to_string(ScePolicy policy) noexcept {
    switch (policy) {
        case ScePolicy::extreme_jump: return "extreme_jump";
        case ScePolicy::conservative_step: return "conservative_step";
        case ScePolicy::oracle_minimal: return "oracle_minimal";
        case ScePolicy::random_uniform: return "random_uniform";
    }
    return "extreme_jump";
}

ScePolicy parse_sce_policy(std::string_view text) {
    for (auto p : {ScePolicy::extreme_jump, ScePolicy::conservative_step, ScePolicy::oracle_minimal,
                   ScePolicy::random_uniform}) {
        if (to_string(p) == text) return p;
    }
    throw Error(Errc::config_error, fmt::format("unknown sce policy '{}'", text));
}

std::string_view to_string(McqPolicy policy) noexcept {
    switch (policy) {
        case McqPolicy::oracle: return "oracle";
        case McqPolicy::random: return "random";
        case McqPolicy::fixed: return "fixed";
    }
    return "oracle";
}

McqPolicy parse_mcq_policy(std::string_view text) {
    for (auto p : {McqPolicy::oracle, McqPolicy::random, McqPolicy::fixed}) {
        if (to_string(p) == text) return p;
    }
    throw Error(Errc::config_error, fmt::format("unknown mcq policy '{}'", text));
}

void validate_mock_spec(const MockModelSpec& spec) {
    auto finite = [](const std::vector<double>& w) {
        return std::all_of(w.begin(), w.end(), [](double v) { return std::isfinite(v); });
    };
    if (spec.classifier.weights.empty()) throw Error(Errc::config_error, "mock classifier needs at least one weight");
    if (!finite(spec.classifier.weights) || !std::isfinite(spec.classifier.threshold)) {
        throw Error(Errc::config_error, "mock classifier weights and threshold must be finite");
    }
    if (spec.policy_weights) {
        if (spec.policy_weights->size() != spec.classifier.weights.size() || !finite(*spec.policy_weights)) {
            throw Error(Errc::config_error, "policy_weights must be finite and match the classifier weights in length");
        }
    }
    if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0)) {
        throw Error(Errc::config_error, "label_noise must lie in [0, 1]");
    }
    if (!std::isfinite(spec.temperature) || spec.temperature < 0.0) {
        throw Error(Errc::config_error, "mock temperature must be finite and non-negative");
    }
    if (spec.max_concurrency < 1) throw Error(Errc::config_error, "max_concurrency must be at least 1");
    if (spec.mcq_letter < 'A' || spec.mcq_letter > 'D') throw Error(Errc::config_error, "mcq_letter must be A-D");
    if (spec.oracle_distance == DistanceTag::semantic) {
        throw Error(Errc::config_error, "oracle_minimal supports coordinate distances only");
    }
}

namespace {

std::vector<double> weights_from_json(const nlohmann::json& doc, const DatasetSpec* dataset, const char* what) {
    if (doc.is_array()) return doc.get<std::vector<double>>();
    if (doc.is_object()) {
        if (dataset == nullptr) {
            throw Error(Errc::config_error, fmt::format("{} keyed by feature name need a dataset", what));
        }
        std::vector<double> w(dataset->feature_count(), 0.0);
        for (const auto& [name, value] : doc.items()) {
            const auto k = dataset->feature_index(name);
            if (!k) throw Error(Errc::config_error, fmt::format("{}: unknown feature '{}'", what, name));
            w[*k] = value.get<double>();
        }
        return w;
    }
    throw Error(Errc::config_error, fmt::format("{} must be an array or an object", what));
}

}  // namespace

MockModelSpec mock_spec_from_json(const nlohmann::json& doc, const DatasetSpec* dataset) {
    static const std::vector<std::string> known = {
        "type",         "name",       "weights",   "threshold",  "sce_policy",      "policy_weights",  "label_noise",
        "noise_seed",   "mcq_policy", "mcq_letter", "seed",      "temperature",     "max_concurrency", "oracle_distance"};
    if (!doc.is_object()) throw Error(Errc::config_error, "mock model spec must be an object");
    for (const auto& [key, _] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(Errc::config_error, fmt::format("unknown mock model field '{}'", key));
        }
    }
    MockModelSpec spec;
    try {
        spec.name = doc.value("name", spec.name);
        spec.classifier.weights = weights_from_json(doc.at("weights"), dataset, "weights");
        spec.classifier.threshold = doc.value("threshold", 0.0);
        if (doc.contains("sce_policy")) spec.sce_policy = parse_sce_policy(doc.at("sce_policy").get<std::string>());
        if (doc.contains("policy_weights")) {
            spec.policy_weights = weights_from_json(doc.at("policy_weights"), dataset, "policy_weights");
        }
        spec.label_noise = doc.value("label_noise", 0.0);
        spec.noise_seed = doc.value("noise_seed", std::uint64_t{0});
        if (doc.contains("mcq_policy")) spec.mcq_policy = parse_mcq_policy(doc.at("mcq_policy").get<std::string>());
        if (doc.contains("mcq_letter")) {
            const auto letter = doc.at("mcq_letter").get<std::string>();
            if (letter.size() != 1) throw Error(Errc::config_error, "mcq_letter must be one letter");
            spec.mcq_letter = letter[0];
        }
        spec.seed = doc.value("seed", std::uint64_t{0});
        spec.temperature = doc.value("temperature", 0.0);
        spec.max_concurrency = doc.value("max_concurrency", spec.max_concurrency);
        if (doc.contains("oracle_distance")) {
            spec.oracle_distance = parse_distance_tag(doc.at("oracle_distance").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::config_error, fmt::format("mock model spec: {}", e.what()));
    }
    validate_mock_spec(spec);
    return spec;
}

nlohmann::ordered_json mock_spec_to_json(const MockModelSpec& spec) {
    nlohmann::ordered_json doc;
    doc["type"] = "mock";
    doc["name"] = spec.name;
    doc["weights"] = spec.classifier.weights;
    doc["threshold"] = spec.classifier.threshold;
    doc["sce_policy"] = to_string(spec.sce_policy);
    if (spec.policy_weights) doc["policy_weights"] = *spec.policy_weights;
    doc["label_noise"] = spec.label_noise;
    doc["noise_seed"] = spec.noise_seed;
    doc["mcq_policy"] = to_string(spec.mcq_policy);
    doc["mcq_letter"] = std::string(1, spec.mcq_letter);
    doc["seed"] = spec.seed;
    doc["temperature"] = spec.temperature;
    doc["max_concurrency"] = spec.max_concurrency;
    doc["oracle_distance"] = to_string(spec.oracle_distance);
    return doc;
}

MockBackend::MockBackend(MockModelSpec spec) : spec_(std::move(spec)) {
    validate_mock_spec(spec_);
    // concurrency does not change answers, so it stays out of the identity
    auto identity = mock_spec_to_json(spec_);
    identity.erase("max_concurrency");
    model_id_ = fmt::format("mock-{}-{}", spec_.name, sha256_hex(identity.dump()).substr(0, 12));
}

void MockBackend::check_arity(const DatasetSpec& dataset) const {
    if (spec_.classifier.weights.size() != dataset.feature_count()) {
        throw Error(Errc::spec_mismatch, fmt::format("mock '{}' has {} weights but '{}' has {} features", spec_.name,
                                                     spec_.classifier.weights.size(), dataset.name,
                                                     dataset.feature_count()));
    }
}

void MockBackend::inject_boundary(std::shared_ptr<const DecisionBoundary> boundary) {
    std::lock_guard lock(mutex_);
    injected_ = std::move(boundary);
}

int MockBackend::predict_label(const Instance& x, int replicate) const {
    check_arity(x.spec());
    int label = spec_.classifier.classify(x);
    if (spec_.label_noise > 0.0) {
        const std::string tag = spec_.temperature > 0.0
                                    ? fmt::format("noise:{}:{}:{}", x.spec().name, x.id(), replicate)
                                    : fmt::format("noise:{}:{}", x.spec().name, x.id());
        std::mt19937_64 rng(derive_seed(spec_.noise_seed, tag));
        const double u = static_cast<double>(rng() >> 11) / static_cast<double>(1ULL << 53);
        if (u < spec_.label_noise) label = 1 - label;
    }
    return label;
}

MockBackend::DatasetState& MockBackend::state_for(const SpecPtr& spec) {
    // caller holds mutex_
    auto& state = states_[spec_hash(*spec)];
    if (!state.dataset) {
        state.dataset = std::make_unique<Dataset>(enumerate_dataset(spec));
        DistanceKind kind{spec_.oracle_distance, nullptr, nullptr};
        state.distance = std::make_unique<DistanceEvaluator>(*state.dataset, kind);
        std::vector<std::uint8_t> labels;
        labels.reserve(state.dataset->size());
        for (const auto& x : *state.dataset) labels.push_back(static_cast<std::uint8_t>(predict_label(x)));
        state.boundary = std::make_shared<const DecisionBoundary>(
            spec, std::move(labels), BoundaryProvenance{model_id_, "mock-internal", spec_.temperature, 0});
    }
    return state;
}

Instance MockBackend::propose(const Instance& source, int predicted, int replicate) {
    const auto& ds = source.spec();
    check_arity(ds);
    if (predicted != 0 && predicted != 1) predicted = predict_label(source, replicate);
    const int target = 1 - predicted;
    // Raising the score favours class_labels[0].
    const double direction = target == 0 ? 1.0 : -1.0;
    const auto& w = spec_.steering_weights();
    std::vector<std::size_t> idx(source.indices().begin(), source.indices().end());

    switch (spec_.sce_policy) {
        case ScePolicy::extreme_jump: {
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const double step = direction * w[k];
                if (step > 0.0) idx[k] = ds.features[k].cardinality() - 1;
                if (step < 0.0) idx[k] = 0;
            }
            return Instance(source.spec_ptr(), std::move(idx));
        }
        case ScePolicy::conservative_step: {
            std::vector<std::size_t> order(idx.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return std::fabs(w[a]) > std::fabs(w[b]); });
            for (std::size_t k : order) {
                const double step = direction * w[k];
                if (step > 0.0 && idx[k] + 1 < ds.features[k].cardinality()) {
                    ++idx[k];
                    return Instance(source.spec_ptr(), std::move(idx));
                }
                if (step < 0.0 && idx[k] > 0) {
                    --idx[k];
                    return Instance(source.spec_ptr(), std::move(idx));
                }
            }
            return source;
        }
        case ScePolicy::oracle_minimal: {
            std::lock_guard lock(mutex_);
            auto& state = state_for(source.spec_ptr());
            const auto& boundary = injected_ && same_spec(injected_->spec(), ds) ? *injected_ : *state.boundary;
            try {
                auto result = minimal_counterfactual(boundary, source, *state.distance);
                return Instance::from_id(source.spec_ptr(), result.argmin_set.front());
            } catch (const Error& e) {
                if (e.code() != Errc::no_counterfactual) throw;
                return source;
            }
        }
        case ScePolicy::random_uniform: {
            const std::size_t n = ds.size();
            if (n < 2) return source;
            std::mt19937_64 rng(derive_seed(spec_.seed, fmt::format("sce:{}:{}:{}", ds.name, source.id(), replicate)));
            std::size_t id = uniform_index(rng, n - 1);
            if (id >= source.id()) ++id;
            return Instance::from_id(source.spec_ptr(), id);
        }
    }
    return source;
}

int MockBackend::answer_mcq(const Instance& anchor, std::span<const Instance> options, int replicate) const {
    if (options.empty()) throw Error(Errc::empty_input, "mcq query has no options");
    switch (spec_.mcq_policy) {
        case McqPolicy::oracle: {
            int best = 0;
            double best_d = gower(anchor.spec(), anchor, options[0]);
            for (std::size_t i = 1; i < options.size(); ++i) {
                const double d = gower(anchor.spec(), anchor, options[i]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(i);
                }
            }
            return best;
        }
        case McqPolicy::random: {
            std::string material = fmt::format("mcq:{}:{}:{}", anchor.spec().name, anchor.id(), replicate);
            for (const auto& o : options) material += fmt::format(":{}", o.id());
            std::mt19937_64 rng(derive_seed(spec_.seed, material));
            return static_cast<int>(uniform_index(rng, options.size()));
        }
        case McqPolicy::fixed: return std::min<int>(spec_.mcq_letter - 'A', static_cast<int>(options.size()) - 1);
    }
    return 0;
}

std::string MockBackend::complete(const Query& query) {
    if (!query.subject) {
        throw Error(Errc::config_error, "mock backends answer structured queries only; the query has no subject");
    }
    const int replicate = spec_.temperature > 0.0 ? query.replicate : 0;
    switch (query.kind) {
        case QueryKind::predict: {
            const int label = predict_label(*query.subject, replicate);
            return query.labels[static_cast<std::size_t>(label)];
        }
        case QueryKind::sce: return instance_to_json(propose(*query.subject, query.predicted, replicate)).dump();
        case QueryKind::mcq: {
            const int answer = answer_mcq(*query.subject, query.options, replicate);
            return std::string(1, static_cast<char>('A' + answer));
        }
    }
    throw Error(Errc::config_error, "unknown query kind");
}

}  // namespace sce
