#include "sce/boundary.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sce/errors.hpp"

namespace sce {

DecisionBoundary::DecisionBoundary(SpecPtr spec, std::vector<std::uint8_t> labels, BoundaryProvenance provenance)
    : spec_(std::move(spec)), labels_(std::move(labels)), provenance_(std::move(provenance)) {
    if (labels_.size() != spec_->size()) {
        throw Error(Errc::arity_mismatch, fmt::format("boundary over '{}' needs {} labels, got {}", spec_->name,
                                                      spec_->size(), labels_.size()));
    }
    for (auto l : labels_) {
        if (l > 1) throw Error(Errc::out_of_domain, "boundary labels must be class indices 0 or 1");
    }
}

bool DecisionBoundary::uniform() const noexcept {
    return std::adjacent_find(labels_.begin(), labels_.end(), std::not_equal_to<>()) == labels_.end();
}

bool DecisionBoundary::operator==(const DecisionBoundary& other) const {
    return same_spec(*spec_, *other.spec_) && labels_ == other.labels_ && provenance_ == other.provenance_;
}

DecisionBoundary sweep_predictions(Gateway& gateway, const Dataset& dataset, const PromptTemplate& tmpl, int replicate) {
    if (!same_spec(dataset.spec(), *tmpl.spec)) {
        throw Error(Errc::dataset_mismatch, "prompt template targets a different dataset");
    }
    std::vector<Query> queries;
    queries.reserve(dataset.size());
    for (const auto& x : dataset) {
        Query q;
        q.kind = QueryKind::predict;
        q.prompt = render_prediction_prompt(tmpl, x);
        q.subject = x;
        q.labels = dataset.spec().task.class_labels;
        q.replicate = replicate;
        queries.push_back(std::move(q));
    }
    auto outcomes = gateway.predict_all(queries);
    std::vector<std::uint8_t> labels(dataset.size(), 0);
    std::vector<std::size_t> failed;
    std::optional<Error> first_error;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (const auto* label = std::get_if<int>(&outcomes[i])) {
            labels[i] = static_cast<std::uint8_t>(*label);
        } else {
            failed.push_back(i);
            if (!first_error) first_error = std::get<Error>(outcomes[i]);
        }
    }
    if (!failed.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < failed.size() && i < 20; ++i) {
            ids += (i ? "," : "") + std::to_string(failed[i]);
        }
        if (failed.size() > 20) ids += ",...";
        throw Error(first_error->code(), fmt::format("sweep failed for {} instance(s) [{}]: {}", failed.size(), ids,
                                                     first_error->what()));
    }
    BoundaryProvenance provenance{gateway.backend().model_id(), tmpl.prediction_hash(), gateway.backend().temperature(),
                                  replicate};
    return DecisionBoundary(dataset.spec_ptr(), std::move(labels), std::move(provenance));
}

int lookup(const DecisionBoundary& boundary, const Instance& instance) {
    if (!same_spec(boundary.spec(), instance.spec())) {
        throw Error(Errc::dataset_mismatch, fmt::format("instance of '{}' looked up in a '{}' boundary",
                                                        instance.spec().name, boundary.spec().name));
    }
    return boundary.label(instance.id());
}

bool MinimalCFResult::contains(std::size_t id) const {
    return std::binary_search(argmin_set.begin(), argmin_set.end(), id);
}

namespace {

std::optional<MinimalCFResult> scan(const DecisionBoundary& boundary, std::size_t source,
                                    const DistanceEvaluator& distance, int target) {
    MinimalCFResult result;
    result.source_id = source;
    result.target = target;
    result.kind = distance.kind().tag;
    bool found = false;
    const auto labels = boundary.labels();
    for (std::size_t id = 0; id < labels.size(); ++id) {
        // the source itself is never a counterfactual, even when it carries the target label
        if (id == source || labels[id] != target) continue;
        const double d = distance(source, id);
        if (!found || d < result.min_distance) {
            found = true;
            result.min_distance = d;
            result.argmin_set.assign(1, id);
        } else if (d == result.min_distance) {
            result.argmin_set.push_back(id);
        }
    }
    if (!found) return std::nullopt;
    return result;
}

void require_evaluator_matches(const DecisionBoundary& boundary, const DistanceEvaluator& distance) {
    if (!same_spec(boundary.spec(), *distance.spec())) {
        throw Error(Errc::dataset_mismatch, "distance evaluator and boundary cover different datasets");
    }
}

}  // namespace

MinimalCFResult minimal_counterfactual(const DecisionBoundary& boundary, const Instance& source,
                                       const DistanceEvaluator& distance, std::optional<int> target) {
    require_evaluator_matches(boundary, distance);
    if (!same_spec(boundary.spec(), source.spec())) {
        throw Error(Errc::dataset_mismatch, "source instance belongs to a different dataset");
    }
    const int y = target.value_or(1 - boundary.label(source.id()));
    if (y != 0 && y != 1) throw Error(Errc::out_of_domain, "target must be a class index 0 or 1");
    auto result = scan(boundary, source.id(), distance, y);
    if (!result) {
        throw Error(Errc::no_counterfactual, fmt::format("no instance of '{}' carries the label '{}'",
                                                         boundary.spec().name, boundary.spec().label(y)));
    }
    return std::move(*result);
}

std::vector<std::optional<MinimalCFResult>> minimal_counterfactuals(const DecisionBoundary& boundary,
                                                                    const DistanceEvaluator& distance) {
    require_evaluator_matches(boundary, distance);
    std::vector<std::optional<MinimalCFResult>> out;
    out.reserve(boundary.size());
    for (std::size_t id = 0; id < boundary.size(); ++id) {
        out.push_back(scan(boundary, id, distance, 1 - boundary.label(id)));
    }
    return out;
}

AgreementStats boundary_agreement(std::span<const DecisionBoundary> boundaries,
                                  std::span<const CounterfactualProbe> invalid_probes) {
    if (boundaries.size() < 2) {
        throw Error(Errc::empty_input, "agreement needs at least two boundaries");
    }
    const auto& first = boundaries.front();
    for (const auto& b : boundaries) {
        if (!same_spec(first.spec(), b.spec())) {
            throw Error(Errc::dataset_mismatch, "boundaries cover different datasets");
        }
    }
    const std::size_t n = first.size();
    const double m = static_cast<double>(boundaries.size());
    AgreementStats stats;
    stats.class1_fraction.assign(n, 0.0);
    std::size_t unanimous = 0;
    for (std::size_t id = 0; id < n; ++id) {
        std::size_t class1 = 0;
        for (const auto& b : boundaries) {
            if (b.label(id) == 0) ++class1;
        }
        stats.class1_fraction[id] = static_cast<double>(class1) / m;
        if (class1 == 0 || class1 == boundaries.size()) ++unanimous;
    }
    stats.unanimity = static_cast<double>(unanimous) / static_cast<double>(n);

    double disagreement = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
        for (std::size_t j = i + 1; j < boundaries.size(); ++j) {
            std::size_t flips = 0;
            for (std::size_t id = 0; id < n; ++id) {
                if (boundaries[i].label(id) != boundaries[j].label(id)) ++flips;
            }
            stats.max_pairwise_flips = std::max(stats.max_pairwise_flips, flips);
            disagreement += static_cast<double>(flips) / static_cast<double>(n);
            ++pairs;
        }
    }
    stats.mean_pairwise_disagreement = disagreement / static_cast<double>(pairs);

    if (!invalid_probes.empty()) {
        std::size_t remain = 0;
        for (const auto& probe : invalid_probes) {
            if (probe.counterfactual_id >= n) {
                throw Error(Errc::out_of_domain, fmt::format("probe instance id {} out of range", probe.counterfactual_id));
            }
            const bool still_invalid = std::all_of(boundaries.begin(), boundaries.end(), [&](const DecisionBoundary& b) {
                return b.label(probe.counterfactual_id) != probe.target;
            });
            if (still_invalid) ++remain;
        }
        stats.invalid_probes = invalid_probes.size();
        stats.remain_invalid = static_cast<double>(remain) / static_cast<double>(invalid_probes.size());
    }
    return stats;
}

void write_boundary(const DecisionBoundary& boundary, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    const auto& spec = boundary.spec();
    const auto& p = boundary.provenance();
    nlohmann::ordered_json header = {{"dataset", spec.name},
                                     {"spec_hash", spec_hash(spec)},
                                     {"class_labels", {spec.task.class_labels[0], spec.task.class_labels[1]}},
                                     {"instances", boundary.size()},
                                     {"provenance",
                                      {{"model_id", p.model_id},
                                       {"template_hash", p.template_hash},
                                       {"temperature", p.temperature},
                                       {"replicate", p.replicate}}}};
    out << header.dump() << '\n';
    for (std::size_t id = 0; id < boundary.size(); ++id) {
        nlohmann::ordered_json line = {{"instance_id", id}, {"label", spec.label(boundary.label(id))}};
        out << line.dump() << '\n';
    }
}

DecisionBoundary read_boundary(const SpecPtr& spec, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open boundary file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::parse_error, path.string() + ": empty boundary file");
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.at("spec_hash").get<std::string>() != spec_hash(*spec)) {
            throw Error(Errc::dataset_mismatch, path.string() + ": boundary was recorded for a different dataset spec");
        }
        const auto& prov = header.at("provenance");
        BoundaryProvenance provenance{prov.at("model_id").get<std::string>(), prov.at("template_hash").get<std::string>(),
                                      prov.at("temperature").get<double>(), prov.at("replicate").get<int>()};
        std::vector<std::uint8_t> labels(spec->size(), 0);
        std::vector<bool> seen(spec->size(), false);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto rec = nlohmann::json::parse(line);
            const auto id = rec.at("instance_id").get<std::size_t>();
            const auto label = spec->label_index(rec.at("label").get<std::string>());
            if (id >= labels.size() || !label || seen[id]) {
                throw Error(Errc::parse_error, fmt::format("{}: bad record for instance {}", path.string(), id));
            }
            labels[id] = static_cast<std::uint8_t>(*label);
            seen[id] = true;
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
            throw Error(Errc::parse_error, path.string() + ": boundary does not cover every instance");
        }
        return DecisionBoundary(spec, std::move(labels), std::move(provenance));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }
}

}  // namespace sce
