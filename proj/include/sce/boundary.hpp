#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sce/dataset.hpp"
#include "sce/distance.hpp"
#include "sce/gateway.hpp"
#include "sce/prompting.hpp"

namespace sce {

struct BoundaryProvenance {
    std::string model_id;
    std::string template_hash;
    double temperature = 0.0;
    int replicate = 0;

    bool operator==(const BoundaryProvenance&) const = default;
};

// The model's label for every instance of a complete dataset, indexed by id.
// Labels are class indices into the spec's class_labels.
class DecisionBoundary {
public:
    DecisionBoundary(SpecPtr spec, std::vector<std::uint8_t> labels, BoundaryProvenance provenance);

    [[nodiscard]] const DatasetSpec& spec() const noexcept { return *spec_; }
    [[nodiscard]] const SpecPtr& spec_ptr() const noexcept { return spec_; }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] int label(std::size_t id) const { return labels_.at(id); }
    [[nodiscard]] std::span<const std::uint8_t> labels() const noexcept { return labels_; }
    [[nodiscard]] const BoundaryProvenance& provenance() const noexcept { return provenance_; }
    [[nodiscard]] bool uniform() const noexcept;

    bool operator==(const DecisionBoundary& other) const;

private:
    SpecPtr spec_;
    std::vector<std::uint8_t> labels_;
    BoundaryProvenance provenance_;
};

// Predicts every instance through the gateway. Failing instances abort the
// sweep with one aggregated error listing their ids.
DecisionBoundary sweep_predictions(Gateway& gateway, const Dataset& dataset, const PromptTemplate& tmpl,
                                   int replicate = 0);

// Validity re-evaluation: a table lookup, never a fresh model call.
int lookup(const DecisionBoundary& boundary, const Instance& instance);

struct MinimalCFResult {
    std::size_t source_id = 0;
    int target = 0;
    double min_distance = 0.0;
    // ascending ids
    std::vector<std::size_t> argmin_set;
    DistanceTag kind = DistanceTag::gower;

    [[nodiscard]] bool contains(std::size_t id) const;
};

// Exhaustive scan in ascending id order with exact comparisons. The target
// defaults to the complement of the source's boundary label.
// Throws Error(no_counterfactual) when no instance carries the target label.
MinimalCFResult minimal_counterfactual(const DecisionBoundary& boundary, const Instance& source,
                                       const DistanceEvaluator& distance, std::optional<int> target = std::nullopt);

// One result per id; nullopt for sources without a counterfactual.
std::vector<std::optional<MinimalCFResult>> minimal_counterfactuals(const DecisionBoundary& boundary,
                                                                    const DistanceEvaluator& distance);

// A counterfactual proposed in an earlier run, re-checked against other boundaries.
struct CounterfactualProbe {
    std::size_t source_id = 0;
    std::size_t counterfactual_id = 0;
    int target = 0;
};

struct AgreementStats {
    // share of boundaries assigning class_labels[0], per instance id
    std::vector<double> class1_fraction;
    // fraction of instances on which every boundary agrees
    double unanimity = 1.0;
    // mean over boundary pairs of the fraction of instances with differing labels
    double mean_pairwise_disagreement = 0.0;
    std::size_t max_pairwise_flips = 0;
    // fraction of the supplied invalid counterfactuals that stay invalid under every boundary
    std::optional<double> remain_invalid;
    std::size_t invalid_probes = 0;
};

AgreementStats boundary_agreement(std::span<const DecisionBoundary> boundaries,
                                  std::span<const CounterfactualProbe> invalid_probes = {});

// Line-delimited file: a provenance header, then {instance_id, label} per line.
void write_boundary(const DecisionBoundary& boundary, const std::filesystem::path& path);
DecisionBoundary read_boundary(const SpecPtr& spec, const std::filesystem::path& path);

}  // namespace sce
