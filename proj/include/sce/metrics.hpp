#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sce/boundary.hpp"
#include "sce/dataset.hpp"
#include "sce/distance.hpp"
#include "sce/prompting.hpp"

namespace sce {

struct SCERecord {
    std::size_t source_id = 0;
    int predicted = 0;
    int target = 1;
    SceOutcome outcome = MalformedSCE{};
    std::string raw_response;
    PromptSetting setting = PromptSetting::unconstrained;
    std::string model_id;

    [[nodiscard]] const Instance* counterfactual() const { return std::get_if<Instance>(&outcome); }
    [[nodiscard]] const MalformedSCE* malformed() const { return std::get_if<MalformedSCE>(&outcome); }
};

// Exactly one status per record.
enum class RecordStatus { valid, invalid, malformed, no_counterfactual, unchanged };

std::string_view to_string(RecordStatus status) noexcept;

// Parsed, different from the source, and labelled with the target by the boundary.
bool is_valid(const SCERecord& record, const DecisionBoundary& boundary);

// d(source, sce) - min_distance. Throws Error(kind_mismatch) when the evaluator
// and the oracle result use different distances.
double excess_distance(const SCERecord& record, const MinimalCFResult& minimal, const DistanceEvaluator& distance);

bool exact_match(const SCERecord& record, const MinimalCFResult& minimal);

struct EvaluationReport {
    std::string model_id;
    std::string dataset;
    PromptSetting setting = PromptSetting::unconstrained;
    DistanceTag kind = DistanceTag::gower;
    int replicate = 0;

    std::size_t total = 0;
    std::size_t valid = 0;
    std::size_t invalid = 0;
    std::size_t malformed = 0;
    std::size_t no_counterfactual = 0;
    std::size_t unchanged = 0;

    // nullopt when the denominator is empty
    std::optional<double> validity_pct;
    std::optional<double> mean_excess_distance;
    std::optional<double> exact_match_pct;
    std::optional<double> normalized_mean_ed;
    double max_pairwise = 0.0;

    [[nodiscard]] std::size_t evaluable() const noexcept { return total - no_counterfactual; }
};

struct DetailRow {
    std::size_t instance_id = 0;
    int predicted = 0;
    int target = 1;
    std::optional<Instance> sce;
    RecordStatus status = RecordStatus::malformed;
    std::optional<double> distance;
    std::optional<double> min_distance;
    std::optional<double> ed;
    bool exact_match = false;
    std::string malformed_reason;
};

struct Evaluation {
    EvaluationReport report;
    // ascending instance_id
    std::vector<DetailRow> rows;
};

// Records are sorted by source id before any summation, so the result does not
// depend on input order. `minima`, when given, holds the oracle result per
// instance id for the boundary's own labels.
Evaluation evaluate_records(std::span<const SCERecord> records, const DecisionBoundary& boundary,
                            const DistanceEvaluator& distance,
                            const std::vector<std::optional<MinimalCFResult>>* minima = nullptr);

EvaluationReport aggregate(std::span<const SCERecord> records, const DecisionBoundary& boundary,
                           const DistanceEvaluator& distance);

// Report CSV: one row per (model, dataset, setting, distance, replicate).
std::vector<std::string> report_columns();
std::vector<std::string> report_fields(const EvaluationReport& report);
void write_report_csv(std::span<const EvaluationReport> reports, const std::filesystem::path& path);
std::vector<EvaluationReport> read_report_csv(const std::filesystem::path& path);

void write_detail_csv(const Evaluation& evaluation, const DatasetSpec& spec, const std::filesystem::path& path);

// Records as line-delimited JSON, one object per SCE.
nlohmann::ordered_json record_to_json(const SCERecord& record, const DatasetSpec& spec);
SCERecord record_from_json(const nlohmann::json& doc, const SpecPtr& spec);
void write_records(std::span<const SCERecord> records, const DatasetSpec& spec, const std::filesystem::path& path);
std::vector<SCERecord> read_records(const std::filesystem::path& path, const SpecPtr& spec);

}  // namespace sce
