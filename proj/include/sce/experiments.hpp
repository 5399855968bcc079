#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sce/boundary.hpp"
#include "sce/cache.hpp"
#include "sce/dataset.hpp"
#include "sce/distance.hpp"
#include "sce/gateway.hpp"
#include "sce/metrics.hpp"
#include "sce/prompting.hpp"

namespace sce {

inline constexpr std::string_view kCodeVersion = "0.1.0";

struct RunConfig {
    std::string name = "run";
    // built-in name, or the spec document given by dataset_file
    std::string dataset;
    std::optional<std::filesystem::path> dataset_file;
    std::optional<std::filesystem::path> prompts;
    nlohmann::json backend;
    std::vector<PromptSetting> settings = {PromptSetting::unconstrained, PromptSetting::minimal};
    std::vector<DistanceTag> distances = {DistanceTag::gower};
    double temperature = 0.0;
    int replicates = 1;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "runs/default";
    std::optional<std::filesystem::path> cache_dir;
    // Pairs SCE runs with a previously recorded boundary instead of a fresh sweep.
    std::optional<std::filesystem::path> boundary_file;
    nlohmann::json embedding = {{"type", "mock"}, {"dimension", 64}};
    bool offline = false;
    std::size_t mcq_trials = 1000;
    std::optional<std::filesystem::path> perturbations;
    std::optional<std::filesystem::path> sce_perturbations;
    PromptSetting sensitivity_setting = PromptSetting::minimal;
    // Earlier run directory whose invalid SCEs are re-checked by the consistency experiment.
    std::optional<std::filesystem::path> prior_run;

    [[nodiscard]] std::filesystem::path effective_cache_dir() const {
        return cache_dir.value_or(output_dir / "cache");
    }
};

void validate_run_config(const RunConfig& config);
// Unknown keys are rejected. Relative paths resolve against base_dir.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::ordered_json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

// `key=value` with a JSON value, or a bare string. Dotted keys reach into the
// backend and embedding objects; any other key must be a declared field.
void apply_override(nlohmann::json& doc, std::string_view assignment);

// Everything a run needs, resolved from a config.
struct RunContext {
    RunConfig config;
    SpecPtr spec;
    std::unique_ptr<Dataset> dataset;
    std::shared_ptr<const PromptTemplate> prompt;
    std::unique_ptr<Backend> backend;
    std::unique_ptr<CacheStore> cache;
};

RunContext open_run(RunConfig config);
std::unique_ptr<Backend> make_backend(const nlohmann::json& doc, const DatasetSpec& spec, double temperature);
DistanceKind make_distance(DistanceTag tag, const RunConfig& config, std::shared_ptr<const PromptTemplate> prompt);

// Written before any model traffic and finalized with output digests.
// One file per command: <output_dir>/manifest_<command>.json.
class RunManifest {
public:
    RunManifest(const RunContext& run, std::string command);
    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    void set(const std::string& key, nlohmann::ordered_json value);
    void write_started();
    void finalize();
    [[nodiscard]] std::filesystem::path path() const;

private:
    void write(std::string_view status);

    std::filesystem::path dir_;
    std::string command_;
    nlohmann::ordered_json doc_;
    std::vector<std::filesystem::path> outputs_;
};

struct SceRunResult {
    std::vector<EvaluationReport> reports;
    std::vector<std::filesystem::path> detail_files;
    std::filesystem::path report_file;
    GatewayStats stats;
};

// sweep -> elicitation -> parse -> oracle -> aggregate, every stage persisted.
SceRunResult run_sce_experiment(RunContext& run);

// Boundary for one replicate: the configured boundary file, or a sweep.
DecisionBoundary obtain_boundary(RunContext& run, Gateway& gateway, int replicate);

std::vector<SCERecord> elicit_sces(Gateway& gateway, const DecisionBoundary& boundary, const PromptTemplate& tmpl,
                                   PromptSetting setting, int replicate = 0);

struct MCQTrial {
    Instance anchor;
    std::vector<Instance> options;
    int correct = 0;
};

std::vector<MCQTrial> generate_mcq_trials(const Dataset& dataset, std::size_t count, std::uint64_t seed);

// Index 0-3 of the chosen option, or nullopt when no single letter is identifiable.
std::optional<int> parse_mcq_answer(std::string_view text);

struct McqResult {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t unresolved = 0;
    double accuracy_pct = 0.0;
    std::vector<std::optional<int>> answers;
    std::vector<std::string> raw;
};

McqResult run_mcq_experiment(Gateway& gateway, const PromptTemplate& tmpl, std::span<const MCQTrial> trials);

struct ConsistencyResult {
    std::vector<DecisionBoundary> boundaries;
    AgreementStats stats;
};

ConsistencyResult run_boundary_consistency(Gateway& gateway, const Dataset& dataset, const PromptTemplate& base,
                                           const PerturbationSet& perturbations,
                                           std::span<const CounterfactualProbe> invalid_probes = {});

// Parsed, changed SCEs that the boundary does not label with the target.
std::vector<CounterfactualProbe> invalid_probes(std::span<const SCERecord> records, const DecisionBoundary& boundary);

struct SensitivityResult {
    std::size_t variant = 0;
    std::vector<EvaluationReport> reports;
};

std::vector<SensitivityResult> run_prompt_sensitivity(Gateway& gateway, const DecisionBoundary& boundary,
                                                      const PromptTemplate& base, PromptSetting setting,
                                                      const PerturbationSet& variants,
                                                      std::span<const DistanceEvaluator* const> distances);

}  // namespace sce
