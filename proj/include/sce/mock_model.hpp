#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sce/boundary.hpp"
#include "sce/dataset.hpp"
#include "sce/distance.hpp"
#include "sce/gateway.hpp"

namespace sce {

// score = sum_k w_k * rank_k / (cardinality_k - 1); class_labels[0] iff score >= threshold.
struct LinearRule {
    std::vector<double> weights;
    double threshold = 0.0;

    [[nodiscard]] double score(const Instance& x) const;
    [[nodiscard]] int classify(const Instance& x) const;
};

double normalized_rank(const Instance& x, std::size_t feature);

enum class ScePolicy { extreme_jump, conservative_step, oracle_minimal, random_uniform };
enum class McqPolicy { oracle, random, fixed };

std::string_view to_string(ScePolicy policy) noexcept;
ScePolicy parse_sce_policy(std::string_view text);
std::string_view to_string(McqPolicy policy) noexcept;
McqPolicy parse_mcq_policy(std::string_view text);

struct MockModelSpec {
    std::string name = "linear";
    LinearRule classifier;
    ScePolicy sce_policy = ScePolicy::extreme_jump;
    // Weights the SCE policy believes in; the classifier's when absent.
    std::optional<std::vector<double>> policy_weights;
    // Probability of flipping a predicted label, decided per instance from noise_seed.
    double label_noise = 0.0;
    std::uint64_t noise_seed = 0;
    McqPolicy mcq_policy = McqPolicy::oracle;
    char mcq_letter = 'A';
    std::uint64_t seed = 0;
    double temperature = 0.0;
    std::size_t max_concurrency = 4;
    DistanceTag oracle_distance = DistanceTag::gower;

    [[nodiscard]] const std::vector<double>& steering_weights() const {
        return policy_weights ? *policy_weights : classifier.weights;
    }
};

void validate_mock_spec(const MockModelSpec& spec);
// Weights may be an array in feature order or an object keyed by feature name;
// the object form needs the dataset spec to resolve positions.
MockModelSpec mock_spec_from_json(const nlohmann::json& doc, const DatasetSpec* dataset = nullptr);
nlohmann::ordered_json mock_spec_to_json(const MockModelSpec& spec);

// Deterministic local model. Answers from the structured query fields and
// ignores prompt wording.
class MockBackend final : public Backend {
public:
    explicit MockBackend(MockModelSpec spec);

    [[nodiscard]] std::string model_id() const override { return model_id_; }
    [[nodiscard]] double temperature() const override { return spec_.temperature; }
    [[nodiscard]] std::size_t max_concurrency() const override { return spec_.max_concurrency; }
    std::string complete(const Query& query) override;

    // oracle_minimal answers against this boundary instead of the mock's own labels.
    void inject_boundary(std::shared_ptr<const DecisionBoundary> boundary);

    [[nodiscard]] const MockModelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] int predict_label(const Instance& x, int replicate = 0) const;
    [[nodiscard]] Instance propose(const Instance& source, int predicted, int replicate = 0);
    [[nodiscard]] int answer_mcq(const Instance& anchor, std::span<const Instance> options, int replicate = 0) const;

private:
    struct DatasetState {
        std::unique_ptr<Dataset> dataset;
        std::unique_ptr<DistanceEvaluator> distance;
        std::shared_ptr<const DecisionBoundary> boundary;
    };
    DatasetState& state_for(const SpecPtr& spec);
    void check_arity(const DatasetSpec& dataset) const;

    MockModelSpec spec_;
    std::string model_id_;
    std::shared_ptr<const DecisionBoundary> injected_;
    std::mutex mutex_;
    std::map<std::string, DatasetState> states_;
};

}  // namespace sce
