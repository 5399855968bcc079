#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sce/dataset.hpp"

namespace sce {

enum class PromptSetting { unconstrained, minimal, self_predict };

std::string_view to_string(PromptSetting setting) noexcept;
PromptSetting parse_setting(std::string_view text);
std::vector<PromptSetting> all_settings();

// Text with `{name}` placeholders; `{{` and `}}` are literal braces.
class TextTemplate {
public:
    TextTemplate() = default;
    static TextTemplate parse(std::string_view text);

    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] std::size_t count(std::string_view placeholder) const;
    [[nodiscard]] std::vector<std::string> placeholders() const;

    // Throws Error(unresolved_placeholder) when lookup yields nothing.
    [[nodiscard]] std::string render(const std::function<std::optional<std::string>(std::string_view)>& lookup) const;

private:
    struct Segment {
        bool placeholder = false;
        std::string text;
    };
    std::string source_;
    std::vector<Segment> segments_;
};

struct PromptTemplate {
    SpecPtr spec;
    TextTemplate prediction;
    // feature list only; the input to the semantic distance
    TextTemplate respondent;
    TextTemplate unconstrained;
    TextTemplate minimal;
    TextTemplate self_predict;
    std::optional<TextTemplate> mcq;
    std::string distance_definition;
    std::string self_prediction_plan;

    [[nodiscard]] const TextTemplate& sce_text(PromptSetting setting) const;
    [[nodiscard]] std::string prediction_hash() const;
    [[nodiscard]] std::string content_hash() const;
};

void validate_prediction_template(const DatasetSpec& spec, const TextTemplate& text);
void validate_respondent_template(const DatasetSpec& spec, const TextTemplate& text);
void validate_sce_template(const DatasetSpec& spec, const TextTemplate& text, PromptSetting setting);

PromptTemplate prompt_template_from_json(SpecPtr spec, const nlohmann::json& doc);
PromptTemplate load_prompt_template(SpecPtr spec, const std::filesystem::path& path);

// $SCE_ASSET_DIR when set, otherwise the directory the build was configured with.
std::filesystem::path asset_dir();
std::filesystem::path default_prompt_path(const DatasetSpec& spec);
PromptTemplate default_prompt_template(SpecPtr spec);

using FeasibleValues = std::vector<std::vector<FeatureValue>>;
FeasibleValues full_ranges(const DatasetSpec& spec);

std::string render_prediction_prompt(const PromptTemplate& tmpl, const Instance& instance);
std::string render_respondent(const PromptTemplate& tmpl, const Instance& instance);
std::string render_sce_prompt(const PromptTemplate& tmpl, PromptSetting setting, const Instance& instance,
                              std::string_view predicted, const FeasibleValues& ranges);
std::string render_mcq_prompt(const PromptTemplate& tmpl, const Instance& anchor, std::span<const Instance> options);

// JSON schema sent as a structured-output constraint with SCE requests.
nlohmann::json sce_response_schema(const DatasetSpec& spec);

struct MalformedSCE {
    enum class Reason { not_parseable, missing_field, out_of_domain_value, arity_mismatch };
    Reason reason = Reason::not_parseable;
    std::string raw_text;
    std::string detail;
};

std::string_view to_string(MalformedSCE::Reason reason) noexcept;
MalformedSCE::Reason parse_malformed_reason(std::string_view text);

using SceOutcome = std::variant<Instance, MalformedSCE>;

// Never throws on bad model output; failures come back as MalformedSCE.
SceOutcome parse_sce_response(std::string_view raw, const SpecPtr& spec);

struct PerturbationSet {
    std::string name;
    std::vector<TextTemplate> templates;

    [[nodiscard]] std::size_t size() const noexcept { return templates.size(); }
};

// Prediction-prompt variants; each entry must satisfy the prediction template rules.
PerturbationSet load_perturbations(const std::filesystem::path& path, const PromptTemplate& base);
// SCE-prompt variants for one setting.
PerturbationSet load_sce_perturbations(const std::filesystem::path& path, const PromptTemplate& base,
                                       PromptSetting setting);

PromptTemplate with_prediction_text(const PromptTemplate& base, const TextTemplate& text);
PromptTemplate with_sce_text(const PromptTemplate& base, PromptSetting setting, const TextTemplate& text);

}  // namespace sce
