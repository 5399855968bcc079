#include "sce/prompting.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "sce/errors.hpp"
#include "sce/hashing.hpp"
#include "sce/text.hpp"

#ifndef SCE_DEFAULT_ASSET_DIR
#define SCE_DEFAULT_ASSET_DIR "assets"
#endif

namespace sce {

std::string_view to_string(PromptSetting setting) noexcept {
    switch (setting) {
        case PromptSetting::unconstrained: return "unconstrained";
        case PromptSetting::minimal: return "minimal";
        case PromptSetting::self_predict: return "self_predict";
    }
    return "unconstrained";
}

PromptSetting parse_setting(std::string_view text) {
    for (auto s : all_settings()) {
        if (to_string(s) == text) return s;
    }
    throw Error(Errc::unknown_setting, fmt::format("unknown prompt setting '{}'", text));
}

std::vector<PromptSetting> all_settings() {
    return {PromptSetting::unconstrained, PromptSetting::minimal, PromptSetting::self_predict};
}

TextTemplate TextTemplate::parse(std::string_view text) {
    TextTemplate t;
    t.source_ = std::string(text);
    std::string literal;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '{') {
            if (i + 1 < text.size() && text[i + 1] == '{') {
                literal.push_back('{');
                ++i;
                continue;
            }
            const std::size_t close = text.find('}', i + 1);
            if (close == std::string_view::npos) {
                throw Error(Errc::invalid_template, fmt::format("unterminated placeholder at offset {}", i));
            }
            const std::string name(text.substr(i + 1, close - i - 1));
            if (name.empty() || name.find_first_of("{ \n\t") != std::string::npos) {
                throw Error(Errc::invalid_template, fmt::format("malformed placeholder '{{{}}}'", name));
            }
            if (!literal.empty()) {
                t.segments_.push_back({false, std::move(literal)});
                literal.clear();
            }
            t.segments_.push_back({true, name});
            i = close;
        } else if (c == '}') {
            if (i + 1 < text.size() && text[i + 1] == '}') {
                ++i;
            }
            literal.push_back('}');
        } else {
            literal.push_back(c);
        }
    }
    if (!literal.empty()) {
        t.segments_.push_back({false, std::move(literal)});
    }
    return t;
}

std::size_t TextTemplate::count(std::string_view placeholder) const {
    std::size_t n = 0;
    for (const auto& s : segments_) {
        if (s.placeholder && s.text == placeholder) ++n;
    }
    return n;
}

std::vector<std::string> TextTemplate::placeholders() const {
    std::vector<std::string> names;
    for (const auto& s : segments_) {
        if (s.placeholder) names.push_back(s.text);
    }
    return names;
}

std::string TextTemplate::render(const std::function<std::optional<std::string>(std::string_view)>& lookup) const {
    std::string out;
    for (const auto& s : segments_) {
        if (!s.placeholder) {
            out += s.text;
            continue;
        }
        auto value = lookup(s.text);
        if (!value) {
            throw Error(Errc::unresolved_placeholder, fmt::format("unresolved placeholder '{{{}}}'", s.text));
        }
        out += *value;
    }
    return out;
}

const TextTemplate& PromptTemplate::sce_text(PromptSetting setting) const {
    switch (setting) {
        case PromptSetting::unconstrained: return unconstrained;
        case PromptSetting::minimal: return minimal;
        case PromptSetting::self_predict: return self_predict;
    }
    throw Error(Errc::unknown_setting, "unknown prompt setting");
}

std::string PromptTemplate::prediction_hash() const {
    return sha256_hex(prediction.source());
}

std::string PromptTemplate::content_hash() const {
    std::string material;
    for (const auto* t : {&prediction, &respondent, &unconstrained, &minimal, &self_predict}) {
        material += t->source();
        material.push_back('\0');
    }
    material += distance_definition;
    material.push_back('\0');
    material += self_prediction_plan;
    material.push_back('\0');
    if (mcq) material += mcq->source();
    return sha256_hex(material);
}

namespace {

bool is_feature(const DatasetSpec& spec, std::string_view name) {
    return spec.feature_index(name).has_value();
}

void require_allowed(const DatasetSpec& spec, const TextTemplate& text, const std::set<std::string, std::less<>>& extra,
                     std::string_view what) {
    for (const auto& name : text.placeholders()) {
        if (!is_feature(spec, name) && !extra.contains(name)) {
            throw Error(Errc::unresolved_placeholder, fmt::format("{} template: unknown placeholder '{{{}}}'", what, name));
        }
    }
}

void require_features_once(const DatasetSpec& spec, const TextTemplate& text, std::string_view what) {
    for (const auto& f : spec.features) {
        const std::size_t n = text.count(f.name);
        if (n != 1) {
            throw Error(Errc::unresolved_placeholder,
                        fmt::format("{} template: feature placeholder '{{{}}}' appears {} times, expected once", what, f.name, n));
        }
    }
}

void require_present(const TextTemplate& text, std::string_view name, std::string_view what) {
    if (text.count(name) == 0) {
        throw Error(Errc::unresolved_placeholder, fmt::format("{} template: missing placeholder '{{{}}}'", what, name));
    }
}

std::string text_field(const nlohmann::json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) {
        throw Error(Errc::invalid_template, fmt::format("prompt asset is missing section '{}'", key));
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    if (it->is_array()) {
        std::string joined;
        for (std::size_t i = 0; i < it->size(); ++i) {
            if (i > 0) joined.push_back('\n');
            joined += (*it)[i].get<std::string>();
        }
        return joined;
    }
    throw Error(Errc::invalid_template, fmt::format("section '{}' must be a string or a list of lines", key));
}

std::string quote_value(const FeatureValue& v) {
    if (std::holds_alternative<double>(v)) return format_value(v);
    return "\"" + std::get<std::string>(v) + "\"";
}

std::string render_feasible(const DatasetSpec& spec, const FeasibleValues& ranges) {
    std::string out;
    for (std::size_t k = 0; k < spec.feature_count(); ++k) {
        if (k > 0) out.push_back('\n');
        out += fmt::format("- {}: ", spec.features[k].name);
        for (std::size_t i = 0; i < ranges[k].size(); ++i) {
            if (i > 0) out += ", ";
            out += quote_value(ranges[k][i]);
        }
    }
    return out;
}

std::string render_json_shape(const DatasetSpec& spec) {
    std::string out = "{";
    for (std::size_t k = 0; k < spec.feature_count(); ++k) {
        if (k > 0) out += ", ";
        const auto& f = spec.features[k];
        if (f.kind == FeatureKind::numeric_discrete) {
            out += fmt::format("\"{}\": <number from the {} list>", f.name, f.name);
        } else {
            out += fmt::format("\"{}\": \"<text from the {} list>\"", f.name, f.name);
        }
    }
    out += "}";
    return out;
}

const std::set<std::string, std::less<>> kPredictionExtras{"class_1", "class_2", "context"};
const std::set<std::string, std::less<>> kSceExtras{"class_1",         "class_2",        "context",
                                                    "predicted",       "complement",     "feasible_values",
                                                    "json_schema",     "distance_definition", "self_prediction_plan"};

}  // namespace

void validate_prediction_template(const DatasetSpec& spec, const TextTemplate& text) {
    require_allowed(spec, text, kPredictionExtras, "prediction");
    require_features_once(spec, text, "prediction");
    require_present(text, "class_1", "prediction");
    require_present(text, "class_2", "prediction");
}

void validate_respondent_template(const DatasetSpec& spec, const TextTemplate& text) {
    require_allowed(spec, text, {}, "respondent");
    require_features_once(spec, text, "respondent");
}

void validate_sce_template(const DatasetSpec& spec, const TextTemplate& text, PromptSetting setting) {
    const std::string what = std::string(to_string(setting));
    require_allowed(spec, text, kSceExtras, what);
    for (const auto& f : spec.features) {
        require_present(text, f.name, what);
    }
    require_present(text, "complement", what);
    require_present(text, "feasible_values", what);
    if (setting != PromptSetting::unconstrained) {
        require_present(text, "distance_definition", what);
    }
    if (setting == PromptSetting::self_predict) {
        require_present(text, "self_prediction_plan", what);
    }
}

PromptTemplate prompt_template_from_json(SpecPtr spec, const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw Error(Errc::invalid_template, "prompt asset must be an object");
    }
    if (auto it = doc.find("dataset"); it != doc.end() && it->get<std::string>() != spec->name) {
        throw Error(Errc::invalid_template,
                    fmt::format("prompt asset targets '{}', not '{}'", it->get<std::string>(), spec->name));
    }
    PromptTemplate t;
    t.spec = spec;
    t.prediction = TextTemplate::parse(text_field(doc, "prediction"));
    t.respondent = TextTemplate::parse(text_field(doc, "respondent"));
    t.unconstrained = TextTemplate::parse(text_field(doc, "unconstrained"));
    t.minimal = TextTemplate::parse(text_field(doc, "minimal"));
    t.self_predict = TextTemplate::parse(text_field(doc, "self_predict"));
    t.distance_definition = text_field(doc, "distance_definition");
    t.self_prediction_plan = text_field(doc, "self_prediction_plan");
    if (doc.contains("mcq")) {
        t.mcq = TextTemplate::parse(text_field(doc, "mcq"));
    }
    validate_prediction_template(*spec, t.prediction);
    validate_respondent_template(*spec, t.respondent);
    for (auto s : all_settings()) {
        validate_sce_template(*spec, t.sce_text(s), s);
    }
    return t;
}

PromptTemplate load_prompt_template(SpecPtr spec, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io_error, "cannot open prompt asset " + path.string());
    }
    try {
        return prompt_template_from_json(std::move(spec), nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_template, path.string() + ": " + e.what());
    }
}

std::filesystem::path asset_dir() {
    if (const char* env = std::getenv("SCE_ASSET_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return SCE_DEFAULT_ASSET_DIR;
}

std::filesystem::path default_prompt_path(const DatasetSpec& spec) {
    return asset_dir() / "prompts" / (spec.name + ".json");
}

PromptTemplate default_prompt_template(SpecPtr spec) {
    const auto path = default_prompt_path(*spec);
    return load_prompt_template(std::move(spec), path);
}

FeasibleValues full_ranges(const DatasetSpec& spec) {
    FeasibleValues ranges;
    for (const auto& f : spec.features) {
        ranges.push_back(f.values);
    }
    return ranges;
}

namespace {

void require_same_dataset(const PromptTemplate& tmpl, const Instance& instance) {
    if (!same_spec(*tmpl.spec, instance.spec())) {
        throw Error(Errc::dataset_mismatch, fmt::format("instance of '{}' rendered with a '{}' template",
                                                        instance.spec().name, tmpl.spec->name));
    }
}

std::optional<std::string> common_lookup(const Instance& instance, std::string_view name) {
    const auto& spec = instance.spec();
    if (auto k = spec.feature_index(name)) {
        return format_value(instance.value(*k));
    }
    if (name == "class_1") return spec.task.class_labels[0];
    if (name == "class_2") return spec.task.class_labels[1];
    if (name == "context") return spec.task.context;
    return std::nullopt;
}

}  // namespace

std::string render_prediction_prompt(const PromptTemplate& tmpl, const Instance& instance) {
    require_same_dataset(tmpl, instance);
    return tmpl.prediction.render([&](std::string_view name) { return common_lookup(instance, name); });
}

std::string render_respondent(const PromptTemplate& tmpl, const Instance& instance) {
    require_same_dataset(tmpl, instance);
    return tmpl.respondent.render([&](std::string_view name) -> std::optional<std::string> {
        if (auto k = instance.spec().feature_index(name)) return format_value(instance.value(*k));
        return std::nullopt;
    });
}

std::string render_sce_prompt(const PromptTemplate& tmpl, PromptSetting setting, const Instance& instance,
                              std::string_view predicted, const FeasibleValues& ranges) {
    require_same_dataset(tmpl, instance);
    const auto& spec = instance.spec();
    const auto predicted_index = spec.label_index(predicted);
    if (!predicted_index) {
        throw Error(Errc::out_of_domain, fmt::format("'{}' is not a class label of '{}'", predicted, spec.name));
    }
    if (ranges.size() != spec.feature_count()) {
        throw Error(Errc::arity_mismatch, "feasible ranges must list every feature");
    }
    const std::string complement = spec.label(1 - *predicted_index);
    const auto& text = tmpl.sce_text(setting);
    return text.render([&](std::string_view name) -> std::optional<std::string> {
        if (auto v = common_lookup(instance, name)) return v;
        if (name == "predicted") return std::string(predicted);
        if (name == "complement") return complement;
        if (name == "feasible_values") return render_feasible(spec, ranges);
        if (name == "json_schema") return render_json_shape(spec);
        if (name == "distance_definition") return tmpl.distance_definition;
        if (name == "self_prediction_plan") return tmpl.self_prediction_plan;
        return std::nullopt;
    });
}

std::string render_mcq_prompt(const PromptTemplate& tmpl, const Instance& anchor, std::span<const Instance> options) {
    if (!tmpl.mcq) {
        throw Error(Errc::invalid_template, fmt::format("prompt asset for '{}' has no mcq section", tmpl.spec->name));
    }
    if (options.size() != 4) {
        throw Error(Errc::arity_mismatch, "multiple-choice prompts take exactly four options");
    }
    static constexpr std::string_view kOptionNames[] = {"option_a", "option_b", "option_c", "option_d"};
    return tmpl.mcq->render([&](std::string_view name) -> std::optional<std::string> {
        if (name == "anchor") return render_respondent(tmpl, anchor);
        for (std::size_t i = 0; i < 4; ++i) {
            if (name == kOptionNames[i]) return render_respondent(tmpl, options[i]);
        }
        if (name == "distance_definition") return tmpl.distance_definition;
        if (name == "context") return tmpl.spec->task.context;
        return std::nullopt;
    });
}

nlohmann::json sce_response_schema(const DatasetSpec& spec) {
    nlohmann::json properties = nlohmann::json::object();
    nlohmann::json required = nlohmann::json::array();
    for (const auto& f : spec.features) {
        nlohmann::json values = nlohmann::json::array();
        for (const auto& v : f.values) {
            if (const auto* d = std::get_if<double>(&v)) {
                values.push_back(*d);
            } else {
                values.push_back(std::get<std::string>(v));
            }
        }
        properties[f.name] = {{"enum", values}};
        required.push_back(f.name);
    }
    return {{"type", "object"}, {"properties", properties}, {"required", required}, {"additionalProperties", false}};
}

std::string_view to_string(MalformedSCE::Reason reason) noexcept {
    switch (reason) {
        case MalformedSCE::Reason::not_parseable: return "not-parseable";
        case MalformedSCE::Reason::missing_field: return "missing-field";
        case MalformedSCE::Reason::out_of_domain_value: return "out-of-domain-value";
        case MalformedSCE::Reason::arity_mismatch: return "arity-mismatch";
    }
    return "not-parseable";
}

MalformedSCE::Reason parse_malformed_reason(std::string_view text) {
    for (auto r : {MalformedSCE::Reason::not_parseable, MalformedSCE::Reason::missing_field,
                   MalformedSCE::Reason::out_of_domain_value, MalformedSCE::Reason::arity_mismatch}) {
        if (to_string(r) == text) return r;
    }
    throw Error(Errc::parse_error, fmt::format("unknown malformed reason '{}'", text));
}

namespace {

// End offset (exclusive) of the balanced object starting at `open`, if any.
std::optional<std::size_t> balanced_object_end(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::nullopt;
}

std::vector<nlohmann::json> extract_objects(std::string_view text) {
    std::vector<nlohmann::json> objects;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos) {
        auto end = balanced_object_end(text, pos);
        if (end) {
            auto parsed = nlohmann::json::parse(text.substr(pos, *end - pos), nullptr, false);
            if (!parsed.is_discarded() && parsed.is_object()) {
                objects.push_back(std::move(parsed));
                pos = *end;
                continue;
            }
        }
        ++pos;
    }
    return objects;
}

// Reasoning models wrap their trace in <think>...</think>; only the text after it is the answer.
std::string_view strip_reasoning(std::string_view raw) {
    static constexpr std::string_view kClose = "</think>";
    const auto close = raw.rfind(kClose);
    if (close != std::string_view::npos) {
        return raw.substr(close + kClose.size());
    }
    return raw;
}

template <typename Visitor>
bool visit_objects(const nlohmann::json& node, Visitor&& visit) {
    if (node.is_object()) {
        if (visit(node)) return true;
        for (const auto& [key, child] : node.items()) {
            if (visit_objects(child, visit)) return true;
        }
    } else if (node.is_array()) {
        for (const auto& child : node) {
            if (visit_objects(child, visit)) return true;
        }
    }
    return false;
}

}  // namespace

SceOutcome parse_sce_response(std::string_view raw, const SpecPtr& spec) {
    auto malformed = [&](MalformedSCE::Reason reason, std::string detail) {
        return SceOutcome{MalformedSCE{reason, std::string(raw), std::move(detail)}};
    };
    const auto objects = extract_objects(strip_reasoning(raw));
    if (objects.empty()) {
        return malformed(MalformedSCE::Reason::not_parseable, "no JSON object found");
    }

    auto has_exact_keys = [&](const nlohmann::json& obj) {
        if (obj.size() != spec->feature_count()) return false;
        for (const auto& f : spec->features) {
            if (!obj.contains(f.name)) return false;
        }
        return true;
    };

    const nlohmann::json* match = nullptr;
    for (const auto& obj : objects) {
        if (visit_objects(obj, [&](const nlohmann::json& node) {
                if (has_exact_keys(node)) {
                    match = &node;
                    return true;
                }
                return false;
            })) {
            break;
        }
    }

    if (match != nullptr) {
        std::vector<FeatureValue> values;
        for (const auto& f : spec->features) {
            const auto& v = (*match)[f.name];
            if (v.is_number()) {
                values.emplace_back(v.get<double>());
            } else if (v.is_string()) {
                values.emplace_back(v.get<std::string>());
            } else {
                return malformed(MalformedSCE::Reason::out_of_domain_value,
                                 fmt::format("feature '{}' has a non-scalar value", f.name));
            }
        }
        try {
            return SceOutcome{validate_instance(spec, values)};
        } catch (const Error& e) {
            return malformed(MalformedSCE::Reason::out_of_domain_value, e.what());
        }
    }

    // No exact match: classify by the first object mentioning any feature.
    std::optional<MalformedSCE::Reason> reason;
    std::string detail;
    for (const auto& obj : objects) {
        if (visit_objects(obj, [&](const nlohmann::json& node) {
                std::size_t present = 0;
                std::string missing;
                for (const auto& f : spec->features) {
                    if (node.contains(f.name)) {
                        ++present;
                    } else if (missing.empty()) {
                        missing = f.name;
                    }
                }
                if (present == 0) return false;
                if (present < spec->feature_count()) {
                    reason = MalformedSCE::Reason::missing_field;
                    detail = fmt::format("missing feature '{}'", missing);
                } else {
                    reason = MalformedSCE::Reason::arity_mismatch;
                    detail = fmt::format("object has {} keys for {} features", node.size(), spec->feature_count());
                }
                return true;
            })) {
            break;
        }
    }
    if (reason) {
        return malformed(*reason, detail);
    }
    return malformed(MalformedSCE::Reason::missing_field, "no object carries any feature name");
}

namespace {

std::pair<std::string, std::vector<std::string>> read_variant_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io_error, "cannot open perturbation file " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_entry, path.string() + ": " + e.what());
    }
    std::string name = path.stem().string();
    const nlohmann::json* list = &doc;
    if (doc.is_object()) {
        name = doc.value("name", name);
        auto it = doc.find("templates");
        if (it == doc.end()) {
            throw Error(Errc::invalid_entry, path.string() + ": missing 'templates' list");
        }
        list = &*it;
    }
    if (!list->is_array() || list->empty()) {
        throw Error(Errc::invalid_entry, path.string() + ": perturbation list is empty");
    }
    std::vector<std::string> entries;
    for (std::size_t i = 0; i < list->size(); ++i) {
        if (!(*list)[i].is_string()) {
            throw Error(Errc::invalid_entry, fmt::format("{}: entry {} is not a string", path.string(), i));
        }
        entries.push_back((*list)[i].get<std::string>());
    }
    return {name, entries};
}

template <typename Check>
PerturbationSet build_set(const std::filesystem::path& path, Check&& check) {
    auto [name, entries] = read_variant_file(path);
    PerturbationSet set{name, {}};
    for (std::size_t i = 0; i < entries.size(); ++i) {
        try {
            auto text = TextTemplate::parse(entries[i]);
            check(text);
            set.templates.push_back(std::move(text));
        } catch (const Error& e) {
            throw Error(Errc::invalid_entry, fmt::format("{}: entry {}: {}", path.string(), i, e.what()));
        }
    }
    return set;
}

}  // namespace

PerturbationSet load_perturbations(const std::filesystem::path& path, const PromptTemplate& base) {
    return build_set(path, [&](const TextTemplate& t) { validate_prediction_template(*base.spec, t); });
}

PerturbationSet load_sce_perturbations(const std::filesystem::path& path, const PromptTemplate& base,
                                       PromptSetting setting) {
    return build_set(path, [&](const TextTemplate& t) { validate_sce_template(*base.spec, t, setting); });
}

PromptTemplate with_prediction_text(const PromptTemplate& base, const TextTemplate& text) {
    validate_prediction_template(*base.spec, text);
    PromptTemplate t = base;
    t.prediction = text;
    return t;
}

PromptTemplate with_sce_text(const PromptTemplate& base, PromptSetting setting, const TextTemplate& text) {
    validate_sce_template(*base.spec, text, setting);
    PromptTemplate t = base;
    switch (setting) {
        case PromptSetting::unconstrained: t.unconstrained = text; break;
        case PromptSetting::minimal: t.minimal = text; break;
        case PromptSetting::self_predict: t.self_predict = text; break;
    }
    return t;
}

}  // namespace sce
