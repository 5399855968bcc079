#include "sce/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "sce/errors.hpp"
#include "sce/hashing.hpp"
#include "sce/text.hpp"

namespace sce {

std::string_view to_string(FeatureKind kind) noexcept {
    switch (kind) {
        case FeatureKind::numeric_discrete: return "numeric-discrete";
        case FeatureKind::ordinal: return "ordinal";
        case FeatureKind::binary_categorical: return "binary-categorical";
    }
    return "numeric-discrete";
}

FeatureKind parse_feature_kind(std::string_view text) {
    if (text == "numeric-discrete") return FeatureKind::numeric_discrete;
    if (text == "ordinal") return FeatureKind::ordinal;
    if (text == "binary-categorical") return FeatureKind::binary_categorical;
    throw Error(Errc::invalid_spec, fmt::format("unknown feature kind '{}'", text));
}

std::string format_value(const FeatureValue& value) {
    if (const auto* number = std::get_if<double>(&value)) {
        return fmt::format("{}", *number);
    }
    return std::get<std::string>(value);
}

double FeatureSpec::coordinate(std::size_t index) const {
    if (kind == FeatureKind::numeric_discrete) {
        return std::get<double>(values.at(index));
    }
    return static_cast<double>(index);
}

double FeatureSpec::coordinate_range() const {
    if (values.empty()) {
        return 0.0;
    }
    return coordinate(values.size() - 1) - coordinate(0);
}

std::optional<std::size_t> FeatureSpec::find(const FeatureValue& raw) const {
    if (kind == FeatureKind::numeric_discrete) {
        double number = 0.0;
        if (const auto* d = std::get_if<double>(&raw)) {
            number = *d;
        } else {
            auto parsed = parse_number(trim(std::get<std::string>(raw)));
            if (!parsed) {
                return std::nullopt;
            }
            number = *parsed;
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (std::get<double>(values[i]) == number) {
                return i;
            }
        }
        return std::nullopt;
    }
    const std::string wanted = std::holds_alternative<double>(raw) ? format_value(raw)
                                                                    : std::string(trim(std::get<std::string>(raw)));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (trim(std::get<std::string>(values[i])) == wanted) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t DatasetSpec::size() const {
    std::size_t n = 1;
    for (const auto& f : features) {
        n *= f.cardinality();
    }
    return n;
}

std::optional<std::size_t> DatasetSpec::feature_index(std::string_view feature) const {
    for (std::size_t k = 0; k < features.size(); ++k) {
        if (features[k].name == feature) {
            return k;
        }
    }
    return std::nullopt;
}

std::optional<int> DatasetSpec::label_index(std::string_view label) const {
    for (int i = 0; i < 2; ++i) {
        if (task.class_labels[static_cast<std::size_t>(i)] == label) {
            return i;
        }
    }
    return std::nullopt;
}

void validate_spec(const DatasetSpec& spec) {
    auto fail = [&](const std::string& why) {
        throw Error(Errc::invalid_spec, fmt::format("dataset '{}': {}", spec.name, why));
    };
    if (spec.name.empty()) fail("empty name");
    if (spec.features.empty()) fail("at least one feature is required");
    std::set<std::string> names;
    for (const auto& f : spec.features) {
        if (f.name.empty()) fail("feature with empty name");
        if (!names.insert(f.name).second) fail(fmt::format("duplicate feature '{}'", f.name));
        if (f.values.empty()) fail(fmt::format("feature '{}' has no values", f.name));
        const bool numeric = f.kind == FeatureKind::numeric_discrete;
        for (const auto& v : f.values) {
            if (numeric != std::holds_alternative<double>(v)) {
                fail(fmt::format("feature '{}' mixes value types for kind {}", f.name, to_string(f.kind)));
            }
            if (numeric && !std::isfinite(std::get<double>(v))) {
                fail(fmt::format("feature '{}' has a non-finite value", f.name));
            }
        }
        if (numeric) {
            for (std::size_t i = 1; i < f.values.size(); ++i) {
                if (!(std::get<double>(f.values[i - 1]) < std::get<double>(f.values[i]))) {
                    fail(fmt::format("numeric feature '{}' values must be strictly increasing", f.name));
                }
            }
        } else {
            std::set<std::string> labels;
            for (const auto& v : f.values) {
                const std::string label(trim(std::get<std::string>(v)));
                if (label.empty()) fail(fmt::format("feature '{}' has an empty label", f.name));
                if (!labels.insert(label).second) fail(fmt::format("feature '{}' has duplicate value '{}'", f.name, label));
            }
        }
        if (f.kind == FeatureKind::binary_categorical && f.values.size() != 2) {
            fail(fmt::format("binary feature '{}' must have exactly 2 values", f.name));
        }
    }
    const auto& labels = spec.task.class_labels;
    if (labels[0].empty() || labels[1].empty()) fail("class labels must be non-empty");
    if (labels[0] == labels[1]) fail("class labels must be distinct");
}

SpecPtr make_spec(DatasetSpec spec) {
    validate_spec(spec);
    return std::make_shared<const DatasetSpec>(std::move(spec));
}

bool same_spec(const DatasetSpec& a, const DatasetSpec& b) {
    return &a == &b || a == b;
}

namespace {

FeatureSpec numeric_range(std::string name, double first, double last, double step) {
    FeatureSpec f{std::move(name), FeatureKind::numeric_discrete, {}};
    for (double v = first; v <= last; v += step) {
        f.values.emplace_back(v);
    }
    return f;
}

FeatureSpec ordinal_numerals(std::string name, int first, int last, int step) {
    FeatureSpec f{std::move(name), FeatureKind::ordinal, {}};
    for (int v = first; v <= last; v += step) {
        f.values.emplace_back(std::to_string(v));
    }
    return f;
}

DatasetSpec income_spec() {
    FeatureSpec education{"education", FeatureKind::ordinal, {}};
    for (const char* level : {"N/A - no schooling completed",
                              "Nursery school / preschool",
                              "Kindergarten",
                              "1st grade only",
                              "2nd grade",
                              "3rd grade",
                              "4th grade",
                              "5th grade",
                              "6th grade",
                              "7th grade",
                              "8th grade",
                              "9th grade",
                              "10th grade",
                              "11th grade",
                              "12th grade, no diploma",
                              "Regular high school diploma",
                              "GED or alternative credential",
                              "Some college, less than 1 year",
                              "Some college, 1 or more years, no degree",
                              "Associate's degree",
                              "Bachelor's degree",
                              "Master's degree",
                              "Professional degree beyond a bachelor's degree",
                              "Doctorate degree"}) {
        education.values.emplace_back(std::string(level));
    }
    return DatasetSpec{"income",
                       {numeric_range("age", 17, 96, 1), std::move(education)},
                       {{"above $50,000", "below $50,000"}, "the United States in 2018"}};
}

DatasetSpec house_prices_spec() {
    return DatasetSpec{"house_prices",
                       {numeric_range("area", 500, 10000, 500), numeric_range("bedrooms", 1, 5, 1),
                        numeric_range("bathrooms", 1, 4, 1), numeric_range("floors", 1, 4, 1)},
                       {{"above $1,500,000", "below $1,500,000"}, "houses across the United States in 2015"}};
}

DatasetSpec heart_disease_spec() {
    FeatureSpec sex{"sex", FeatureKind::binary_categorical, {std::string("Female"), std::string("Male")}};
    return DatasetSpec{"heart_disease",
                       {ordinal_numerals("age", 30, 80, 5), std::move(sex), ordinal_numerals("systolic_bp", 110, 180, 10),
                        ordinal_numerals("total_cholesterol", 150, 300, 15)},
                       {{"heart disease present", "heart disease absent"}, "patients assessed for coronary heart disease"}};
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"income", "house_prices", "heart_disease"};
}

SpecPtr builtin_spec(std::string_view name) {
    static const SpecPtr income = make_spec(income_spec());
    static const SpecPtr house = make_spec(house_prices_spec());
    static const SpecPtr heart = make_spec(heart_disease_spec());
    if (name == "income") return income;
    if (name == "house_prices") return house;
    if (name == "heart_disease") return heart;
    throw Error(Errc::unknown_name, fmt::format("unknown built-in dataset '{}'", name));
}

std::size_t encode_indices(const DatasetSpec& spec, std::span<const std::size_t> indices) {
    if (indices.size() != spec.feature_count()) {
        throw Error(Errc::arity_mismatch, "index count does not match feature count");
    }
    std::size_t id = 0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t radix = spec.features[k].cardinality();
        if (indices[k] >= radix) {
            throw Error(Errc::out_of_domain, fmt::format("index {} out of range for '{}'", indices[k], spec.features[k].name));
        }
        id = id * radix + indices[k];
    }
    return id;
}

std::vector<std::size_t> decode_id(const DatasetSpec& spec, std::size_t id) {
    if (id >= spec.size()) {
        throw Error(Errc::out_of_domain, fmt::format("instance id {} out of range", id));
    }
    std::vector<std::size_t> indices(spec.feature_count());
    for (std::size_t k = spec.feature_count(); k-- > 0;) {
        const std::size_t radix = spec.features[k].cardinality();
        indices[k] = id % radix;
        id /= radix;
    }
    return indices;
}

Instance::Instance(SpecPtr spec, std::vector<std::size_t> indices)
    : spec_(std::move(spec)), indices_(std::move(indices)) {
    id_ = encode_indices(*spec_, indices_);
}

Instance Instance::from_id(SpecPtr spec, std::size_t id) {
    auto indices = decode_id(*spec, id);
    return Instance(std::move(spec), std::move(indices));
}

const FeatureValue& Instance::value(std::size_t feature) const {
    return spec_->features.at(feature).values.at(indices_.at(feature));
}

double Instance::coordinate(std::size_t feature) const {
    return spec_->features.at(feature).coordinate(indices_.at(feature));
}

bool Instance::operator==(const Instance& other) const {
    return id_ == other.id_ && same_spec(*spec_, *other.spec_);
}

Dataset::Dataset(SpecPtr spec) : spec_(std::move(spec)) {
    const std::size_t n = spec_->size();
    const std::size_t p = spec_->feature_count();
    instances_.reserve(n);
    coords_.reserve(n * p);
    for (std::size_t id = 0; id < n; ++id) {
        instances_.push_back(Instance::from_id(spec_, id));
        for (std::size_t k = 0; k < p; ++k) {
            coords_.push_back(instances_.back().coordinate(k));
        }
    }
}

Dataset enumerate_dataset(SpecPtr spec) {
    return Dataset(std::move(spec));
}

Instance validate_instance(const SpecPtr& spec, std::span<const FeatureValue> values) {
    if (values.size() != spec->feature_count()) {
        throw Error(Errc::arity_mismatch, fmt::format("expected {} values for '{}', got {}", spec->feature_count(),
                                                      spec->name, values.size()));
    }
    std::vector<std::size_t> indices(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto& feature = spec->features[k];
        auto index = feature.find(values[k]);
        if (!index) {
            throw Error(Errc::out_of_domain,
                        fmt::format("value '{}' is not allowed for feature '{}'", format_value(values[k]), feature.name));
        }
        indices[k] = *index;
    }
    return Instance(spec, std::move(indices));
}

std::size_t ordinal_rank(const DatasetSpec& spec, std::string_view feature, const FeatureValue& value) {
    auto k = spec.feature_index(feature);
    if (!k) {
        throw Error(Errc::unknown_name, fmt::format("no feature '{}' in '{}'", feature, spec.name));
    }
    auto index = spec.features[*k].find(value);
    if (!index) {
        throw Error(Errc::out_of_domain, fmt::format("value '{}' is not allowed for feature '{}'", format_value(value), feature));
    }
    return *index;
}

namespace {

nlohmann::ordered_json value_to_json(const FeatureValue& value) {
    if (const auto* number = std::get_if<double>(&value)) {
        double integral = 0.0;
        if (std::modf(*number, &integral) == 0.0 && std::fabs(*number) < 9.0e15) {
            return static_cast<long long>(*number);
        }
        return *number;
    }
    return std::get<std::string>(value);
}

}  // namespace

nlohmann::ordered_json spec_to_json(const DatasetSpec& spec) {
    nlohmann::ordered_json doc;
    doc["name"] = spec.name;
    doc["features"] = nlohmann::ordered_json::array();
    for (const auto& f : spec.features) {
        nlohmann::ordered_json feature;
        feature["name"] = f.name;
        feature["kind"] = to_string(f.kind);
        feature["values"] = nlohmann::ordered_json::array();
        for (const auto& v : f.values) {
            feature["values"].push_back(value_to_json(v));
        }
        doc["features"].push_back(std::move(feature));
    }
    doc["task"] = {{"class_labels", {spec.task.class_labels[0], spec.task.class_labels[1]}}, {"context", spec.task.context}};
    return doc;
}

DatasetSpec spec_from_json(const nlohmann::json& doc) {
    try {
        DatasetSpec spec;
        spec.name = doc.at("name").get<std::string>();
        for (const auto& f : doc.at("features")) {
            FeatureSpec feature;
            feature.name = f.at("name").get<std::string>();
            feature.kind = parse_feature_kind(f.at("kind").get<std::string>());
            for (const auto& v : f.at("values")) {
                if (v.is_number()) {
                    feature.values.emplace_back(v.get<double>());
                } else if (v.is_string()) {
                    feature.values.emplace_back(v.get<std::string>());
                } else {
                    throw Error(Errc::invalid_spec, fmt::format("feature '{}': values must be numbers or strings", feature.name));
                }
            }
            spec.features.push_back(std::move(feature));
        }
        const auto& task = doc.at("task");
        const auto& labels = task.at("class_labels");
        if (!labels.is_array() || labels.size() != 2) {
            throw Error(Errc::invalid_spec, "task.class_labels must list exactly two labels");
        }
        spec.task.class_labels = {labels[0].get<std::string>(), labels[1].get<std::string>()};
        spec.task.context = task.value("context", std::string{});
        validate_spec(spec);
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_spec, std::string("malformed dataset spec: ") + e.what());
    }
}

SpecPtr load_dataset_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io_error, "cannot open dataset spec " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_spec, path.string() + ": " + e.what());
    }
    return make_spec(spec_from_json(doc));
}

void save_dataset_spec(const DatasetSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(Errc::io_error, "cannot write " + path.string());
    }
    out << spec_to_json(spec).dump(2) << '\n';
}

std::string spec_hash(const DatasetSpec& spec) {
    return sha256_hex(spec_to_json(spec).dump());
}

nlohmann::ordered_json instance_to_json(const Instance& instance) {
    nlohmann::ordered_json object = nlohmann::ordered_json::object();
    const auto& spec = instance.spec();
    for (std::size_t k = 0; k < spec.feature_count(); ++k) {
        object[spec.features[k].name] = value_to_json(instance.value(k));
    }
    return object;
}

Instance instance_from_json(const SpecPtr& spec, const nlohmann::json& object) {
    if (!object.is_object() || object.size() != spec->feature_count()) {
        throw Error(Errc::arity_mismatch, "instance object does not match the feature list");
    }
    std::vector<FeatureValue> values;
    for (const auto& f : spec->features) {
        auto it = object.find(f.name);
        if (it == object.end()) {
            throw Error(Errc::arity_mismatch, fmt::format("missing feature '{}'", f.name));
        }
        if (it->is_number()) {
            values.emplace_back(it->get<double>());
        } else if (it->is_string()) {
            values.emplace_back(it->get<std::string>());
        } else {
            throw Error(Errc::out_of_domain, fmt::format("feature '{}' has a non-scalar value", f.name));
        }
    }
    return validate_instance(spec, values);
}

}  // namespace sce
