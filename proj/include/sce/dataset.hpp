#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace sce {

enum class FeatureKind { numeric_discrete, ordinal, binary_categorical };

std::string_view to_string(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view text);

// Numbers for numeric-discrete features, labels for ordinal and binary ones.
using FeatureValue = std::variant<double, std::string>;

std::string format_value(const FeatureValue& value);

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::numeric_discrete;
    std::vector<FeatureValue> values;

    [[nodiscard]] std::size_t cardinality() const noexcept { return values.size(); }

    // Position on the numeric axis used by every distance: the value itself for
    // numeric-discrete features, the 0-based rank for ordinal and binary ones.
    [[nodiscard]] double coordinate(std::size_t index) const;

    // max - min over the coordinate axis
    [[nodiscard]] double coordinate_range() const;

    // Index of a raw value, with numeral strings accepted for numeric features and
    // numbers accepted for labels that are numerals. Labels are trimmed, then
    // compared case-sensitively.
    [[nodiscard]] std::optional<std::size_t> find(const FeatureValue& raw) const;

    bool operator==(const FeatureSpec&) const = default;
};

struct TaskInfo {
    std::array<std::string, 2> class_labels;
    std::string context;

    bool operator==(const TaskInfo&) const = default;
};

struct DatasetSpec {
    std::string name;
    std::vector<FeatureSpec> features;
    TaskInfo task;

    [[nodiscard]] std::size_t feature_count() const noexcept { return features.size(); }
    // Number of instances in the complete enumeration.
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::optional<std::size_t> feature_index(std::string_view feature) const;
    [[nodiscard]] std::optional<int> label_index(std::string_view label) const;
    [[nodiscard]] const std::string& label(int index) const { return task.class_labels.at(static_cast<std::size_t>(index)); }

    bool operator==(const DatasetSpec&) const = default;
};

using SpecPtr = std::shared_ptr<const DatasetSpec>;

// Throws Error(invalid_spec) when a spec invariant is violated.
void validate_spec(const DatasetSpec& spec);
SpecPtr make_spec(DatasetSpec spec);
bool same_spec(const DatasetSpec& a, const DatasetSpec& b);

std::vector<std::string> builtin_names();
SpecPtr builtin_spec(std::string_view name);

// Mixed-radix encoding, first feature most significant.
std::size_t encode_indices(const DatasetSpec& spec, std::span<const std::size_t> indices);
std::vector<std::size_t> decode_id(const DatasetSpec& spec, std::size_t id);

class Instance {
public:
    Instance(SpecPtr spec, std::vector<std::size_t> indices);
    static Instance from_id(SpecPtr spec, std::size_t id);

    [[nodiscard]] const DatasetSpec& spec() const noexcept { return *spec_; }
    [[nodiscard]] const SpecPtr& spec_ptr() const noexcept { return spec_; }
    [[nodiscard]] std::size_t id() const noexcept { return id_; }
    [[nodiscard]] std::span<const std::size_t> indices() const noexcept { return indices_; }
    [[nodiscard]] std::size_t index(std::size_t feature) const { return indices_.at(feature); }
    [[nodiscard]] const FeatureValue& value(std::size_t feature) const;
    [[nodiscard]] double coordinate(std::size_t feature) const;

    // Same dataset (structurally) and same id.
    bool operator==(const Instance& other) const;

private:
    SpecPtr spec_;
    std::vector<std::size_t> indices_;
    std::size_t id_ = 0;
};

class Dataset {
public:
    explicit Dataset(SpecPtr spec);

    [[nodiscard]] const DatasetSpec& spec() const noexcept { return *spec_; }
    [[nodiscard]] const SpecPtr& spec_ptr() const noexcept { return spec_; }
    [[nodiscard]] std::size_t size() const noexcept { return instances_.size(); }
    [[nodiscard]] const Instance& operator[](std::size_t id) const { return instances_[id]; }
    [[nodiscard]] const Instance& at(std::size_t id) const { return instances_.at(id); }
    [[nodiscard]] auto begin() const noexcept { return instances_.begin(); }
    [[nodiscard]] auto end() const noexcept { return instances_.end(); }

    // Row-major N x p coordinate matrix.
    [[nodiscard]] std::span<const double> coordinates() const noexcept { return coords_; }
    [[nodiscard]] std::span<const double> row(std::size_t id) const {
        return std::span<const double>(coords_).subspan(id * spec_->feature_count(), spec_->feature_count());
    }

private:
    SpecPtr spec_;
    std::vector<Instance> instances_;
    std::vector<double> coords_;
};

Dataset enumerate_dataset(SpecPtr spec);

// Throws Error(arity_mismatch | out_of_domain).
Instance validate_instance(const SpecPtr& spec, std::span<const FeatureValue> values);

std::size_t ordinal_rank(const DatasetSpec& spec, std::string_view feature, const FeatureValue& value);

// Dataset spec documents.
nlohmann::ordered_json spec_to_json(const DatasetSpec& spec);
DatasetSpec spec_from_json(const nlohmann::json& doc);
SpecPtr load_dataset_spec(const std::filesystem::path& path);
void save_dataset_spec(const DatasetSpec& spec, const std::filesystem::path& path);
std::string spec_hash(const DatasetSpec& spec);

// Instances serialize as flat feature-name -> value maps in feature order.
nlohmann::ordered_json instance_to_json(const Instance& instance);
Instance instance_from_json(const SpecPtr& spec, const nlohmann::json& object);

}  // namespace sce
