#include "sce/errors.hpp"

namespace sce {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::unknown_name: return "unknown-name";
        case Errc::invalid_spec: return "invalid-spec";
        case Errc::out_of_domain: return "out-of-domain";
        case Errc::arity_mismatch: return "arity-mismatch";
        case Errc::spec_mismatch: return "spec-mismatch";
        case Errc::degenerate_feature: return "degenerate-feature";
        case Errc::provider_unavailable: return "provider-unavailable";
        case Errc::zero_vector: return "zero-vector";
        case Errc::too_many_instances: return "too-many-instances";
        case Errc::unresolved_placeholder: return "unresolved-placeholder";
        case Errc::invalid_template: return "invalid-template";
        case Errc::unknown_setting: return "unknown-setting";
        case Errc::invalid_entry: return "invalid-entry";
        case Errc::io_error: return "io-error";
        case Errc::unresolved_label: return "unresolved-label";
        case Errc::transport_error: return "transport-error";
        case Errc::dimension_mismatch: return "dimension-mismatch";
        case Errc::cache_miss_offline: return "cache-miss-offline";
        case Errc::no_counterfactual: return "no-counterfactual";
        case Errc::dataset_mismatch: return "dataset-mismatch";
        case Errc::kind_mismatch: return "kind-mismatch";
        case Errc::empty_input: return "empty-input";
        case Errc::exhaustion: return "exhaustion";
        case Errc::config_error: return "config-error";
        case Errc::parse_error: return "parse-error";
    }
    return "unknown";
}

ErrorCategory category_of(Errc code) noexcept {
    switch (code) {
        case Errc::unknown_name:
        case Errc::invalid_spec:
        case Errc::unresolved_placeholder:
        case Errc::invalid_template:
        case Errc::unknown_setting:
        case Errc::invalid_entry:
        case Errc::config_error:
        case Errc::kind_mismatch:
            return ErrorCategory::config;
        case Errc::provider_unavailable:
        case Errc::unresolved_label:
        case Errc::transport_error:
        case Errc::dimension_mismatch:
        case Errc::cache_miss_offline:
            return ErrorCategory::transport;
        default:
            return ErrorCategory::data;
    }
}

std::string_view to_string(ErrorCategory category) noexcept {
    switch (category) {
        case ErrorCategory::config: return "config-error";
        case ErrorCategory::transport: return "transport-error";
        case ErrorCategory::data: return "data-error";
    }
    return "data-error";
}

int exit_status(ErrorCategory category) noexcept {
    switch (category) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::transport: return 3;
        case ErrorCategory::data: return 4;
    }
    return 4;
}

}  // namespace sce
