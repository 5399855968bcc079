#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sce {

// Process-level failure classes; each maps to one CLI exit status.
enum class ErrorCategory { config, transport, data };

enum class Errc {
    unknown_name,
    invalid_spec,
    out_of_domain,
    arity_mismatch,
    spec_mismatch,
    degenerate_feature,
    provider_unavailable,
    zero_vector,
    too_many_instances,
    unresolved_placeholder,
    invalid_template,
    unknown_setting,
    invalid_entry,
    io_error,
    unresolved_label,
    transport_error,
    dimension_mismatch,
    cache_miss_offline,
    no_counterfactual,
    dataset_mismatch,
    kind_mismatch,
    empty_input,
    exhaustion,
    config_error,
    parse_error,
};

std::string_view to_string(Errc code) noexcept;
ErrorCategory category_of(Errc code) noexcept;
std::string_view to_string(ErrorCategory category) noexcept;
int exit_status(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }
    [[nodiscard]] ErrorCategory category() const noexcept { return category_of(code_); }

private:
    Errc code_;
};

}  // namespace sce
