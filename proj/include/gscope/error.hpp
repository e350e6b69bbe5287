#pragma once

#include <stdexcept>
#include <string>

namespace gscope {

/// Failure categories surfaced by the library. The CLI maps them onto exit codes.
enum class ErrorKind {
    dimension_mismatch,
    invalid_parameter,
    not_stationary,
    degenerate_sample,
    degenerate_data,
    did_not_converge,
    singular_information,
    invalid_price,
    config,
    data,
    too_many_failures,
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace gscope
