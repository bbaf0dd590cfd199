#pragma once

#include <stdexcept>
#include <string>

namespace tdf {

enum class ErrorKind {
    invalid_size,
    invalid_level,
    invalid_kernel,
    invalid_period,
    shape,
    domain,
    config,
    parse,
    io,
    numeric,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit code without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace tdf
