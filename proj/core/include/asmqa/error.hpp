#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asmqa {

/// Failure category. The CLI maps these onto exit codes.
enum class ErrorKind {
    config,        // invalid configuration or arguments
    data,          // corpus / sample / prediction content is unusable
    io,            // file or network I/O
    protocol,      // a remote endpoint broke the wire contract
    precondition,  // caller violated an operation precondition
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace asmqa
