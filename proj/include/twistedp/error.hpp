#pragma once

#include <stdexcept>
#include <string>

namespace twistedp {

enum class ErrorKind {
    invalid_argument,
    non_finite,
    side_mismatch,
    closure_overflow,
    topology,
    non_manifold,
    gluing_mismatch,
    non_free_action,
    not_invariant,
    degenerate_triangle,
    no_convergence,
    dimension_mismatch,
    rank_deficient,
    io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` distinguishes failure modes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace twistedp
