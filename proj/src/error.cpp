#include "twistedp/error.hpp"

namespace twistedp {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::non_finite: return "non-finite value";
    case ErrorKind::side_mismatch: return "side mismatch";
    case ErrorKind::closure_overflow: return "group closure overflow";
    case ErrorKind::topology: return "topology";
    case ErrorKind::non_manifold: return "non-manifold";
    case ErrorKind::gluing_mismatch: return "gluing mismatch";
    case ErrorKind::non_free_action: return "non-free action";
    case ErrorKind::not_invariant: return "not invariant";
    case ErrorKind::degenerate_triangle: return "degenerate triangle";
    case ErrorKind::no_convergence: return "no convergence";
    case ErrorKind::dimension_mismatch: return "dimension mismatch";
    case ErrorKind::rank_deficient: return "rank deficient";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

} // namespace twistedp
