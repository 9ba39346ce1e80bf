#pragma once

#include "twistedp/periodic_mesh.hpp"
#include "twistedp/torus_crystal.hpp"

#include <vector>

namespace twistedp {

/// Vertex permutations realising a crystal group on a mesh: element e sends
/// vertex v to perms[e][v]. Functions pull back as (u o g)(v) = u(perms[e][v]).
struct GroupActionOnMesh {
    CrystalGroup group;
    std::vector<std::vector<int>> perms;
    bool exact = false;   // true when derived from the mesh's symmetry table

    std::size_t order() const { return perms.size(); }
    int vertex_count() const { return perms.empty() ? 0 : static_cast<int>(perms.front().size()); }
};

/// Exact vertex permutation of `g` from the mesh symmetry table, if the table covers it.
std::optional<std::vector<int>> exact_vertex_permutation(const PeriodicMesh& mesh, const AffineIsometry& g);

/// Permutation of `g` found by matching images within `tol` (absolute length).
std::vector<int> matched_vertex_permutation(const PeriodicMesh& mesh, const AffineIsometry& g, double tol);

/// Builds and verifies the action: every image vertex within `tol` of the moved
/// vertex, and permutations composing like the group. Throws not_invariant.
GroupActionOnMesh build_action(const PeriodicMesh& mesh, const CrystalGroup& group, double tol = 1e-8);

} // namespace twistedp
