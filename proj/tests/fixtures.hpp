#pragma once

// Small meshes shared by the unit tests.

#include "twistedp/periodic_mesh.hpp"
#include "twistedp/pipeline.hpp"

namespace twistedp::testing {

/// Subdivided icosahedron of the given radius about `center`, inside T^3(1).
PeriodicMesh icosphere(int subdivisions, double radius, const Vec3& center = Vec3(0.5, 0.5, 0.5));

/// The plane z = height of T^3(side) cut into an m x m grid of squares, two triangles each.
PeriodicMesh flat_torus(int m, Side side = kHalfSide, double height = 0.1);

/// Relaxed Schwarz P surface in T^3(1/2), built once per process and resolution.
const SigmaStage& sigma(int n);
const TwistedStage& twisted(int n);

} // namespace twistedp::testing
