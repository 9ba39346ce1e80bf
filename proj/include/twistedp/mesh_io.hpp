#pragma once

// OBJ with a JSON sidecar (round-trips exactly) and ASCII PLY export.

#include "twistedp/periodic_mesh.hpp"

#include <filesystem>

namespace twistedp {

enum class MeshFormat { obj_sidecar, ply };

/// Writes `path` (OBJ or PLY). The OBJ path also writes `path` + ".json" with the
/// side, ambient tag, deck motions, corner lifts and half-edge lattice shifts.
/// Throws invalid_argument for an empty mesh and io when a file cannot be written.
void export_mesh(const PeriodicMesh& mesh, const std::filesystem::path& path, MeshFormat format);

/// Reads an OBJ and its sidecar. The symmetry table is not stored.
PeriodicMesh import_mesh(const std::filesystem::path& obj_path);

} // namespace twistedp
