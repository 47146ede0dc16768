#pragma once

// Quadric-error-metric decimation by manifold-preserving edge collapse.

#include "mvfuse/mesh.hpp"

namespace mvfuse {

struct SimplifyResult {
  TriangleMesh mesh;
  bool reached_target = true;  // false: collapses ran out before the target
};

// Collapses lowest-error edges until face count <= target_faces. Input must
// be watertight and 2-manifold; the output keeps that property. When no
// legal collapse remains above the target the best achievable mesh is
// returned with reached_target = false.
SimplifyResult simplify(const TriangleMesh& mesh, int target_faces);

}  // namespace mvfuse
