#pragma once

// One incremental remeshing pass: split long edges, collapse short ones,
// flip toward valence 6, then tangentially relax. Keeps the mesh
// watertight and 2-manifold throughout.

#include "mvfuse/mesh.hpp"

namespace mvfuse {

TriangleMesh remesh(const TriangleMesh& mesh, double target_edge_length);

}  // namespace mvfuse
