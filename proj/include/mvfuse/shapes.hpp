#pragma once

// Procedural watertight test shapes, all centered at the origin and sized
// to fit [-1,1]^3 with margin. The implicit ones are extracted with
// marching_cubes at a resolution high enough to serve as ground truth.

#include "mvfuse/mesh.hpp"

namespace mvfuse {

TriangleMesh make_icosphere(double radius, int subdivisions);

// Ring in the xy-plane (hole axis +z) so silhouette views see the hole.
TriangleMesh make_torus(double ring_radius, double tube_radius, int segments_ring,
                        int segments_tube);

TriangleMesh make_rounded_cube(double half_side, double corner_radius, int resolution = 96);

// Union of three overlapping metaballs, a smooth free-form blob.
TriangleMesh make_metaball_triple(int resolution = 96);

// Genus-2 surface (two handles side by side, hole axes +z).
TriangleMesh make_genus2(int resolution = 96);

// The five-mesh evaluation suite in a fixed order.
struct NamedMesh {
  std::string name;
  TriangleMesh mesh;
};
std::vector<NamedMesh> make_benchmark_suite();

}  // namespace mvfuse
