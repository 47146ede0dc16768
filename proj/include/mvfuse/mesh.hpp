#pragma once

// Indexed triangle mesh. Vertex positions live in world units, nominally
// inside [-1,1]^3. UVs are stored OBJ-style: a uv pool plus per-corner
// indices, so chart seams can give one vertex several uv coordinates.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mvfuse/math.hpp"

namespace mvfuse {

struct TriangleMesh {
  std::vector<Vec3> positions;
  std::vector<std::array<int, 3>> faces;

  // Optional texture coordinates (empty when untextured).
  std::vector<Vec2> uvs;
  std::vector<std::array<int, 3>> uv_faces;  // parallel to faces when present

  bool empty() const { return faces.empty(); }
  int vertex_count() const { return static_cast<int>(positions.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  bool has_uvs() const { return !uvs.empty() && uv_faces.size() == faces.size(); }

  Vec3 face_normal_unnormalized(int f) const {
    const auto& t = faces[f];
    return cross(positions[t[1]] - positions[t[0]], positions[t[2]] - positions[t[0]]);
  }
  Vec3 face_normal(int f) const { return normalize(face_normal_unnormalized(f)); }
  double face_area(int f) const { return 0.5 * length(face_normal_unnormalized(f)); }
  Vec3 face_centroid(int f) const {
    const auto& t = faces[f];
    return (positions[t[0]] + positions[t[1]] + positions[t[2]]) / 3.0;
  }

  double total_area() const;
  void bounds(Vec3& lo, Vec3& hi) const;

  // Area-weighted vertex normals (sum of incident unnormalized face
  // normals, normalized at the end).
  std::vector<Vec3> vertex_normals() const;
};

// Result of a structural inspection. A mesh is considered clean when every
// face index is valid, no face repeats a vertex, every edge has exactly two
// incident faces with opposite orientation, and every vertex has a single
// face fan (no bowties).
struct TopologyReport {
  bool indices_valid = true;
  bool no_degenerate_faces = true;   // no face uses a vertex twice
  bool edges_two_manifold = true;    // every edge has exactly 2 incident faces
  bool orientation_consistent = true;  // the 2 halves run in opposite directions
  bool vertices_manifold = true;     // single fan per vertex
  int boundary_edge_count = 0;
  int nonmanifold_edge_count = 0;
  std::string detail;

  bool watertight_manifold() const {
    return indices_valid && no_degenerate_faces && edges_two_manifold &&
           orientation_consistent && vertices_manifold && boundary_edge_count == 0;
  }
};

TopologyReport inspect_topology(const TriangleMesh& mesh);

// Convenience predicates used by pipeline guards and tests.
bool is_watertight_manifold(const TriangleMesh& mesh);

// Genus of a closed connected 2-manifold via Euler characteristic;
// meaningful only when inspect_topology reports clean.
int mesh_genus(const TriangleMesh& mesh);

// Drops vertices not referenced by any face, remapping indices.
void compact_vertices(TriangleMesh& mesh);

// Interior-edge list: each entry is (v0, v1, face_left, face_right)
// with v0 < v1. Boundary edges get face_right = -1.
struct MeshEdge {
  int v0, v1;
  int f0, f1;
};
std::vector<MeshEdge> collect_edges(const TriangleMesh& mesh);

double mean_edge_length(const TriangleMesh& mesh);

}  // namespace mvfuse
