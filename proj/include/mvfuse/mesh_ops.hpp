#pragma once

// Local connectivity edits on watertight triangle meshes. Edits run in
// rounds against an adjacency snapshot: an edit only executes when none of
// its vertices were touched earlier in the round, so every guard evaluates
// against current connectivity. Collapse preserves 2-manifoldness via the
// link condition plus a face-flip rejection.

#include <unordered_map>
#include <vector>

#include "mvfuse/mesh.hpp"

namespace mvfuse {

class MeshEditor {
 public:
  explicit MeshEditor(TriangleMesh mesh);

  // Rebuilds the adjacency snapshot and clears the dirty set. Call at the
  // start of every round.
  void begin_round();

  // True if the undirected edge exists in the snapshot and neither
  // endpoint is dirty.
  bool edge_clean(int u, int v) const;

  bool can_collapse(int u, int v) const;                 // guards only
  bool collapse(int u, int v, const Vec3& target);        // u merges into v
  bool split(int u, int v);                               // midpoint vertex
  bool flip(int u, int v);                                // valence-driven legality checked by caller

  // Tangential smoothing over all currently clean vertices; pure vertex
  // motion, never touches connectivity.
  void tangential_relax(double lambda);

  int alive_face_count() const { return alive_faces_; }
  const std::vector<Vec3>& positions() const { return mesh_.positions; }
  Vec3 position(int v) const { return mesh_.positions[v]; }

  const std::vector<int>& neighbors(int v) const { return ring_[v]; }
  const std::vector<int>& incident_faces(int v) const { return vfaces_[v]; }
  bool face_alive(int f) const { return face_alive_[f]; }
  const std::array<int, 3>& face(int f) const { return mesh_.faces[f]; }
  int vertex_count() const { return mesh_.vertex_count(); }

  // Snapshot edge list (u < v), rebuilt by begin_round.
  struct Edge {
    int u, v;
    int f0, f1;  // incident faces
  };
  const std::vector<Edge>& edges() const { return edges_; }

  // Opposite vertices of an edge's two incident faces.
  void edge_opposites(const Edge& e, int& t0, int& t1) const;

  // Compacts dead faces and orphan vertices into a fresh mesh.
  TriangleMesh finish() const;

 private:
  void mark_dirty(int v);
  void mark_ring_dirty(int v);
  bool would_flip_normal(int moved_vertex, const Vec3& new_pos, int skip_a,
                         int skip_b) const;

  TriangleMesh mesh_;
  std::vector<char> face_alive_;
  int alive_faces_ = 0;

  // Round-start snapshot.
  std::vector<std::vector<int>> ring_;
  std::vector<std::vector<int>> vfaces_;
  std::vector<Edge> edges_;
  std::unordered_map<uint64_t, int> edge_index_;
  std::vector<char> dirty_;
};

}  // namespace mvfuse
