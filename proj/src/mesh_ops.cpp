#include "mvfuse/mesh_ops.hpp"

#include <algorithm>

#include "mvfuse/error.hpp"

namespace mvfuse {

namespace {

inline uint64_t ekey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
}

}  // namespace

MeshEditor::MeshEditor(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  face_alive_.assign(mesh_.faces.size(), 1);
  alive_faces_ = mesh_.face_count();
}

void MeshEditor::begin_round() {
  const int nv = mesh_.vertex_count();
  ring_.assign(nv, {});
  vfaces_.assign(nv, {});
  edges_.clear();
  edge_index_.clear();
  dirty_.assign(nv, 0);

  for (int f = 0; f < mesh_.face_count(); f++) {
    if (!face_alive_[f]) continue;
    const auto& t = mesh_.faces[f];
    for (int k = 0; k < 3; k++) {
      vfaces_[t[k]].push_back(f);
      int a = t[k], b = t[(k + 1) % 3];
      uint64_t key = ekey(a, b);
      auto it = edge_index_.find(key);
      if (it == edge_index_.end()) {
        edge_index_.emplace(key, static_cast<int>(edges_.size()));
        edges_.push_back({std::min(a, b), std::max(a, b), f, -1});
        ring_[a].push_back(b);
        ring_[b].push_back(a);
      } else {
        edges_[it->second].f1 = f;
      }
    }
  }
}

void MeshEditor::mark_dirty(int v) { dirty_[v] = 1; }

void MeshEditor::mark_ring_dirty(int v) {
  dirty_[v] = 1;
  for (int n : ring_[v]) dirty_[n] = 1;
}

bool MeshEditor::edge_clean(int u, int v) const {
  if (dirty_[u] || dirty_[v]) return false;
  return edge_index_.count(ekey(u, v)) > 0;
}

void MeshEditor::edge_opposites(const Edge& e, int& t0, int& t1) const {
  auto opposite = [&](int f) {
    const auto& t = mesh_.faces[f];
    for (int k = 0; k < 3; k++)
      if (t[k] != e.u && t[k] != e.v) return t[k];
    return -1;
  };
  t0 = e.f0 >= 0 ? opposite(e.f0) : -1;
  t1 = e.f1 >= 0 ? opposite(e.f1) : -1;
}

bool MeshEditor::would_flip_normal(int moved_vertex, const Vec3& new_pos,
                                   int skip_a, int skip_b) const {
  for (int f : vfaces_[moved_vertex]) {
    const auto& t = mesh_.faces[f];
    bool skip = false;
    for (int k = 0; k < 3; k++)
      if (t[k] == skip_a || t[k] == skip_b) skip = true;
    if (skip) continue;
    Vec3 p[3], q[3];
    for (int k = 0; k < 3; k++) {
      p[k] = mesh_.positions[t[k]];
      q[k] = t[k] == moved_vertex ? new_pos : p[k];
    }
    Vec3 n_old = cross(p[1] - p[0], p[2] - p[0]);
    Vec3 n_new = cross(q[1] - q[0], q[2] - q[0]);
    if (dot(n_old, n_new) <= 0) return true;
    if (length(n_new) < 1e-14) return true;
  }
  return false;
}

bool MeshEditor::can_collapse(int u, int v) const {
  if (!edge_clean(u, v)) return false;
  // A tetrahedron admits no further edits (every vertex pair adjacent), so
  // collapsing stops one step earlier.
  if (alive_faces_ <= 6) return false;
  auto it = edge_index_.find(ekey(u, v));
  const Edge& e = edges_[it->second];
  if (e.f0 < 0 || e.f1 < 0) return false;  // boundary edge (non-watertight input)

  // Link condition: the shared one-ring of u and v must be exactly the two
  // vertices opposite the collapsing edge.
  int t0, t1;
  edge_opposites(e, t0, t1);
  if (t0 < 0 || t1 < 0 || t0 == t1) return false;
  int shared = 0;
  const auto& ru = ring_[u];
  const auto& rv = ring_[v];
  for (int a : ru) {
    if (a == v) continue;
    if (std::find(rv.begin(), rv.end(), a) != rv.end()) {
      if (a != t0 && a != t1) return false;
      shared++;
    }
  }
  if (shared != 2) return false;

  // Edge part of the link condition: if both endpoints span a face with
  // (t0, t1), the rewire would duplicate that face.
  auto spans_tt = [&](int w) {
    for (int f : vfaces_[w]) {
      if (f == e.f0 || f == e.f1) continue;
      const auto& t = mesh_.faces[f];
      bool has0 = t[0] == t0 || t[1] == t0 || t[2] == t0;
      bool has1 = t[0] == t1 || t[1] == t1 || t[2] == t1;
      if (has0 && has1) return true;
    }
    return false;
  };
  if (spans_tt(u) && spans_tt(v)) return false;
  return true;
}

bool MeshEditor::collapse(int u, int v, const Vec3& target) {
  if (!can_collapse(u, v)) return false;
  if (would_flip_normal(u, target, v, -1)) return false;
  if (would_flip_normal(v, target, u, -1)) return false;

  // Faces containing both endpoints die; faces of u are rewired to v.
  for (int f : vfaces_[u]) {
    auto& t = mesh_.faces[f];
    bool has_v = t[0] == v || t[1] == v || t[2] == v;
    if (has_v) {
      if (face_alive_[f]) {
        face_alive_[f] = 0;
        alive_faces_--;
      }
    } else {
      for (int k = 0; k < 3; k++)
        if (t[k] == u) t[k] = v;
    }
  }
  mesh_.positions[v] = target;
  mark_ring_dirty(u);
  mark_ring_dirty(v);
  return true;
}

bool MeshEditor::split(int u, int v) {
  if (!edge_clean(u, v)) return false;
  auto it = edge_index_.find(ekey(u, v));
  const Edge& e = edges_[it->second];
  if (e.f0 < 0 || e.f1 < 0) return false;
  int t0, t1;
  edge_opposites(e, t0, t1);
  if (dirty_[t0] || dirty_[t1]) return false;

  int m = mesh_.vertex_count();
  mesh_.positions.push_back(0.5 * (mesh_.positions[u] + mesh_.positions[v]));
  dirty_.push_back(1);
  ring_.push_back({});
  vfaces_.push_back({});

  for (int f : {e.f0, e.f1}) {
    auto t = mesh_.faces[f];
    if (face_alive_[f]) {
      face_alive_[f] = 0;
      alive_faces_--;
    }
    // Replace (a, b, c) with (a, m, c) and (m, b, c) where edge a->b is the
    // split edge in this face's orientation.
    for (int k = 0; k < 3; k++) {
      int a = t[k], b = t[(k + 1) % 3], c = t[(k + 2) % 3];
      if ((a == u && b == v) || (a == v && b == u)) {
        mesh_.faces.push_back({a, m, c});
        face_alive_.push_back(1);
        mesh_.faces.push_back({m, b, c});
        face_alive_.push_back(1);
        alive_faces_ += 2;
        break;
      }
    }
  }
  mark_dirty(u);
  mark_dirty(v);
  mark_dirty(t0);
  mark_dirty(t1);
  return true;
}

bool MeshEditor::flip(int u, int v) {
  if (!edge_clean(u, v)) return false;
  auto it = edge_index_.find(ekey(u, v));
  const Edge& e = edges_[it->second];
  if (e.f0 < 0 || e.f1 < 0) return false;
  int t0, t1;
  edge_opposites(e, t0, t1);
  if (t0 < 0 || t1 < 0 || t0 == t1) return false;
  if (dirty_[t0] || dirty_[t1]) return false;
  if (edge_index_.count(ekey(t0, t1))) return false;  // would create a double edge
  // Collapsing valence below 3 would pinch the fan.
  if (ring_[u].size() <= 3 || ring_[v].size() <= 3) return false;

  // Orient the new faces consistently with the old pair and reject folds.
  auto& f0 = mesh_.faces[e.f0];
  auto& f1 = mesh_.faces[e.f1];
  auto oriented = [&](const std::array<int, 3>& t, int a, int b) {
    for (int k = 0; k < 3; k++)
      if (t[k] == a && t[(k + 1) % 3] == b) return true;
    return false;
  };
  // In f0 the edge runs u->v or v->u; build replacements preserving winding.
  int a = u, b = v;
  if (!oriented(f0, a, b)) std::swap(a, b);
  // f0 = (a, b, t0), f1 = (b, a, t1) in cyclic order.
  std::array<int, 3> n0 = {a, t1, t0};
  std::array<int, 3> n1 = {b, t0, t1};

  auto area_normal = [&](const std::array<int, 3>& t) {
    return cross(mesh_.positions[t[1]] - mesh_.positions[t[0]],
                 mesh_.positions[t[2]] - mesh_.positions[t[0]]);
  };
  Vec3 old_n = area_normal(f0) + area_normal(f1);
  Vec3 new0 = area_normal(n0), new1 = area_normal(n1);
  if (length(new0) < 1e-14 || length(new1) < 1e-14) return false;
  if (dot(new0, old_n) <= 0 || dot(new1, old_n) <= 0) return false;

  f0 = n0;
  f1 = n1;
  mark_dirty(u);
  mark_dirty(v);
  mark_dirty(t0);
  mark_dirty(t1);
  return true;
}

void MeshEditor::tangential_relax(double lambda) {
  // Area-weighted vertex normals from the snapshot.
  std::vector<Vec3> normals(mesh_.vertex_count(), Vec3{0, 0, 0});
  for (int f = 0; f < mesh_.face_count(); f++) {
    if (!face_alive_[f]) continue;
    const auto& t = mesh_.faces[f];
    Vec3 n = cross(mesh_.positions[t[1]] - mesh_.positions[t[0]],
                   mesh_.positions[t[2]] - mesh_.positions[t[0]]);
    for (int k = 0; k < 3; k++) normals[t[k]] += n;
  }
  std::vector<Vec3> moved = mesh_.positions;
  for (int v = 0; v < mesh_.vertex_count(); v++) {
    if (ring_[v].empty()) continue;
    Vec3 centroid{0, 0, 0};
    for (int n : ring_[v]) centroid += mesh_.positions[n];
    centroid = centroid / static_cast<double>(ring_[v].size());
    Vec3 n = normalize(normals[v]);
    Vec3 d = centroid - mesh_.positions[v];
    Vec3 tangential = d - n * dot(n, d);
    moved[v] = mesh_.positions[v] + lambda * tangential;
  }
  mesh_.positions = std::move(moved);
}

TriangleMesh MeshEditor::finish() const {
  TriangleMesh out;
  out.positions = mesh_.positions;
  out.faces.reserve(alive_faces_);
  for (int f = 0; f < mesh_.face_count(); f++)
    if (face_alive_[f]) out.faces.push_back(mesh_.faces[f]);
  compact_vertices(out);
  return out;
}

}  // namespace mvfuse
