#include "mvfuse/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

namespace mvfuse {

double TriangleMesh::total_area() const {
  double a = 0;
  for (int f = 0; f < face_count(); f++) a += face_area(f);
  return a;
}

void TriangleMesh::bounds(Vec3& lo, Vec3& hi) const {
  lo = {1e300, 1e300, 1e300};
  hi = {-1e300, -1e300, -1e300};
  for (const auto& p : positions) {
    lo = min(lo, p);
    hi = max(hi, p);
  }
}

std::vector<Vec3> TriangleMesh::vertex_normals() const {
  std::vector<Vec3> normals(positions.size(), Vec3{0, 0, 0});
  for (int f = 0; f < face_count(); f++) {
    Vec3 n = face_normal_unnormalized(f);
    for (int k = 0; k < 3; k++) normals[faces[f][k]] += n;
  }
  for (auto& n : normals) n = normalize(n);
  return normals;
}

namespace {

inline uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
}

}  // namespace

std::vector<MeshEdge> collect_edges(const TriangleMesh& mesh) {
  std::unordered_map<uint64_t, int> index;
  index.reserve(mesh.faces.size() * 2);
  std::vector<MeshEdge> edges;
  edges.reserve(mesh.faces.size() * 3 / 2);
  for (int f = 0; f < mesh.face_count(); f++) {
    const auto& t = mesh.faces[f];
    for (int k = 0; k < 3; k++) {
      int a = t[k], b = t[(k + 1) % 3];
      uint64_t key = edge_key(a, b);
      auto it = index.find(key);
      if (it == index.end()) {
        index.emplace(key, static_cast<int>(edges.size()));
        edges.push_back({std::min(a, b), std::max(a, b), f, -1});
      } else {
        edges[it->second].f1 = f;
      }
    }
  }
  return edges;
}

double mean_edge_length(const TriangleMesh& mesh) {
  auto edges = collect_edges(mesh);
  if (edges.empty()) return 0;
  double sum = 0;
  for (const auto& e : edges) sum += distance(mesh.positions[e.v0], mesh.positions[e.v1]);
  return sum / edges.size();
}

TopologyReport inspect_topology(const TriangleMesh& mesh) {
  TopologyReport rep;
  const int nv = mesh.vertex_count();

  for (const auto& t : mesh.faces) {
    for (int k = 0; k < 3; k++)
      if (t[k] < 0 || t[k] >= nv) {
        rep.indices_valid = false;
        rep.detail = "face index out of range";
        return rep;
      }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) rep.no_degenerate_faces = false;
  }

  // Count directed edges; a clean closed mesh has every directed edge
  // exactly once and its reverse exactly once.
  std::unordered_map<uint64_t, int> forward, reverse;
  forward.reserve(mesh.faces.size() * 3);
  auto dir_key = [](int a, int b) {
    return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
  };
  for (const auto& t : mesh.faces) {
    for (int k = 0; k < 3; k++) {
      int a = t[k], b = t[(k + 1) % 3];
      forward[dir_key(a, b)]++;
    }
  }
  for (const auto& [key, count] : forward) {
    if (count > 1) {
      rep.orientation_consistent = false;
      rep.nonmanifold_edge_count++;
    }
  }
  int boundary = 0, nonmanifold = 0;
  std::unordered_map<uint64_t, int> undirected;
  undirected.reserve(forward.size());
  for (const auto& [key, count] : forward) {
    int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    undirected[edge_key(a, b)] += count;
  }
  for (const auto& [key, count] : undirected) {
    if (count == 1) boundary++;
    else if (count > 2) nonmanifold++;
  }
  rep.boundary_edge_count = boundary;
  if (nonmanifold > 0) {
    rep.edges_two_manifold = false;
    rep.nonmanifold_edge_count = nonmanifold;
  }
  // Orientation: every undirected 2-face edge must appear once per direction.
  if (rep.edges_two_manifold && boundary == 0) {
    for (const auto& [key, count] : forward) {
      if (count != 1) { rep.orientation_consistent = false; break; }
      int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
      if (forward.find(dir_key(b, a)) == forward.end()) {
        rep.orientation_consistent = false;
        break;
      }
    }
  }

  // Vertex manifoldness: faces around each vertex form one closed fan.
  // Count connected components of the incident-face graph where faces are
  // linked if they share an edge through the vertex.
  {
    std::vector<int> face_offset(nv + 1, 0);
    for (const auto& t : mesh.faces)
      for (int k = 0; k < 3; k++) face_offset[t[k] + 1]++;
    for (int v = 0; v < nv; v++) face_offset[v + 1] += face_offset[v];
    std::vector<int> incident(face_offset[nv]);
    {
      std::vector<int> cursor(face_offset.begin(), face_offset.end() - 1);
      for (int f = 0; f < mesh.face_count(); f++)
        for (int k = 0; k < 3; k++) incident[cursor[mesh.faces[f][k]]++] = f;
    }
    std::vector<int> label;  // scratch: face -> local component
    std::unordered_map<int, int> local;
    for (int v = 0; v < nv && rep.vertices_manifold; v++) {
      int begin = face_offset[v], end = face_offset[v + 1];
      int n = end - begin;
      if (n <= 1) continue;
      local.clear();
      for (int i = begin; i < end; i++) local[incident[i]] = i - begin;
      // Union-find over the local fan.
      label.assign(n, -1);
      for (int i = 0; i < n; i++) label[i] = i;
      auto find = [&](int a) {
        while (label[a] != a) { label[a] = label[label[a]]; a = label[a]; }
        return a;
      };
      // Link faces sharing an edge incident to v.
      std::unordered_map<int, int> other_to_face;  // other endpoint -> local face
      other_to_face.clear();
      for (int i = begin; i < end; i++) {
        int f = incident[i];
        const auto& t = mesh.faces[f];
        for (int k = 0; k < 3; k++) {
          int a = t[k], b = t[(k + 1) % 3];
          if (a != v && b != v) continue;
          int other = (a == v) ? b : a;
          auto it = other_to_face.find(other);
          if (it == other_to_face.end()) {
            other_to_face.emplace(other, i - begin);
          } else {
            int ra = find(it->second), rb = find(i - begin);
            if (ra != rb) label[ra] = rb;
          }
        }
      }
      int root = find(0);
      for (int i = 1; i < n; i++)
        if (find(i) != root) { rep.vertices_manifold = false; break; }
    }
  }

  return rep;
}

bool is_watertight_manifold(const TriangleMesh& mesh) {
  return inspect_topology(mesh).watertight_manifold();
}

int mesh_genus(const TriangleMesh& mesh) {
  // V - E + F = 2 - 2g for one closed connected component.
  auto edges = collect_edges(mesh);
  // Count referenced vertices only.
  std::vector<char> used(mesh.positions.size(), 0);
  for (const auto& t : mesh.faces)
    for (int k = 0; k < 3; k++) used[t[k]] = 1;
  long v = std::count(used.begin(), used.end(), 1);
  long chi = v - static_cast<long>(edges.size()) + mesh.face_count();
  return static_cast<int>((2 - chi) / 2);
}

void compact_vertices(TriangleMesh& mesh) {
  std::vector<int> remap(mesh.positions.size(), -1);
  std::vector<Vec3> kept;
  kept.reserve(mesh.positions.size());
  for (auto& t : mesh.faces) {
    for (int k = 0; k < 3; k++) {
      int v = t[k];
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(kept.size());
        kept.push_back(mesh.positions[v]);
      }
      t[k] = remap[v];
    }
  }
  mesh.positions = std::move(kept);
}

}  // namespace mvfuse
