#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "mvfuse/carve.hpp"
#include "mvfuse/error.hpp"

namespace mvfuse {

namespace {

// Freudenthal split: six tetrahedra around the main diagonal (corner 0 to
// corner 7). Every cell uses the same split, so the diagonals induced on
// shared cell faces agree between neighbors and the extracted surface has
// no cracks. Corner c sits at offset (c&1, (c>>1)&1, (c>>2)&1).
constexpr int kTets[6][4] = {
    {0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7},
    {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7},
};

struct VertexKey {
  uint64_t key;
  bool operator==(const VertexKey& o) const { return key == o.key; }
};
struct VertexKeyHash {
  size_t operator()(const VertexKey& k) const {
    return std::hash<uint64_t>()(k.key);
  }
};

}  // namespace

TriangleMesh marching_cubes(const ScalarGrid& field, double iso) {
  if (field.nx < 2 || field.ny < 2 || field.nz < 2)
    throw_argument("marching_cubes: lattice must be at least 2^3");

  TriangleMesh mesh;

  // No genuine crossing anywhere -> empty surface (a uniform field yields
  // nothing even when entirely above the level).
  double lo = field.values[0], hi = field.values[0];
  for (double v : field.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo <= iso && hi > iso)) return mesh;

  // March over a one-sample padded lattice whose outer shell is below the
  // level; surfaces that reach the lattice boundary get capped so the
  // output stays closed.
  const int nx = field.nx + 2, ny = field.ny + 2, nz = field.nz + 2;
  const double pad_value = std::min(lo, iso) - 1.0;
  const double nudge = 1e-12 * std::max({1.0, std::abs(iso), std::abs(lo), std::abs(hi)});
  auto value_at = [&](int i, int j, int k) {
    if (i < 1 || j < 1 || k < 1 || i > field.nx || j > field.ny || k > field.nz)
      return pad_value;
    double v = field.at(i - 1, j - 1, k - 1);
    if (v == iso) v = iso + nudge;  // keeps edge interpolation away from corners
    return v;
  };
  auto point_at = [&](int i, int j, int k) {
    return field.origin + Vec3{(i - 1) * field.spacing, (j - 1) * field.spacing,
                               (k - 1) * field.spacing};
  };
  auto lattice_index = [&](int i, int j, int k) {
    return (static_cast<uint64_t>(k) * ny + j) * nx + i;
  };

  std::unordered_map<VertexKey, int, VertexKeyHash> edge_vertex;
  auto vertex_on_edge = [&](uint64_t la, uint64_t lb, Vec3 pa, Vec3 pb, double fa,
                            double fb) {
    if (la > lb) {
      std::swap(la, lb);
      std::swap(pa, pb);
      std::swap(fa, fb);
    }
    VertexKey key{(la << 32) | lb};
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    double t = (iso - fa) / (fb - fa);
    int idx = mesh.vertex_count();
    mesh.positions.push_back(pa + t * (pb - pa));
    edge_vertex.emplace(key, idx);
    return idx;
  };

  int corner_i[8], corner_j[8], corner_k[8];
  double corner_f[8];
  Vec3 corner_p[8];
  uint64_t corner_l[8];

  for (int k = 0; k + 1 < nz; k++) {
    for (int j = 0; j + 1 < ny; j++) {
      for (int i = 0; i + 1 < nx; i++) {
        bool any_in = false, any_out = false;
        for (int c = 0; c < 8; c++) {
          corner_i[c] = i + (c & 1);
          corner_j[c] = j + ((c >> 1) & 1);
          corner_k[c] = k + ((c >> 2) & 1);
          corner_f[c] = value_at(corner_i[c], corner_j[c], corner_k[c]);
          (corner_f[c] > iso ? any_in : any_out) = true;
        }
        if (!any_in || !any_out) continue;
        for (int c = 0; c < 8; c++) {
          corner_p[c] = point_at(corner_i[c], corner_j[c], corner_k[c]);
          corner_l[c] = lattice_index(corner_i[c], corner_j[c], corner_k[c]);
        }

        for (const auto& tet : kTets) {
          int inside[4], n_in = 0;
          for (int c = 0; c < 4; c++)
            if (corner_f[tet[c]] > iso) inside[n_in++] = c;
          if (n_in == 0 || n_in == 4) continue;

          // Local linear gradient of the tet interpolant; orients emitted
          // triangles so normals point toward decreasing field values.
          Vec3 e1 = corner_p[tet[1]] - corner_p[tet[0]];
          Vec3 e2 = corner_p[tet[2]] - corner_p[tet[0]];
          Vec3 e3 = corner_p[tet[3]] - corner_p[tet[0]];
          Vec3 df{corner_f[tet[1]] - corner_f[tet[0]],
                  corner_f[tet[2]] - corner_f[tet[0]],
                  corner_f[tet[3]] - corner_f[tet[0]]};
          Vec3 grad;
          if (!solve3x3(Mat3::from_rows(e1, e2, e3), df, grad)) grad = {0, 0, 0};

          auto edge_vert = [&](int a, int b) {
            return vertex_on_edge(corner_l[tet[a]], corner_l[tet[b]],
                                  corner_p[tet[a]], corner_p[tet[b]],
                                  corner_f[tet[a]], corner_f[tet[b]]);
          };
          auto emit = [&](int v0, int v1, int v2) {
            Vec3 n = cross(mesh.positions[v1] - mesh.positions[v0],
                           mesh.positions[v2] - mesh.positions[v0]);
            if (dot(n, grad) > 0) std::swap(v1, v2);
            mesh.faces.push_back({v0, v1, v2});
          };

          if (n_in == 1) {
            int a = inside[0];
            int o0 = (a + 1) % 4, o1 = (a + 2) % 4, o2 = (a + 3) % 4;
            emit(edge_vert(a, o0), edge_vert(a, o1), edge_vert(a, o2));
          } else if (n_in == 3) {
            int a = 0 + 1 + 2 + 3 - inside[0] - inside[1] - inside[2];  // the one outside
            int o0 = (a + 1) % 4, o1 = (a + 2) % 4, o2 = (a + 3) % 4;
            emit(edge_vert(a, o0), edge_vert(a, o1), edge_vert(a, o2));
          } else {
            int a0 = inside[0], a1 = inside[1];
            int b0 = -1, b1 = -1;
            for (int c = 0; c < 4; c++)
              if (c != a0 && c != a1) (b0 < 0 ? b0 : b1) = c;
            int v00 = edge_vert(a0, b0);
            int v01 = edge_vert(a0, b1);
            int v10 = edge_vert(a1, b0);
            int v11 = edge_vert(a1, b1);
            emit(v00, v01, v11);
            emit(v00, v11, v10);
          }
        }
      }
    }
  }

  // Degenerate (zero-area) triangles can appear when a quad's four edge
  // vertices collapse pairwise; drop exact duplicates of welded indices.
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.faces.size());
  for (const auto& t : mesh.faces)
    if (t[0] != t[1] && t[1] != t[2] && t[0] != t[2]) kept.push_back(t);
  mesh.faces = std::move(kept);
  return mesh;
}

}  // namespace mvfuse
