#include "mvfuse/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "mvfuse/carve.hpp"

namespace mvfuse {

TriangleMesh make_icosphere(double radius, int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh mesh;
  mesh.positions = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                    {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                    {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& p : mesh.positions) p = normalize(p);

  for (int s = 0; s < subdivisions; s++) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      int idx = mesh.vertex_count();
      mesh.positions.push_back(normalize(0.5 * (mesh.positions[a] + mesh.positions[b])));
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> faces;
    faces.reserve(mesh.faces.size() * 4);
    for (const auto& t : mesh.faces) {
      int ab = midpoint(t[0], t[1]);
      int bc = midpoint(t[1], t[2]);
      int ca = midpoint(t[2], t[0]);
      faces.push_back({t[0], ab, ca});
      faces.push_back({t[1], bc, ab});
      faces.push_back({t[2], ca, bc});
      faces.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(faces);
  }
  for (auto& p : mesh.positions) p *= radius;
  return mesh;
}

TriangleMesh make_torus(double ring_radius, double tube_radius, int segments_ring,
                        int segments_tube) {
  TriangleMesh mesh;
  mesh.positions.reserve(static_cast<size_t>(segments_ring) * segments_tube);
  for (int i = 0; i < segments_ring; i++) {
    double u = 2.0 * kPi * i / segments_ring;
    Vec3 center{ring_radius * std::cos(u), ring_radius * std::sin(u), 0};
    Vec3 radial{std::cos(u), std::sin(u), 0};
    for (int j = 0; j < segments_tube; j++) {
      double v = 2.0 * kPi * j / segments_tube;
      mesh.positions.push_back(center + tube_radius * (std::cos(v) * radial + Vec3{0, 0, std::sin(v)}));
    }
  }
  auto idx = [&](int i, int j) {
    return (i % segments_ring) * segments_tube + (j % segments_tube);
  };
  for (int i = 0; i < segments_ring; i++) {
    for (int j = 0; j < segments_tube; j++) {
      int a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
      mesh.faces.push_back({a, b, c});
      mesh.faces.push_back({a, c, d});
    }
  }
  return mesh;
}

namespace {

TriangleMesh extract_implicit(const std::function<double(Vec3)>& sdf, double half_extent,
                              int resolution) {
  ScalarGrid grid;
  grid.nx = grid.ny = grid.nz = resolution;
  grid.spacing = 2.0 * half_extent / (resolution - 1);
  grid.origin = {-half_extent, -half_extent, -half_extent};
  grid.values.resize(static_cast<size_t>(resolution) * resolution * resolution);
  for (int k = 0; k < resolution; k++)
    for (int j = 0; j < resolution; j++)
      for (int i = 0; i < resolution; i++)
        grid.values[grid.index(i, j, k)] = -sdf(grid.point(i, j, k));
  // Negated so the inside (sdf < 0) is above the level, matching the
  // occupancy convention (outward orientation).
  return marching_cubes(grid, 0.0);
}

}  // namespace

TriangleMesh make_rounded_cube(double half_side, double corner_radius, int resolution) {
  double b = half_side - corner_radius;
  auto sdf = [&](Vec3 p) {
    Vec3 q{std::abs(p.x) - b, std::abs(p.y) - b, std::abs(p.z) - b};
    Vec3 outside{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
    double inside = std::min(std::max({q.x, q.y, q.z}), 0.0);
    return length(outside) + inside - corner_radius;
  };
  return extract_implicit(sdf, half_side + 0.2, resolution);
}

TriangleMesh make_metaball_triple(int resolution) {
  const Vec3 centers[3] = {{-0.28, -0.1, 0.0}, {0.3, 0.05, 0.12}, {0.02, 0.32, -0.18}};
  const double radii[3] = {0.34, 0.3, 0.26};
  auto field = [&](Vec3 p) {
    double sum = 0;
    for (int i = 0; i < 3; i++) {
      double d2 = length_squared(p - centers[i]) / (radii[i] * radii[i]);
      sum += std::exp(-2.0 * d2);
    }
    return 0.4 - sum;  // negative inside
  };
  return extract_implicit(field, 0.95, resolution);
}

TriangleMesh make_genus2(int resolution) {
  // Two unit-ish tori blended side by side in the xy-plane.
  auto torus_sdf = [](Vec3 p, Vec3 center, double R, double r) {
    Vec3 q = p - center;
    double ring = std::sqrt(q.x * q.x + q.y * q.y) - R;
    return std::sqrt(ring * ring + q.z * q.z) - r;
  };
  auto sdf = [&](Vec3 p) {
    double a = torus_sdf(p, {-0.34, 0, 0}, 0.32, 0.14);
    double b = torus_sdf(p, {0.34, 0, 0}, 0.32, 0.14);
    // Smooth union keeps the junction manifold-friendly.
    double k = 0.05;
    double h = clamp(0.5 + 0.5 * (b - a) / k, 0.0, 1.0);
    return b + (a - b) * h - k * h * (1.0 - h);
  };
  return extract_implicit(sdf, 0.95, resolution);
}

std::vector<NamedMesh> make_benchmark_suite() {
  std::vector<NamedMesh> suite;
  suite.push_back({"sphere", make_icosphere(0.55, 4)});
  suite.push_back({"torus", make_torus(0.45, 0.2, 96, 48)});
  suite.push_back({"rounded_cube", make_rounded_cube(0.5, 0.12)});
  suite.push_back({"metaballs", make_metaball_triple()});
  suite.push_back({"genus2", make_genus2()});
  return suite;
}

}  // namespace mvfuse
