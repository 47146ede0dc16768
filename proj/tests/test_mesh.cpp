#include <doctest.h>

#include "mvfuse/mesh.hpp"

using namespace mvfuse;

namespace {

TriangleMesh tetrahedron() {
  TriangleMesh m;
  m.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  m.faces = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  return m;
}

}  // namespace

TEST_CASE("tetrahedron is watertight and genus 0") {
  auto m = tetrahedron();
  auto rep = inspect_topology(m);
  CHECK(rep.watertight_manifold());
  CHECK(rep.boundary_edge_count == 0);
  CHECK(mesh_genus(m) == 0);
}

TEST_CASE("open fan has boundary edges") {
  TriangleMesh m;
  m.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  auto rep = inspect_topology(m);
  CHECK_FALSE(rep.watertight_manifold());
  CHECK(rep.boundary_edge_count == 4);
}

TEST_CASE("flipped face breaks orientation consistency") {
  auto m = tetrahedron();
  std::swap(m.faces[0][0], m.faces[0][1]);
  auto rep = inspect_topology(m);
  CHECK_FALSE(rep.orientation_consistent);
}

TEST_CASE("bowtie vertex is flagged non-manifold") {
  // Two triangle pairs meeting only at vertex 0.
  TriangleMesh m;
  m.positions = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {-1, 0, 0}, {-1, -1, 0}};
  m.faces = {{0, 1, 2}, {0, 3, 4}};
  auto rep = inspect_topology(m);
  CHECK_FALSE(rep.vertices_manifold);
}

TEST_CASE("degenerate face detected") {
  TriangleMesh m;
  m.positions = {{0, 0, 0}, {1, 0, 0}};
  m.faces = {{0, 1, 1}};
  CHECK_FALSE(inspect_topology(m).no_degenerate_faces);
}

TEST_CASE("edge collection pairs interior faces") {
  auto m = tetrahedron();
  auto edges = collect_edges(m);
  CHECK(edges.size() == 6);
  for (const auto& e : edges) {
    CHECK(e.f0 >= 0);
    CHECK(e.f1 >= 0);
    CHECK(e.f0 != e.f1);
  }
}

TEST_CASE("vertex normals of a tetrahedron point away from the centroid") {
  auto m = tetrahedron();
  Vec3 centroid{0.25, 0.25, 0.25};
  auto normals = m.vertex_normals();
  for (int v = 0; v < m.vertex_count(); v++) {
    CHECK(dot(normals[v], m.positions[v] - centroid) > 0);
    CHECK(length(normals[v]) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("compact_vertices drops orphans") {
  auto m = tetrahedron();
  m.positions.push_back({5, 5, 5});
  compact_vertices(m);
  CHECK(m.vertex_count() == 4);
  CHECK(inspect_topology(m).watertight_manifold());
}
