#include "mvfuse/remesh.hpp"

#include <algorithm>

#include "mvfuse/error.hpp"
#include "mvfuse/mesh_ops.hpp"

namespace mvfuse {

// Thresholds from the incremental remeshing literature: split above 4/3 of
// the target, collapse below 4/5.
TriangleMesh remesh(const TriangleMesh& mesh, double target_edge_length) {
  if (target_edge_length <= 0) throw_argument("remesh: target edge length must be > 0");
  if (mesh.empty()) return mesh;

  const double split_above = 4.0 / 3.0 * target_edge_length;
  const double collapse_below = 4.0 / 5.0 * target_edge_length;
  const int max_rounds = 8;

  MeshEditor editor(mesh);

  struct Item {
    double len;
    int u, v;
  };
  std::vector<Item> items;

  // Longest-first splitting until no edge exceeds the threshold.
  for (int round = 0; round < max_rounds; round++) {
    editor.begin_round();
    items.clear();
    for (const auto& e : editor.edges()) {
      double len = distance(editor.position(e.u), editor.position(e.v));
      if (len > split_above) items.push_back({len, e.u, e.v});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      if (a.len != b.len) return a.len > b.len;
      if (a.u != b.u) return a.u < b.u;
      return a.v < b.v;
    });
    int executed = 0;
    for (const auto& it : items)
      if (editor.split(it.u, it.v)) executed++;
    if (executed == 0) break;
  }

  // Shortest-first collapsing; collapse into the edge midpoint.
  for (int round = 0; round < max_rounds; round++) {
    editor.begin_round();
    items.clear();
    for (const auto& e : editor.edges()) {
      double len = distance(editor.position(e.u), editor.position(e.v));
      if (len < collapse_below) items.push_back({len, e.u, e.v});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      if (a.len != b.len) return a.len < b.len;
      if (a.u != b.u) return a.u < b.u;
      return a.v < b.v;
    });
    int executed = 0;
    for (const auto& it : items) {
      Vec3 mid = 0.5 * (editor.position(it.u) + editor.position(it.v));
      // Avoid producing an edge that immediately needs a split.
      bool too_long = false;
      for (int n : editor.neighbors(it.u))
        if (n != it.v && distance(mid, editor.position(n)) > split_above) too_long = true;
      for (int n : editor.neighbors(it.v))
        if (n != it.u && distance(mid, editor.position(n)) > split_above) too_long = true;
      if (too_long) continue;
      if (editor.collapse(it.u, it.v, mid)) executed++;
    }
    if (executed == 0) break;
  }

  // Valence regularization: flip when it strictly lowers the squared
  // deviation from valence 6 over the four involved vertices.
  for (int round = 0; round < max_rounds; round++) {
    editor.begin_round();
    int executed = 0;
    auto dev = [](long val) { return (val - 6) * (val - 6); };
    for (const auto& e : editor.edges()) {
      if (!editor.edge_clean(e.u, e.v)) continue;
      int t0, t1;
      editor.edge_opposites(e, t0, t1);
      if (t0 < 0 || t1 < 0) continue;
      long vu = static_cast<long>(editor.neighbors(e.u).size());
      long vv = static_cast<long>(editor.neighbors(e.v).size());
      long v0 = static_cast<long>(editor.neighbors(t0).size());
      long v1 = static_cast<long>(editor.neighbors(t1).size());
      long before = dev(vu) + dev(vv) + dev(v0) + dev(v1);
      long after = dev(vu - 1) + dev(vv - 1) + dev(v0 + 1) + dev(v1 + 1);
      if (after >= before) continue;
      if (editor.flip(e.u, e.v)) executed++;
    }
    if (executed == 0) break;
  }

  editor.begin_round();
  editor.tangential_relax(0.5);

  return editor.finish();
}

}  // namespace mvfuse
