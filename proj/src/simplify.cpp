#include "mvfuse/simplify.hpp"

#include <algorithm>
#include <cmath>

#include "mvfuse/error.hpp"
#include "mvfuse/mesh_ops.hpp"

namespace mvfuse {

namespace {

// Symmetric 3x3 quadric A, linear term b, constant c; error(x) = x'Ax + 2b'x + c.
struct Quadric {
  double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;
  double b0 = 0, b1 = 0, b2 = 0;
  double c = 0;

  void add_plane(Vec3 n, double d, double weight) {
    a00 += weight * n.x * n.x;
    a01 += weight * n.x * n.y;
    a02 += weight * n.x * n.z;
    a11 += weight * n.y * n.y;
    a12 += weight * n.y * n.z;
    a22 += weight * n.z * n.z;
    b0 += weight * d * n.x;
    b1 += weight * d * n.y;
    b2 += weight * d * n.z;
    c += weight * d * d;
  }

  Quadric& operator+=(const Quadric& o) {
    a00 += o.a00; a01 += o.a01; a02 += o.a02;
    a11 += o.a11; a12 += o.a12; a22 += o.a22;
    b0 += o.b0; b1 += o.b1; b2 += o.b2;
    c += o.c;
    return *this;
  }

  double error(Vec3 x) const {
    double qx = a00 * x.x + a01 * x.y + a02 * x.z + b0;
    double qy = a01 * x.x + a11 * x.y + a12 * x.z + b1;
    double qz = a02 * x.x + a12 * x.y + a22 * x.z + b2;
    return x.x * qx + x.y * qy + x.z * qz + (b0 * x.x + b1 * x.y + b2 * x.z) + c;
  }

  bool minimizer(Vec3& x) const {
    Mat3 m = Mat3::from_rows({a00, a01, a02}, {a01, a11, a12}, {a02, a12, a22});
    // Scale-aware singularity guard.
    double scale = std::abs(a00) + std::abs(a11) + std::abs(a22);
    return solve3x3(m, {-b0, -b1, -b2}, x, 1e-10 * scale * scale * scale + 1e-300);
  }
};

}  // namespace

SimplifyResult simplify(const TriangleMesh& input, int target_faces) {
  if (target_faces < 4) throw_argument("simplify: target_faces must be >= 4");
  SimplifyResult result;
  if (input.face_count() <= target_faces) {
    result.mesh = input;
    return result;
  }

  // Per-vertex quadrics from incident face planes, area-weighted.
  std::vector<Quadric> quadrics(input.positions.size());
  for (int f = 0; f < input.face_count(); f++) {
    const auto& t = input.faces[f];
    Vec3 n = input.face_normal_unnormalized(f);
    double area2 = length(n);
    if (area2 < 1e-300) continue;
    Vec3 un = n / area2;
    double d = -dot(un, input.positions[t[0]]);
    for (int k = 0; k < 3; k++) quadrics[t[k]].add_plane(un, d, 0.5 * area2);
  }

  MeshEditor editor(input);
  struct Candidate {
    double cost;
    int u, v;
    Vec3 target;
  };
  std::vector<Candidate> heap;

  while (editor.alive_face_count() > target_faces) {
    editor.begin_round();
    heap.clear();
    heap.reserve(editor.edges().size());
    for (const auto& e : editor.edges()) {
      Quadric q = quadrics[e.u];
      q += quadrics[e.v];
      Vec3 best;
      double cost;
      Vec3 mid = 0.5 * (editor.position(e.u) + editor.position(e.v));
      if (q.minimizer(best)) {
        // Reject optimal points far outside the edge neighborhood.
        double edge_len = distance(editor.position(e.u), editor.position(e.v));
        if (distance(best, mid) > 4.0 * edge_len + 1e-9) best = mid;
      } else {
        best = mid;
      }
      cost = q.error(best);
      double c_u = q.error(editor.position(e.u));
      double c_v = q.error(editor.position(e.v));
      if (c_u < cost) { cost = c_u; best = editor.position(e.u); }
      if (c_v < cost) { cost = c_v; best = editor.position(e.v); }
      heap.push_back({cost, e.u, e.v, best});
    }
    std::sort(heap.begin(), heap.end(), [](const Candidate& a, const Candidate& b) {
      if (a.cost != b.cost) return a.cost < b.cost;
      if (a.u != b.u) return a.u < b.u;
      return a.v < b.v;
    });

    int executed = 0;
    for (const auto& cand : heap) {
      if (editor.alive_face_count() <= target_faces) break;
      if (editor.collapse(cand.u, cand.v, cand.target)) {
        quadrics[cand.v] += quadrics[cand.u];
        executed++;
      }
    }
    if (executed == 0) {
      result.reached_target = false;
      break;
    }
  }

  result.mesh = editor.finish();
  return result;
}

}  // namespace mvfuse
