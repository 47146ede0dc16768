#include "mvfuse/diffrast.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mvfuse/error.hpp"
#include "mvfuse/parallel.hpp"

namespace mvfuse {

namespace {

constexpr int kTileSize = 16;

struct Frame {
  Mat3 rot;
  Vec3 eye;
  double focal, cx, cy;
  int width, height;
};

Frame make_frame(const Camera& cam) {
  Frame fr;
  fr.rot = cam.rotation();
  fr.eye = cam.position();
  fr.focal = cam.focal_pixels();
  fr.cx = cam.width / 2.0;
  fr.cy = cam.height / 2.0;
  fr.width = cam.width;
  fr.height = cam.height;
  return fr;
}

struct TransformedVertex {
  Vec2 screen;
  double depth = 0;   // camera-space, positive in front
  double inv_depth = 0;
  bool valid = false;
};

TransformedVertex transform_vertex(const Frame& fr, Vec3 p, double znear) {
  TransformedVertex tv;
  Vec3 view = fr.rot * (p - fr.eye);
  double d = -view.z;
  if (d <= znear) return tv;
  tv.depth = d;
  tv.inv_depth = 1.0 / d;
  tv.screen = {fr.cx + fr.focal * view.x / d, fr.cy - fr.focal * view.y / d};
  tv.valid = true;
  return tv;
}

inline double edge_fn(Vec2 a, Vec2 b, Vec2 p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

// Undirected edge -> the (up to) two incident faces.
std::unordered_map<uint64_t, std::array<int, 2>> build_edge_faces(const TriangleMesh& mesh) {
  std::unordered_map<uint64_t, std::array<int, 2>> map;
  map.reserve(mesh.faces.size() * 2);
  for (int f = 0; f < mesh.face_count(); f++) {
    const auto& t = mesh.faces[f];
    for (int k = 0; k < 3; k++) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      uint64_t key = (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
      auto it = map.find(key);
      if (it == map.end()) map.emplace(key, std::array<int, 2>{f, -1});
      else if (it->second[1] < 0 && it->second[0] != f) it->second[1] = f;
    }
  }
  return map;
}

struct RasterScratch {
  std::vector<TransformedVertex> verts;
  std::vector<double> face_area2;      // screen-space signed area
  std::vector<Vec3> vertex_normals;    // normalized
  std::vector<Vec3> vertex_normal_sums;  // pre-normalization sums
};

void rasterize_visibility(const TriangleMesh& mesh, const Frame& fr,
                          const RenderConfig& cfg, RasterScratch& scratch,
                          RenderOutput& out) {
  const int W = fr.width, H = fr.height;
  out.width = W;
  out.height = H;
  out.depth = Image(W, H, 1, RenderOutput::kBackgroundDepth);
  out.tri_id.assign(static_cast<size_t>(W) * H, -1);
  out.barycentric.assign(static_cast<size_t>(W) * H * 3, 0.0);

  const int nv = mesh.vertex_count();
  scratch.verts.resize(nv);
  for (int v = 0; v < nv; v++)
    scratch.verts[v] = transform_vertex(fr, mesh.positions[v], cfg.znear);

  scratch.face_area2.assign(mesh.face_count(), 0.0);

  // Bin faces into tiles (CSR layout for determinism and locality).
  const int tiles_x = (W + kTileSize - 1) / kTileSize;
  const int tiles_y = (H + kTileSize - 1) / kTileSize;
  const int n_tiles = tiles_x * tiles_y;
  std::vector<int> tile_count(n_tiles + 1, 0);
  struct FaceBox {
    int x0, x1, y0, y1;
    bool skip;
  };
  std::vector<FaceBox> boxes(mesh.face_count());
  int degenerate = 0;
  for (int f = 0; f < mesh.face_count(); f++) {
    const auto& t = mesh.faces[f];
    FaceBox& box = boxes[f];
    box.skip = true;
    const auto& a = scratch.verts[t[0]];
    const auto& b = scratch.verts[t[1]];
    const auto& c = scratch.verts[t[2]];
    if (!a.valid || !b.valid || !c.valid) {
      degenerate++;
      continue;
    }
    double area2 = edge_fn(a.screen, b.screen, c.screen);
    scratch.face_area2[f] = area2;
    if (std::abs(area2) < 1e-14) {
      degenerate++;
      continue;
    }
    double xmin = std::min({a.screen.x, b.screen.x, c.screen.x});
    double xmax = std::max({a.screen.x, b.screen.x, c.screen.x});
    double ymin = std::min({a.screen.y, b.screen.y, c.screen.y});
    double ymax = std::max({a.screen.y, b.screen.y, c.screen.y});
    box.x0 = std::max(0, static_cast<int>(std::floor(xmin - 0.5)));
    box.x1 = std::min(W - 1, static_cast<int>(std::ceil(xmax - 0.5)));
    box.y0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
    box.y1 = std::min(H - 1, static_cast<int>(std::ceil(ymax - 0.5)));
    if (box.x0 > box.x1 || box.y0 > box.y1) continue;
    box.skip = false;
    int tx0 = box.x0 / kTileSize, tx1 = box.x1 / kTileSize;
    int ty0 = box.y0 / kTileSize, ty1 = box.y1 / kTileSize;
    for (int ty = ty0; ty <= ty1; ty++)
      for (int tx = tx0; tx <= tx1; tx++) tile_count[ty * tiles_x + tx + 1]++;
  }
  out.degenerate_faces = degenerate;
  for (int i = 0; i < n_tiles; i++) tile_count[i + 1] += tile_count[i];
  std::vector<int> tile_faces(tile_count[n_tiles]);
  {
    std::vector<int> cursor(tile_count.begin(), tile_count.end() - 1);
    for (int f = 0; f < mesh.face_count(); f++) {
      if (boxes[f].skip) continue;
      int tx0 = boxes[f].x0 / kTileSize, tx1 = boxes[f].x1 / kTileSize;
      int ty0 = boxes[f].y0 / kTileSize, ty1 = boxes[f].y1 / kTileSize;
      for (int ty = ty0; ty <= ty1; ty++)
        for (int tx = tx0; tx <= tx1; tx++) tile_faces[cursor[ty * tiles_x + tx]++] = f;
    }
  }

  parallel_chunks(n_tiles, cfg.threads, [&](int, long t0, long t1) {
    for (long tile = t0; tile < t1; tile++) {
      int tx = static_cast<int>(tile) % tiles_x, ty = static_cast<int>(tile) / tiles_x;
      int px0 = tx * kTileSize, px1 = std::min(W, px0 + kTileSize);
      int py0 = ty * kTileSize, py1 = std::min(H, py0 + kTileSize);
      for (int idx = tile_count[tile]; idx < tile_count[tile + 1]; idx++) {
        int f = tile_faces[idx];
        const auto& t = mesh.faces[f];
        const auto& va = scratch.verts[t[0]];
        const auto& vb = scratch.verts[t[1]];
        const auto& vc = scratch.verts[t[2]];
        double area2 = scratch.face_area2[f];
        int x0 = std::max(px0, boxes[f].x0), x1 = std::min(px1 - 1, boxes[f].x1);
        int y0 = std::max(py0, boxes[f].y0), y1 = std::min(py1 - 1, boxes[f].y1);
        for (int y = y0; y <= y1; y++) {
          for (int x = x0; x <= x1; x++) {
            Vec2 pc{x + 0.5, y + 0.5};
            double w0 = edge_fn(vb.screen, vc.screen, pc);
            double w1 = edge_fn(vc.screen, va.screen, pc);
            double w2 = edge_fn(va.screen, vb.screen, pc);
            bool inside = area2 > 0 ? (w0 >= 0 && w1 >= 0 && w2 >= 0)
                                    : (w0 <= 0 && w1 <= 0 && w2 <= 0);
            if (!inside) continue;
            double b0 = (w0 / area2) * va.inv_depth;
            double b1 = (w1 / area2) * vb.inv_depth;
            double b2 = (w2 / area2) * vc.inv_depth;
            double bsum = b0 + b1 + b2;
            if (bsum <= 0) continue;
            double z = 1.0 / bsum;
            size_t pix = static_cast<size_t>(y) * W + x;
            if (z < out.depth.data[pix]) {
              out.depth.data[pix] = z;
              out.tri_id[pix] = f;
              out.barycentric[3 * pix] = b0 / bsum;
              out.barycentric[3 * pix + 1] = b1 / bsum;
              out.barycentric[3 * pix + 2] = b2 / bsum;
            }
          }
        }
      }
    }
  });
}

Vec3 shade_pixel(const TriangleMesh& mesh, const RasterScratch& scratch,
                 const RenderConfig& cfg, int face, const double* bary) {
  if (cfg.flat_shading) {
    return normalize(mesh.face_normal_unnormalized(face));
  }
  const auto& t = mesh.faces[face];
  Vec3 m = bary[0] * scratch.vertex_normals[t[0]] +
           bary[1] * scratch.vertex_normals[t[1]] +
           bary[2] * scratch.vertex_normals[t[2]];
  double len = length(m);
  return len > 1e-12 ? m / len : Vec3{0, 0, 0};
}

// Contour edges separate front-facing from back-facing (or open) territory
// in screen space.
bool is_silhouette_edge(const RasterScratch& scratch,
                        const std::unordered_map<uint64_t, std::array<int, 2>>& edge_faces,
                        int face, int a, int b) {
  int lo = std::min(a, b), hi = std::max(a, b);
  uint64_t key = (static_cast<uint64_t>(lo) << 32) | static_cast<uint32_t>(hi);
  auto it = edge_faces.find(key);
  if (it == edge_faces.end()) return true;
  int other = it->second[0] == face ? it->second[1] : it->second[0];
  if (other < 0) return true;  // boundary
  return scratch.face_area2[face] * scratch.face_area2[other] <= 0;
}

void detect_aa_events(const TriangleMesh& mesh, const RasterScratch& scratch,
                      const std::unordered_map<uint64_t, std::array<int, 2>>& edge_faces,
                      RenderOutput& out) {
  const int W = out.width, H = out.height;
  auto consider_pair = [&](int xp, int yp, int xq, int yq, int axis) {
    size_t p = static_cast<size_t>(yp) * W + xp;
    size_t q = static_cast<size_t>(yq) * W + xq;
    int fp = out.tri_id[p], fq = out.tri_id[q];
    if (fp == fq) return;
    bool near_is_p = out.depth.data[p] < out.depth.data[q];
    size_t near_px = near_is_p ? p : q;
    int face = out.tri_id[near_px];
    if (face < 0) return;
    const auto& t = mesh.faces[face];
    // crossing of a contour edge with the segment between pixel centers
    double cc = axis == 0 ? yp + 0.5 : xp + 0.5;  // fixed coordinate
    double base = axis == 0 ? xp + 0.5 : yp + 0.5;
    for (int k = 0; k < 3; k++) {
      int a = t[k], b = t[(k + 1) % 3];
      if (!is_silhouette_edge(scratch, edge_faces, face, a, b)) continue;
      Vec2 sa = scratch.verts[a].screen, sb = scratch.verts[b].screen;
      double a_fixed = axis == 0 ? sa.y : sa.x;
      double b_fixed = axis == 0 ? sb.y : sb.x;
      double a_run = axis == 0 ? sa.x : sa.y;
      double b_run = axis == 0 ? sb.x : sb.y;
      double denom = b_fixed - a_fixed;
      if (std::abs(denom) < 1e-12) continue;
      double tt = (cc - a_fixed) / denom;
      if (tt < 0.0 || tt > 1.0) continue;
      double s = a_run + tt * (b_run - a_run) - base;
      if (s < 0.0 || s > 1.0) continue;

      AAEvent ev;
      ev.near_px = static_cast<int32_t>(near_px);
      ev.far_px = static_cast<int32_t>(near_is_p ? q : p);
      ev.updated = static_cast<int32_t>(s < 0.5 ? p : q);
      ev.face = face;
      ev.va = a;
      ev.vb = b;
      ev.s = s;
      ev.axis = static_cast<int8_t>(axis);
      if (near_is_p) {
        ev.c = s < 0.5 ? s + 0.5 : s - 0.5;
        ev.ds_sign = 1;
      } else {
        ev.c = s < 0.5 ? 0.5 - s : 1.5 - s;
        ev.ds_sign = -1;
      }
      out.events.push_back(ev);
      return;  // one event per pixel pair
    }
  };
  for (int y = 0; y < H; y++)
    for (int x = 0; x + 1 < W; x++) consider_pair(x, y, x + 1, y, 0);
  for (int y = 0; y + 1 < H; y++)
    for (int x = 0; x < W; x++) consider_pair(x, y, x, y + 1, 1);
}

void prepare_normals(const TriangleMesh& mesh, RasterScratch& scratch) {
  scratch.vertex_normal_sums.assign(mesh.positions.size(), Vec3{0, 0, 0});
  for (int f = 0; f < mesh.face_count(); f++) {
    Vec3 n = mesh.face_normal_unnormalized(f);
    for (int k = 0; k < 3; k++) scratch.vertex_normal_sums[mesh.faces[f][k]] += n;
  }
  scratch.vertex_normals.resize(mesh.positions.size());
  for (size_t v = 0; v < mesh.positions.size(); v++)
    scratch.vertex_normals[v] = normalize(scratch.vertex_normal_sums[v]);
}

// Shared screen-space derivative helpers -----------------------------------

struct ScreenJacobian {
  // d(screen.x)/d(world p), d(screen.y)/d(world p), d(inv_depth)/d(world p)
  Vec3 dsx, dsy, dinvd;
};

ScreenJacobian screen_jacobian(const Frame& fr, const TransformedVertex& tv) {
  // view = R (p - eye); depth d = -view.z; screen = (cx + f vx/d, cy - f vy/d)
  Vec3 row0{fr.rot(0, 0), fr.rot(0, 1), fr.rot(0, 2)};
  Vec3 row1{fr.rot(1, 0), fr.rot(1, 1), fr.rot(1, 2)};
  Vec3 row2{fr.rot(2, 0), fr.rot(2, 1), fr.rot(2, 2)};
  double d = tv.depth;
  double vx = (tv.screen.x - fr.cx) * d / fr.focal;
  double vy = -(tv.screen.y - fr.cy) * d / fr.focal;
  ScreenJacobian j;
  j.dsx = fr.focal * (row0 / d + (vx / (d * d)) * row2);
  j.dsy = -fr.focal * (row1 / d + (vy / (d * d)) * row2);
  j.dinvd = row2 / (d * d);  // d(1/d)/dp = -1/d^2 * dd/dp, dd/dp = -row2
  return j;
}

}  // namespace

RenderOutput render(const TriangleMesh& mesh, const Camera& cam, const RenderConfig& cfg) {
  Frame fr = make_frame(cam);
  RenderOutput out;
  out.normal_image = NormalMap(fr.width, fr.height, 3);
  out.alpha = AlphaMask(fr.width, fr.height, 1);
  if (mesh.empty()) {
    out.width = fr.width;
    out.height = fr.height;
    out.depth = Image(fr.width, fr.height, 1, RenderOutput::kBackgroundDepth);
    out.tri_id.assign(static_cast<size_t>(fr.width) * fr.height, -1);
    return out;
  }

  RasterScratch scratch;
  prepare_normals(mesh, scratch);
  rasterize_visibility(mesh, fr, cfg, scratch, out);

  // Base shading.
  const size_t n_pix = static_cast<size_t>(fr.width) * fr.height;
  for (size_t pix = 0; pix < n_pix; pix++) {
    int f = out.tri_id[pix];
    if (f < 0) continue;
    Vec3 n = shade_pixel(mesh, scratch, cfg, f, &out.barycentric[3 * pix]);
    out.normal_image.data[3 * pix] = n.x;
    out.normal_image.data[3 * pix + 1] = n.y;
    out.normal_image.data[3 * pix + 2] = n.z;
    out.alpha.data[pix] = 1.0;
  }

  // Silhouette antialiasing: all blends read base values, deltas accumulate.
  auto edge_faces = build_edge_faces(mesh);
  detect_aa_events(mesh, scratch, edge_faces, out);
  std::vector<double> normal_delta(n_pix * 3, 0.0);
  std::vector<double> alpha_delta(n_pix, 0.0);
  for (const auto& ev : out.events) {
    for (int c = 0; c < 3; c++) {
      double blended = ev.c * out.normal_image.data[3 * ev.near_px + c] +
                       (1 - ev.c) * out.normal_image.data[3 * ev.far_px + c];
      normal_delta[3 * ev.updated + c] += blended - out.normal_image.data[3 * ev.updated + c];
    }
    double blended_a = ev.c * out.alpha.data[ev.near_px] + (1 - ev.c) * out.alpha.data[ev.far_px];
    alpha_delta[ev.updated] += blended_a - out.alpha.data[ev.updated];
  }
  for (size_t i = 0; i < n_pix; i++) {
    for (int c = 0; c < 3; c++) out.normal_image.data[3 * i + c] += normal_delta[3 * i + c];
    out.alpha.data[i] = clamp(out.alpha.data[i] + alpha_delta[i], 0.0, 1.0);
  }
  return out;
}

VertexGrads render_backward(const RenderOutput& out, const TriangleMesh& mesh,
                            const Camera& cam, const Image& grad_normal,
                            const Image& grad_alpha, const RenderConfig& cfg) {
  const int W = out.width, H = out.height;
  if (!grad_normal.empty() && (grad_normal.width != W || grad_normal.height != H ||
                               grad_normal.channels != 3))
    throw_argument("render_backward: grad_normal shape mismatch");
  if (!grad_alpha.empty() && (grad_alpha.width != W || grad_alpha.height != H ||
                              grad_alpha.channels != 1))
    throw_argument("render_backward: grad_alpha shape mismatch");

  VertexGrads grads(mesh.positions.size(), Vec3{0, 0, 0});
  if (mesh.empty()) return grads;

  Frame fr = make_frame(cam);
  RasterScratch scratch;
  prepare_normals(mesh, scratch);
  scratch.verts.resize(mesh.positions.size());
  for (size_t v = 0; v < mesh.positions.size(); v++)
    scratch.verts[v] = transform_vertex(fr, mesh.positions[v], cfg.znear);
  scratch.face_area2.assign(mesh.face_count(), 0.0);
  for (int f = 0; f < mesh.face_count(); f++) {
    const auto& t = mesh.faces[f];
    if (scratch.verts[t[0]].valid && scratch.verts[t[1]].valid && scratch.verts[t[2]].valid)
      scratch.face_area2[f] = edge_fn(scratch.verts[t[0]].screen, scratch.verts[t[1]].screen,
                                      scratch.verts[t[2]].screen);
  }

  const size_t n_pix = static_cast<size_t>(W) * H;
  auto g_normal_at = [&](size_t pix, int c) {
    return grad_normal.empty() ? 0.0 : grad_normal.data[3 * pix + c];
  };
  auto g_alpha_at = [&](size_t pix) {
    return grad_alpha.empty() ? 0.0 : grad_alpha.data[pix];
  };

  // Per-pixel gradients w.r.t. the BASE (pre-antialiasing) shading, plus
  // event gradients w.r.t. the crossing position s.
  std::vector<double> g_base_normal(n_pix * 3, 0.0);
  std::vector<double> g_base_alpha(n_pix, 0.0);
  for (size_t pix = 0; pix < n_pix; pix++) {
    for (int c = 0; c < 3; c++) g_base_normal[3 * pix + c] = g_normal_at(pix, c);
    g_base_alpha[pix] = g_alpha_at(pix);
  }
  auto base_normal = [&](size_t pix) {
    int f = out.tri_id[pix];
    if (f < 0) return Vec3{0, 0, 0};
    return shade_pixel(mesh, scratch, cfg, f, &out.barycentric[3 * pix]);
  };
  for (const auto& ev : out.events) {
    // out[updated] += c*base[near] + (1-c)*base[far] - base[updated]
    Vec3 g_out{g_normal_at(ev.updated, 0), g_normal_at(ev.updated, 1),
               g_normal_at(ev.updated, 2)};
    double g_out_a = g_alpha_at(ev.updated);
    for (int c = 0; c < 3; c++) {
      g_base_normal[3 * ev.near_px + c] += ev.c * g_out[c];
      g_base_normal[3 * ev.far_px + c] += (1 - ev.c) * g_out[c];
      g_base_normal[3 * ev.updated + c] -= g_out[c];
    }
    g_base_alpha[ev.near_px] += ev.c * g_out_a;
    g_base_alpha[ev.far_px] += (1 - ev.c) * g_out_a;
    g_base_alpha[ev.updated] -= g_out_a;

    // dL/dc = <g_out, base[near] - base[far]>
    Vec3 bn = base_normal(ev.near_px), bf = base_normal(ev.far_px);
    double alpha_n = out.tri_id[ev.near_px] >= 0 ? 1.0 : 0.0;
    double alpha_f = out.tri_id[ev.far_px] >= 0 ? 1.0 : 0.0;
    double g_c = dot(g_out, bn - bf) + g_out_a * (alpha_n - alpha_f);
    double g_s = g_c * ev.ds_sign;
    if (g_s == 0) continue;

    // s = run_a + t*(run_b - run_a) - base, t = (cc - fixed_a)/(fixed_b - fixed_a)
    Vec2 sa = scratch.verts[ev.va].screen, sb = scratch.verts[ev.vb].screen;
    int axis = ev.axis;
    double a_fixed = axis == 0 ? sa.y : sa.x;
    double b_fixed = axis == 0 ? sb.y : sb.x;
    double a_run = axis == 0 ? sa.x : sa.y;
    double b_run = axis == 0 ? sb.x : sb.y;
    size_t anchor = ev.near_px;  // pair origin pixel: recover cc from updated/far
    // cc (fixed coordinate of the pair) can be recovered from either pixel
    int px = static_cast<int>(anchor % W), py = static_cast<int>(anchor / W);
    double cc = axis == 0 ? py + 0.5 : px + 0.5;
    double denom = b_fixed - a_fixed;
    double tt = (cc - a_fixed) / denom;
    double g_arun = g_s * (1 - tt);
    double g_brun = g_s * tt;
    double g_t = g_s * (b_run - a_run);
    double g_afixed = g_t * (tt - 1.0) / denom * 1.0;  // d t/d a_fixed = (tt-1)/denom
    double g_bfixed = g_t * (-tt) / denom;             // d t/d b_fixed = -tt/denom
    // map back to screen x/y
    Vec2 g_sa, g_sb;
    if (axis == 0) {
      g_sa = {g_arun, g_afixed};
      g_sb = {g_brun, g_bfixed};
    } else {
      g_sa = {g_afixed, g_arun};
      g_sb = {g_bfixed, g_brun};
    }
    ScreenJacobian ja = screen_jacobian(fr, scratch.verts[ev.va]);
    ScreenJacobian jb = screen_jacobian(fr, scratch.verts[ev.vb]);
    grads[ev.va] += g_sa.x * ja.dsx + g_sa.y * ja.dsy;
    grads[ev.vb] += g_sb.x * jb.dsx + g_sb.y * jb.dsy;
  }

  // Interior chain: g_base_normal -> (lambda, vertex normals) -> vertices.
  std::vector<Vec3> g_vnormal(mesh.positions.size(), Vec3{0, 0, 0});
  std::vector<Vec3> g_face_normal(cfg.flat_shading ? mesh.face_count() : 0, Vec3{0, 0, 0});

  for (size_t pix = 0; pix < n_pix; pix++) {
    int f = out.tri_id[pix];
    if (f < 0) continue;
    Vec3 g_n{g_base_normal[3 * pix], g_base_normal[3 * pix + 1], g_base_normal[3 * pix + 2]};
    if (g_n.x == 0 && g_n.y == 0 && g_n.z == 0) continue;
    const auto& t = mesh.faces[f];
    const double* bary = &out.barycentric[3 * pix];

    if (cfg.flat_shading) {
      Vec3 nf = mesh.face_normal_unnormalized(f);
      double len = length(nf);
      if (len < 1e-12) continue;
      Vec3 nn = nf / len;
      g_face_normal[f] += (g_n - nn * dot(nn, g_n)) / len;
      continue;
    }

    // n = m/|m|, m = sum lambda_i nv_i
    Vec3 m = bary[0] * scratch.vertex_normals[t[0]] +
             bary[1] * scratch.vertex_normals[t[1]] +
             bary[2] * scratch.vertex_normals[t[2]];
    double len = length(m);
    if (len < 1e-12) continue;
    Vec3 nn = m / len;
    Vec3 g_m = (g_n - nn * dot(nn, g_n)) / len;

    double g_lambda[3];
    for (int k = 0; k < 3; k++) {
      g_lambda[k] = dot(scratch.vertex_normals[t[k]], g_m);
      g_vnormal[t[k]] += bary[k] * g_m;
    }

    // lambda_i = b_i / B with b_i = (w_i / A2) * invd_i.
    const auto& va = scratch.verts[t[0]];
    const auto& vb = scratch.verts[t[1]];
    const auto& vc = scratch.verts[t[2]];
    double area2 = scratch.face_area2[f];
    if (std::abs(area2) < 1e-14) continue;
    int x = static_cast<int>(pix % W), y = static_cast<int>(pix / W);
    Vec2 pc{x + 0.5, y + 0.5};
    double w[3] = {edge_fn(vb.screen, vc.screen, pc), edge_fn(vc.screen, va.screen, pc),
                   edge_fn(va.screen, vb.screen, pc)};
    double invd[3] = {va.inv_depth, vb.inv_depth, vc.inv_depth};
    double b[3] = {(w[0] / area2) * invd[0], (w[1] / area2) * invd[1], (w[2] / area2) * invd[2]};
    double B = b[0] + b[1] + b[2];
    if (B <= 0) continue;
    double lambda[3] = {b[0] / B, b[1] / B, b[2] / B};
    double S = g_lambda[0] * lambda[0] + g_lambda[1] * lambda[1] + g_lambda[2] * lambda[2];
    double g_b[3];
    for (int k = 0; k < 3; k++) g_b[k] = (g_lambda[k] - S) / B;

    // b_k = (w_k/A2) * invd_k; A2 = sum w (only through the edge functions'
    // dependence on the three screen positions).
    double g_w[3];
    double T = (g_b[0] * invd[0] * w[0] + g_b[1] * invd[1] * w[1] + g_b[2] * invd[2] * w[2]) / (area2 * area2);
    for (int k = 0; k < 3; k++) g_w[k] = g_b[k] * invd[k] / area2;
    // A2 = w0+w1+w2 exactly at any pixel, so dA2 contributions fold into each w
    // via d(w_k/A2) = dw_k/A2 - w_k dA2/A2^2 with dA2 = dw0+dw1+dw2.
    for (int k = 0; k < 3; k++) g_w[k] -= T;

    double g_invd[3];
    for (int k = 0; k < 3; k++) g_invd[k] = g_b[k] * w[k] / area2;

    // Edge-function derivatives: w0 = E(s1,s2,pc), w1 = E(s2,s0,pc), w2 = E(s0,s1,pc)
    // dE(a,b,p)/da = (b.y - p.y, p.x - b.x), /db = (p.y - a.y, a.x - p.x).
    Vec2 s0 = va.screen, s1 = vb.screen, s2 = vc.screen;
    Vec2 g_s0{0, 0}, g_s1{0, 0}, g_s2{0, 0};
    auto add_edge_grads = [&](double gw, Vec2 a, Vec2 bb, Vec2& ga, Vec2& gb) {
      ga.x += gw * (bb.y - pc.y);
      ga.y += gw * (pc.x - bb.x);
      gb.x += gw * (pc.y - a.y);
      gb.y += gw * (a.x - pc.x);
    };
    add_edge_grads(g_w[0], s1, s2, g_s1, g_s2);
    add_edge_grads(g_w[1], s2, s0, g_s2, g_s0);
    add_edge_grads(g_w[2], s0, s1, g_s0, g_s1);

    ScreenJacobian j0 = screen_jacobian(fr, va);
    ScreenJacobian j1 = screen_jacobian(fr, vb);
    ScreenJacobian j2 = screen_jacobian(fr, vc);
    grads[t[0]] += g_s0.x * j0.dsx + g_s0.y * j0.dsy + g_invd[0] * j0.dinvd;
    grads[t[1]] += g_s1.x * j1.dsx + g_s1.y * j1.dsy + g_invd[1] * j1.dinvd;
    grads[t[2]] += g_s2.x * j2.dsx + g_s2.y * j2.dsy + g_invd[2] * j2.dinvd;
  }

  // Vertex-normal chain: nv = S/|S|, S = sum of incident unnormalized face
  // normals; face normal N = (p1-p0) x (p2-p0).
  std::vector<Vec3> g_sum(mesh.positions.size(), Vec3{0, 0, 0});
  bool any = false;
  for (size_t v = 0; v < mesh.positions.size(); v++) {
    Vec3 g = g_vnormal[v];
    if (g.x == 0 && g.y == 0 && g.z == 0) continue;
    double len = length(scratch.vertex_normal_sums[v]);
    if (len < 1e-12) continue;
    Vec3 nn = scratch.vertex_normal_sums[v] / len;
    g_sum[v] = (g - nn * dot(nn, g)) / len;
    any = true;
  }
  if (any || cfg.flat_shading) {
    for (int f = 0; f < mesh.face_count(); f++) {
      const auto& t = mesh.faces[f];
      Vec3 g_N = cfg.flat_shading ? g_face_normal[f]
                                  : g_sum[t[0]] + g_sum[t[1]] + g_sum[t[2]];
      if (g_N.x == 0 && g_N.y == 0 && g_N.z == 0) continue;
      Vec3 u = mesh.positions[t[1]] - mesh.positions[t[0]];
      Vec3 v = mesh.positions[t[2]] - mesh.positions[t[0]];
      Vec3 g_u = cross(v, g_N);
      Vec3 g_v = cross(g_N, u);
      grads[t[1]] += g_u;
      grads[t[2]] += g_v;
      grads[t[0]] -= g_u + g_v;
    }
  }
  return grads;
}

TexturedRender render_textured(const TriangleMesh& mesh, const Image& texture,
                               const Camera& cam, const RenderConfig& cfg) {
  if (!mesh.has_uvs()) throw_argument("render_textured: mesh has no texture coordinates");
  if (texture.empty() || texture.channels != 3)
    throw_argument("render_textured: texture must be a non-empty 3-channel image");

  TexturedRender out;
  // Geometry pass shares everything with render(); the normal image is
  // simply unused here.
  out.geometry = render(mesh, cam, cfg);
  out.alpha = out.geometry.alpha;
  out.rgb = Image(out.geometry.width, out.geometry.height, 3);

  const size_t n_pix = static_cast<size_t>(out.geometry.width) * out.geometry.height;
  std::vector<double> base(n_pix * 3, 0.0);
  for (size_t pix = 0; pix < n_pix; pix++) {
    int f = out.geometry.tri_id[pix];
    if (f < 0) continue;
    const double* bary = &out.geometry.barycentric[3 * pix];
    const auto& ut = mesh.uv_faces[f];
    Vec2 uv = bary[0] * mesh.uvs[ut[0]] + bary[1] * mesh.uvs[ut[1]] + bary[2] * mesh.uvs[ut[2]];
    for (int c = 0; c < 3; c++)
      base[3 * pix + c] = sample_bilinear(texture, uv.x * texture.width,
                                          (1.0 - uv.y) * texture.height, c);
  }
  out.rgb.data = base;
  for (const auto& ev : out.geometry.events) {
    for (int c = 0; c < 3; c++) {
      double blended = ev.c * base[3 * ev.near_px + c] + (1 - ev.c) * base[3 * ev.far_px + c];
      out.rgb.data[3 * ev.updated + c] += blended - base[3 * ev.updated + c];
    }
  }
  return out;
}

Image texture_backward(const TexturedRender& out, const TriangleMesh& mesh,
                       const Image& texture, const Camera& cam, const Image& grad_rgb,
                       const RenderConfig& cfg) {
  (void)cam;
  (void)cfg;
  const int W = out.geometry.width, H = out.geometry.height;
  if (grad_rgb.width != W || grad_rgb.height != H || grad_rgb.channels != 3)
    throw_argument("texture_backward: grad_rgb shape mismatch");

  const size_t n_pix = static_cast<size_t>(W) * H;
  std::vector<double> g_base(n_pix * 3, 0.0);
  for (size_t i = 0; i < n_pix * 3; i++) g_base[i] = grad_rgb.data[i];
  for (const auto& ev : out.geometry.events) {
    for (int c = 0; c < 3; c++) {
      double g = grad_rgb.data[3 * ev.updated + c];
      g_base[3 * ev.near_px + c] += ev.c * g;
      g_base[3 * ev.far_px + c] += (1 - ev.c) * g;
      g_base[3 * ev.updated + c] -= g;
    }
  }

  Image texel_grads(texture.width, texture.height, 3);
  auto scatter = [&](double x, double y, int c, double g) {
    // adjoint of sample_bilinear with clamp-to-edge
    double fx = x - 0.5, fy = y - 0.5;
    int x0 = static_cast<int>(std::floor(fx));
    int y0 = static_cast<int>(std::floor(fy));
    double tx = fx - x0, ty = fy - y0;
    auto cx = [&](int v) { return std::min(std::max(v, 0), texture.width - 1); };
    auto cy = [&](int v) { return std::min(std::max(v, 0), texture.height - 1); };
    texel_grads.at(cx(x0), cy(y0), c) += (1 - tx) * (1 - ty) * g;
    texel_grads.at(cx(x0 + 1), cy(y0), c) += tx * (1 - ty) * g;
    texel_grads.at(cx(x0), cy(y0 + 1), c) += (1 - tx) * ty * g;
    texel_grads.at(cx(x0 + 1), cy(y0 + 1), c) += tx * ty * g;
  };
  for (size_t pix = 0; pix < n_pix; pix++) {
    int f = out.geometry.tri_id[pix];
    if (f < 0) continue;
    const double* bary = &out.geometry.barycentric[3 * pix];
    const auto& ut = mesh.uv_faces[f];
    Vec2 uv = bary[0] * mesh.uvs[ut[0]] + bary[1] * mesh.uvs[ut[1]] + bary[2] * mesh.uvs[ut[2]];
    for (int c = 0; c < 3; c++) {
      double g = g_base[3 * pix + c];
      if (g != 0) scatter(uv.x * texture.width, (1.0 - uv.y) * texture.height, c, g);
    }
  }
  return texel_grads;
}

}  // namespace mvfuse
