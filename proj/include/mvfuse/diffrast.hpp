#pragma once

// Software differentiable rasterizer. Forward: z-buffered perspective
// rasterization with per-pixel renormalized interpolation of area-weighted
// vertex normals, plus analytic silhouette antialiasing on pixel pairs
// that straddle a contour edge (the blend weight is the edge crossing
// position between the two pixel centers). Backward: exact adjoint of the
// forward, routing interior gradients through the barycentric/shading
// chain and coverage gradients through the crossing position to the two
// edge vertices.

#include <cstdint>
#include <limits>
#include <vector>

#include "mvfuse/camera.hpp"
#include "mvfuse/image.hpp"
#include "mvfuse/mesh.hpp"

namespace mvfuse {

struct RenderConfig {
  bool flat_shading = false;  // face normals instead of interpolated ones
  double znear = 1e-3;
  int threads = 0;  // 0 = hardware
};

// One antialiasing blend: out[updated] = c*shade(near) + (1-c)*shade(far),
// where the crossing parameter s in [0,1] measures the silhouette edge
// position between the two pixel centers.
struct AAEvent {
  int32_t updated, near_px, far_px;
  int32_t face;
  int32_t va, vb;   // mesh vertices of the silhouette edge
  double s;
  double c;
  int8_t ds_sign;   // dc/ds
  int8_t axis;      // 0 horizontal pair, 1 vertical pair
};

struct RenderOutput {
  NormalMap normal_image;  // post-antialiasing
  AlphaMask alpha;         // post-antialiasing, in [0,1]
  Image depth;             // camera-space depth, +inf on background
  std::vector<int32_t> tri_id;      // -1 on background
  std::vector<double> barycentric;  // 3 per pixel, perspective-correct
  std::vector<AAEvent> events;
  int degenerate_faces = 0;  // zero-area or near-plane rejected
  int width = 0, height = 0;

  static constexpr double kBackgroundDepth = std::numeric_limits<double>::infinity();
};

using VertexGrads = std::vector<Vec3>;

RenderOutput render(const TriangleMesh& mesh, const Camera& cam,
                    const RenderConfig& cfg = {});

// pixel-space gradients -> vertex-position gradients. grad_normal is a
// 3-channel image (may be empty for alpha-only losses), grad_alpha a
// 1-channel image (may be empty).
VertexGrads render_backward(const RenderOutput& out, const TriangleMesh& mesh,
                            const Camera& cam, const Image& grad_normal,
                            const Image& grad_alpha, const RenderConfig& cfg = {});

// Textured forward pass: bilinear texture lookup at the interpolated UV.
// Texture rows follow the image convention (row 0 at v=1).
struct TexturedRender {
  Image rgb;
  AlphaMask alpha;
  RenderOutput geometry;  // intermediates for the backward pass
};

TexturedRender render_textured(const TriangleMesh& mesh, const Image& texture,
                               const Camera& cam, const RenderConfig& cfg = {});

// pixel-space RGB gradients -> texel gradients (vertices held constant).
Image texture_backward(const TexturedRender& out, const TriangleMesh& mesh,
                       const Image& texture, const Camera& cam,
                       const Image& grad_rgb, const RenderConfig& cfg = {});

}  // namespace mvfuse
