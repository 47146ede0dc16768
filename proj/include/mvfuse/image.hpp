#pragma once

// Planar-free interleaved raster container. Normal maps are 3-channel
// images holding world-space unit vectors (zero vector = background),
// alpha masks are 1-channel coverage in [0,1].

#include <cstddef>
#include <vector>

#include "mvfuse/error.hpp"
#include "mvfuse/math.hpp"

namespace mvfuse {

struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;  // row-major, interleaved, top-left origin

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {}

  bool empty() const { return data.empty(); }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }

  double& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  Vec3 pixel3(int x, int y) const {
    size_t i = (static_cast<size_t>(y) * width + x) * channels;
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set_pixel3(int x, int y, Vec3 v) {
    size_t i = (static_cast<size_t>(y) * width + x) * channels;
    data[i] = v.x;
    data[i + 1] = v.y;
    data[i + 2] = v.z;
  }

  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

using NormalMap = Image;  // 3-channel
using AlphaMask = Image;  // 1-channel

inline void require_channels(const Image& img, int c, const char* what) {
  if (img.channels != c)
    throw_argument(std::string(what) + ": expected " + std::to_string(c) +
                   " channels, got " + std::to_string(img.channels));
}

// Bilinear sample with clamp-to-edge addressing; x,y in continuous pixel
// coordinates (pixel (i,j) has center (i+0.5, j+0.5)).
inline double sample_bilinear(const Image& img, double x, double y, int c) {
  double fx = x - 0.5, fy = y - 0.5;
  int x0 = static_cast<int>(std::floor(fx));
  int y0 = static_cast<int>(std::floor(fy));
  double tx = fx - x0, ty = fy - y0;
  auto cx = [&](int v) { return std::min(std::max(v, 0), img.width - 1); };
  auto cy = [&](int v) { return std::min(std::max(v, 0), img.height - 1); };
  double v00 = img.at(cx(x0), cy(y0), c);
  double v10 = img.at(cx(x0 + 1), cy(y0), c);
  double v01 = img.at(cx(x0), cy(y0 + 1), c);
  double v11 = img.at(cx(x0 + 1), cy(y0 + 1), c);
  return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 +
         (1 - tx) * ty * v01 + tx * ty * v11;
}

}  // namespace mvfuse
