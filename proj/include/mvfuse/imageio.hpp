#pragma once

// File-format surface: PNG rasters (8/16-bit), the world-space normal
// encoding n_enc = (n+1)/2, and OBJ / binary-PLY meshes.

#include <cstdint>
#include <string>
#include <vector>

#include "mvfuse/image.hpp"
#include "mvfuse/mesh.hpp"

namespace mvfuse {

// Quantized raster as stored in a PNG: 1 or 3 channels, 8 or 16 bits.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;               // 8 or 16
  std::vector<uint16_t> samples;   // row-major, interleaved, value <= maxval

  int maxval() const { return bit_depth == 16 ? 65535 : 255; }
};

Raster read_png(const std::string& path);
void write_png(const Raster& raster, const std::string& path);

// Normal-map threshold shared by decoding and alpha extraction.
inline constexpr double kBackgroundThreshold = 0.05;

// Raster -> world-space normals. Pixels whose decoded vector norm falls
// below `background_threshold` become the exact zero vector; the rest are
// renormalized to unit length.
NormalMap decode_normal_map(const Raster& raster,
                            double background_threshold = kBackgroundThreshold);

// Normals -> raster with channel = round((n+1)/2 * maxval). The zero
// vector lands exactly on mid-gray.
Raster encode_normal_map(const NormalMap& normals, int bit_depth = 16);

// alpha = 1 where ||n|| >= delta.
AlphaMask alpha_from_normals(const NormalMap& normals,
                             double delta = kBackgroundThreshold);

NormalMap read_normal_map(const std::string& path,
                          double background_threshold = kBackgroundThreshold);
void write_normal_map(const NormalMap& normals, const std::string& path,
                      int bit_depth = 16);

// Generic [0,1] image <-> quantized raster (RGB images, masks, depth).
Raster quantize_image(const Image& image, int bit_depth);
Image dequantize_raster(const Raster& raster);
Image read_image(const std::string& path);
void write_image(const Image& image, const std::string& path, int bit_depth = 8);

// Mesh I/O. Format chosen by extension: .obj or .ply. OBJ is text with
// positions kept to 7 significant digits; PLY is binary little-endian with
// float64 coordinates. Non-triangle faces are fan-triangulated on read.
struct MeshReadInfo {
  int triangulated_polygons = 0;  // input polygons that needed fanning
};
TriangleMesh read_mesh(const std::string& path, MeshReadInfo* info = nullptr);
void write_mesh(const TriangleMesh& mesh, const std::string& path,
                const std::string& material_png = "");

}  // namespace mvfuse
