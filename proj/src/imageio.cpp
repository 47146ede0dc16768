#include "mvfuse/imageio.hpp"

#include <cmath>

namespace mvfuse {

NormalMap decode_normal_map(const Raster& raster, double background_threshold) {
  if (raster.channels != 3)
    throw_format("normal map must have 3 channels, got " + std::to_string(raster.channels));
  NormalMap out(raster.width, raster.height, 3);
  const double maxval = raster.maxval();
  const size_t n = out.pixel_count();
  for (size_t i = 0; i < n; i++) {
    Vec3 v{2.0 * raster.samples[3 * i + 0] / maxval - 1.0,
           2.0 * raster.samples[3 * i + 1] / maxval - 1.0,
           2.0 * raster.samples[3 * i + 2] / maxval - 1.0};
    double len = length(v);
    v = len < background_threshold ? Vec3{0, 0, 0} : v / len;
    out.data[3 * i + 0] = v.x;
    out.data[3 * i + 1] = v.y;
    out.data[3 * i + 2] = v.z;
  }
  return out;
}

Raster encode_normal_map(const NormalMap& normals, int bit_depth) {
  require_channels(normals, 3, "encode_normal_map");
  if (bit_depth != 8 && bit_depth != 16)
    throw_argument("encode_normal_map: bit depth must be 8 or 16");
  Raster out;
  out.width = normals.width;
  out.height = normals.height;
  out.channels = 3;
  out.bit_depth = bit_depth;
  const double maxval = out.maxval();
  out.samples.resize(normals.data.size());
  for (size_t i = 0; i < normals.data.size(); i++) {
    double enc = clamp((normals.data[i] + 1.0) / 2.0, 0.0, 1.0);
    out.samples[i] = static_cast<uint16_t>(std::lround(enc * maxval));
  }
  return out;
}

AlphaMask alpha_from_normals(const NormalMap& normals, double delta) {
  require_channels(normals, 3, "alpha_from_normals");
  if (!(delta > 0.0 && delta < 1.0))
    throw_argument("alpha_from_normals: delta must lie in (0,1)");
  AlphaMask mask(normals.width, normals.height, 1);
  const size_t n = mask.pixel_count();
  for (size_t i = 0; i < n; i++) {
    Vec3 v{normals.data[3 * i], normals.data[3 * i + 1], normals.data[3 * i + 2]};
    mask.data[i] = length(v) >= delta ? 1.0 : 0.0;
  }
  return mask;
}

NormalMap read_normal_map(const std::string& path, double background_threshold) {
  return decode_normal_map(read_png(path), background_threshold);
}

void write_normal_map(const NormalMap& normals, const std::string& path, int bit_depth) {
  write_png(encode_normal_map(normals, bit_depth), path);
}

Raster quantize_image(const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16)
    throw_argument("quantize_image: bit depth must be 8 or 16");
  Raster out;
  out.width = image.width;
  out.height = image.height;
  out.channels = image.channels;
  out.bit_depth = bit_depth;
  const double maxval = out.maxval();
  out.samples.resize(image.data.size());
  for (size_t i = 0; i < image.data.size(); i++)
    out.samples[i] = static_cast<uint16_t>(std::lround(clamp(image.data[i], 0.0, 1.0) * maxval));
  return out;
}

Image dequantize_raster(const Raster& raster) {
  Image out(raster.width, raster.height, raster.channels);
  const double maxval = raster.maxval();
  for (size_t i = 0; i < raster.samples.size(); i++)
    out.data[i] = raster.samples[i] / maxval;
  return out;
}

Image read_image(const std::string& path) { return dequantize_raster(read_png(path)); }

void write_image(const Image& image, const std::string& path, int bit_depth) {
  write_png(quantize_image(image, bit_depth), path);
}

}  // namespace mvfuse
