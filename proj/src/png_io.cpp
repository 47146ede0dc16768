#include <png.h>

#include <cstdio>
#include <memory>

#include "mvfuse/error.hpp"
#include "mvfuse/imageio.hpp"

namespace mvfuse {

namespace {

struct FileCloser {
  void operator()(FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

Raster read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw_io("cannot open PNG: " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw_format("not a PNG file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw_runtime("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw_format("malformed PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // PNG stores big-endian words
  png_read_update_info(png, info);

  Raster raster;
  raster.width = static_cast<int>(png_get_image_width(png, info));
  raster.height = static_cast<int>(png_get_image_height(png, info));
  raster.bit_depth = png_get_bit_depth(png, info) == 16 ? 16 : 8;
  raster.channels = png_get_channels(png, info);
  raster.samples.resize(static_cast<size_t>(raster.width) * raster.height * raster.channels);

  std::vector<png_bytep> rows(raster.height);
  size_t row_samples = static_cast<size_t>(raster.width) * raster.channels;
  std::vector<uint8_t> buf8;
  if (raster.bit_depth == 16) {
    for (int y = 0; y < raster.height; y++)
      rows[y] = reinterpret_cast<png_bytep>(raster.samples.data() + y * row_samples);
  } else {
    buf8.resize(raster.samples.size());
    for (int y = 0; y < raster.height; y++) rows[y] = buf8.data() + y * row_samples;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (raster.bit_depth == 8)
    for (size_t i = 0; i < buf8.size(); i++) raster.samples[i] = buf8[i];
  return raster;
}

void write_png(const Raster& raster, const std::string& path) {
  if (raster.channels != 1 && raster.channels != 3)
    throw_argument("write_png: only 1- or 3-channel rasters supported");
  if (raster.bit_depth != 8 && raster.bit_depth != 16)
    throw_argument("write_png: bit depth must be 8 or 16");

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw_io("cannot write PNG: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw_runtime("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw_io("PNG write failed: " + path);
  }
  png_init_io(png, fp.get());
  int color = raster.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, raster.width, raster.height, raster.bit_depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (raster.bit_depth == 16) png_set_swap(png);

  size_t row_samples = static_cast<size_t>(raster.width) * raster.channels;
  if (raster.bit_depth == 16) {
    for (int y = 0; y < raster.height; y++) {
      png_write_row(png, reinterpret_cast<png_const_bytep>(raster.samples.data() + y * row_samples));
    }
  } else {
    std::vector<uint8_t> row(row_samples);
    for (int y = 0; y < raster.height; y++) {
      for (size_t i = 0; i < row_samples; i++)
        row[i] = static_cast<uint8_t>(raster.samples[y * row_samples + i]);
      png_write_row(png, row.data());
    }
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace mvfuse
