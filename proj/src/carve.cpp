#include "mvfuse/carve.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "mvfuse/error.hpp"
#include "mvfuse/parallel.hpp"

namespace mvfuse {

long OccupancyGrid::occupied_count() const {
  long n = 0;
  for (uint8_t v : voxels) n += v ? 1 : 0;
  return n;
}

OccupancyGrid carve_occupancy(const std::vector<AlphaMask>& masks,
                              const std::vector<Camera>& cams, int resolution,
                              double half_extent, CarveSemantics semantics,
                              int threads) {
  if (masks.size() != cams.size() || masks.empty())
    throw_argument("carve_occupancy: need equally many masks and cameras (>= 1)");
  if (resolution < 8) throw_argument("carve_occupancy: resolution must be >= 8");
  for (size_t i = 0; i < masks.size(); i++) {
    if (masks[i].channels != 1 || masks[i].width != cams[i].width ||
        masks[i].height != cams[i].height)
      throw_argument("carve_occupancy: mask " + std::to_string(i) +
                     " does not match its camera resolution");
  }

  OccupancyGrid grid(resolution, half_extent);
  const int n = resolution;
  const size_t views = masks.size();

  parallel_chunks(n, threads, [&](int, long k0, long k1) {
    for (long k = k0; k < k1; k++) {
      for (int j = 0; j < n; j++) {
        for (int i = 0; i < n; i++) {
          Vec3 c = grid.voxel_center(i, j, static_cast<int>(k));
          int background_views = 0;
          for (size_t v = 0; v < views; v++) {
            bool background = true;
            Vec2 pix;
            double depth;
            if (project(cams[v], c, pix, depth)) {
              int px = static_cast<int>(std::floor(pix.x));
              int py = static_cast<int>(std::floor(pix.y));
              if (px >= 0 && px < masks[v].width && py >= 0 && py < masks[v].height)
                background = masks[v].at(px, py, 0) == 0.0;
            }
            if (background) background_views++;
          }
          bool empty = semantics == CarveSemantics::intersection
                           ? background_views > 0
                           : background_views == static_cast<int>(views);
          grid.voxels[grid.index(i, j, static_cast<int>(k))] = empty ? 0 : 1;
        }
      }
    }
  });
  return grid;
}

ScalarGrid occupancy_to_field(const OccupancyGrid& grid, double smoothing_sigma,
                              int threads) {
  if (smoothing_sigma < 0) throw_argument("occupancy_to_field: sigma must be >= 0");
  const int n = grid.resolution;
  ScalarGrid field;
  field.nx = field.ny = field.nz = n;
  field.spacing = grid.voxel_size();
  field.origin = grid.voxel_center(0, 0, 0);
  field.values.resize(grid.voxels.size());
  for (size_t i = 0; i < grid.voxels.size(); i++)
    field.values[i] = grid.voxels[i] ? 1.0 : 0.0;
  if (smoothing_sigma == 0) return field;

  // Normalized truncated kernel; clamp-to-edge at the borders.
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * smoothing_sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; i++) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (smoothing_sigma * smoothing_sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  auto clampi = [n](int v) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
  std::vector<double> tmp(field.values.size());
  double* src = field.values.data();
  double* dst = tmp.data();
  // x, then y, then z; ping-pong between the two buffers.
  for (int axis = 0; axis < 3; axis++) {
    parallel_chunks(n, threads, [&](int, long k0, long k1) {
      for (long k = k0; k < k1; k++) {
        for (int j = 0; j < n; j++) {
          for (int i = 0; i < n; i++) {
            double acc = 0;
            for (int o = -radius; o <= radius; o++) {
              int ii = i, jj = j, kk = static_cast<int>(k);
              if (axis == 0) ii = clampi(i + o);
              else if (axis == 1) jj = clampi(j + o);
              else kk = clampi(static_cast<int>(k) + o);
              acc += kernel[o + radius] * src[field.index(ii, jj, kk)];
            }
            dst[field.index(i, j, static_cast<int>(k))] = acc;
          }
        }
      }
    });
    std::swap(src, dst);
  }
  if (src != field.values.data()) field.values = tmp;
  return field;
}

void write_occupancy(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write occupancy: " + path);
  char magic[4] = {'M', 'V', 'O', 'C'};
  uint32_t res = static_cast<uint32_t>(grid.resolution);
  double half = grid.half_extent;
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&res), 4);
  out.write(reinterpret_cast<const char*>(&half), 8);
  std::vector<uint8_t> packed((grid.voxels.size() + 7) / 8, 0);
  for (size_t i = 0; i < grid.voxels.size(); i++)
    if (grid.voxels[i]) packed[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
  out.write(reinterpret_cast<const char*>(packed.data()), packed.size());
  if (!out) throw_io("write failed: " + path);
}

OccupancyGrid read_occupancy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open occupancy: " + path);
  char magic[4];
  uint32_t res = 0;
  double half = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&res), 4);
  in.read(reinterpret_cast<char*>(&half), 8);
  if (!in || std::memcmp(magic, "MVOC", 4) != 0)
    throw_format("not an occupancy dump: " + path);
  OccupancyGrid grid(static_cast<int>(res), half);
  std::vector<uint8_t> packed((grid.voxels.size() + 7) / 8);
  in.read(reinterpret_cast<char*>(packed.data()), packed.size());
  if (!in) throw_format("truncated occupancy dump: " + path);
  for (size_t i = 0; i < grid.voxels.size(); i++)
    grid.voxels[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return grid;
}

}  // namespace mvfuse
