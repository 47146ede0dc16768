#pragma once

// Shape initialization: silhouette carving into a voxel grid, smoothing
// into a scalar field, and iso-surface extraction.

#include <cstdint>
#include <string>
#include <vector>

#include "mvfuse/camera.hpp"
#include "mvfuse/image.hpp"
#include "mvfuse/mesh.hpp"

namespace mvfuse {

// Cubic binary voxel grid over a symmetric axis-aligned box. Voxel (i,j,k)
// spans a cube of side 2*half_extent/resolution; its center is the sample
// point used for carving.
struct OccupancyGrid {
  int resolution = 0;
  double half_extent = 1.0;  // box is [-half_extent, half_extent]^3
  std::vector<uint8_t> voxels;

  OccupancyGrid() = default;
  OccupancyGrid(int res, double half = 1.0, uint8_t fill = 0)
      : resolution(res), half_extent(half),
        voxels(static_cast<size_t>(res) * res * res, fill) {}

  double voxel_size() const { return 2.0 * half_extent / resolution; }
  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(k) * resolution + j) * resolution + i;
  }
  uint8_t at(int i, int j, int k) const { return voxels[index(i, j, k)]; }
  Vec3 voxel_center(int i, int j, int k) const {
    double h = voxel_size();
    return {-half_extent + (i + 0.5) * h, -half_extent + (j + 0.5) * h,
            -half_extent + (k + 0.5) * h};
  }
  long occupied_count() const;
};

// Scalar samples on the voxel-center lattice of an OccupancyGrid.
struct ScalarGrid {
  int nx = 0, ny = 0, nz = 0;
  Vec3 origin;      // world position of sample (0,0,0)
  double spacing = 0;
  std::vector<double> values;

  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(k) * ny + j) * nx + i;
  }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }
  Vec3 point(int i, int j, int k) const {
    return origin + Vec3{i * spacing, j * spacing, k * spacing};
  }
};

enum class CarveSemantics {
  intersection,  // empty when ANY view sees background (visual hull)
  union_of_views // empty only when ALL views see background
};

// A voxel center projecting outside an image counts as background in that
// view. Masks use nearest-pixel lookup.
OccupancyGrid carve_occupancy(const std::vector<AlphaMask>& masks,
                              const std::vector<Camera>& cams, int resolution,
                              double half_extent = 1.0,
                              CarveSemantics semantics = CarveSemantics::intersection,
                              int threads = 0);

// {0,1} field on the voxel-center lattice, optionally convolved with a
// separable Gaussian (sigma in voxels, boundary-clamped). Radius 0 returns
// the binary field unchanged.
ScalarGrid occupancy_to_field(const OccupancyGrid& grid, double smoothing_sigma,
                              int threads = 0);

// Iso-surface extraction on the lattice. Cells are split into six
// tetrahedra sharing the main diagonal, which makes the triangulation
// agree across cell faces; the result is watertight whenever the surface
// is closed inside the lattice, and lattice-clipped surfaces are capped.
// Fields that never cross the iso level produce an empty mesh.
TriangleMesh marching_cubes(const ScalarGrid& field, double iso);

// Raw dump for inspection: 16-byte header (magic "MVOC", u32 resolution,
// f64 half_extent), then bit-packed voxels in x-fastest order.
void write_occupancy(const OccupancyGrid& grid, const std::string& path);
OccupancyGrid read_occupancy(const std::string& path);

}  // namespace mvfuse
