#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "mvfuse/imageio.hpp"
#include "mvfuse/rng.hpp"

using namespace mvfuse;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mvfuse_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

Raster solid_raster(int w, int h, int bit_depth, uint16_t r, uint16_t g, uint16_t b) {
  Raster ras;
  ras.width = w;
  ras.height = h;
  ras.channels = 3;
  ras.bit_depth = bit_depth;
  ras.samples.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < ras.samples.size(); i += 3) {
    ras.samples[i] = r;
    ras.samples[i + 1] = g;
    ras.samples[i + 2] = b;
  }
  return ras;
}

TriangleMesh unit_cube() {
  TriangleMesh m;
  m.positions = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                 {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};
  m.faces = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
             {1, 2, 6}, {1, 6, 5}, {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}};
  return m;
}

}  // namespace

TEST_CASE("decode maps axis-aligned 8-bit pixels to unit axes") {
  auto ras = solid_raster(2, 1, 8, 255, 128, 128);
  auto nm = decode_normal_map(ras);
  Vec3 n = nm.pixel3(0, 0);
  CHECK(n.x == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(n.y) < 2e-2);
  CHECK(std::abs(n.z) < 2e-2);
  CHECK(length(n) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("decode mid-gray is the background sentinel") {
  auto ras = solid_raster(1, 1, 8, 128, 128, 128);
  auto nm = decode_normal_map(ras);
  CHECK(nm.pixel3(0, 0) == Vec3{0, 0, 0});
}

TEST_CASE("decode is bit-depth invariant") {
  auto ras = solid_raster(1, 1, 16, 65535, 32768, 32768);
  auto nm = decode_normal_map(ras);
  CHECK(nm.pixel3(0, 0).x == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("decode rejects wrong channel count") {
  Raster ras;
  ras.width = ras.height = 1;
  ras.channels = 1;
  ras.samples = {0};
  CHECK_THROWS_AS(decode_normal_map(ras), Error);
}

TEST_CASE("encode puts +z at (0.5,0.5,1.0)*maxval and zero at mid-gray") {
  NormalMap nm(2, 1, 3);
  nm.set_pixel3(0, 0, {0, 0, 1});
  nm.set_pixel3(1, 0, {0, 0, 0});
  auto ras8 = encode_normal_map(nm, 8);
  CHECK(ras8.samples[0] == 128);  // round(0.5*255)
  CHECK(ras8.samples[1] == 128);
  CHECK(ras8.samples[2] == 255);
  CHECK(ras8.samples[3] == 128);
  auto ras16 = encode_normal_map(nm, 16);
  CHECK(ras16.samples[2] == 65535);
  CHECK(ras16.samples[3] == 32768);
}

TEST_CASE("round trip over random unit vectors, 16-bit") {
  Rng rng(7);
  const int n = 100000;
  int w = 400, h = 250;
  REQUIRE(w * h == n);
  NormalMap nm(w, h, 3);
  for (int i = 0; i < n; i++) {
    Vec3 v = rng.unit_vector();
    nm.data[3 * i] = v.x;
    nm.data[3 * i + 1] = v.y;
    nm.data[3 * i + 2] = v.z;
  }
  auto back = decode_normal_map(encode_normal_map(nm, 16));
  double max_err = 0;
  for (size_t i = 0; i < nm.data.size(); i++)
    max_err = std::max(max_err, std::abs(back.data[i] - nm.data[i]));
  CHECK(max_err <= 2.0 / 65535);
  // every decoded foreground pixel is unit length
  for (int i = 0; i < n; i++) {
    Vec3 v = back.pixel3(i % w, i / w);
    CHECK(std::abs(length(v) - 1.0) <= 1e-3);
  }
}

TEST_CASE("background mask survives encode/decode at both depths") {
  Rng rng(3);
  NormalMap nm(64, 64, 3);
  std::vector<char> is_bg(64 * 64);
  for (int i = 0; i < 64 * 64; i++) {
    bool bg = rng.uniform() < 0.4;
    is_bg[i] = bg;
    Vec3 v = bg ? Vec3{0, 0, 0} : rng.unit_vector();
    nm.data[3 * i] = v.x;
    nm.data[3 * i + 1] = v.y;
    nm.data[3 * i + 2] = v.z;
  }
  for (int depth : {8, 16}) {
    auto back = decode_normal_map(encode_normal_map(nm, depth));
    for (int i = 0; i < 64 * 64; i++) {
      bool bg = back.pixel3(i % 64, i / 64) == Vec3{0, 0, 0};
      CHECK(bg == static_cast<bool>(is_bg[i]));
    }
  }
}

TEST_CASE("alpha_from_normals thresholds and is monotone in delta") {
  NormalMap nm(3, 1, 3);
  nm.set_pixel3(0, 0, {0, 0, 0});
  nm.set_pixel3(1, 0, {0.03, 0, 0});  // sub-threshold magnitude
  nm.set_pixel3(2, 0, {0, 1, 0});
  auto m1 = alpha_from_normals(nm, 0.05);
  CHECK(m1.data[0] == 0.0);
  CHECK(m1.data[1] == 0.0);
  CHECK(m1.data[2] == 1.0);
  // raising delta never turns 0 into 1
  auto m2 = alpha_from_normals(nm, 0.5);
  for (int i = 0; i < 3; i++) CHECK(m2.data[i] <= m1.data[i]);

  NormalMap all_bg(4, 4, 3);
  auto mz = alpha_from_normals(all_bg);
  for (double v : mz.data) CHECK(v == 0.0);
}

TEST_CASE("png round trip preserves samples exactly") {
  Rng rng(11);
  for (int depth : {8, 16}) {
    Raster ras;
    ras.width = 33;
    ras.height = 17;
    ras.channels = 3;
    ras.bit_depth = depth;
    ras.samples.resize(33 * 17 * 3);
    for (auto& s : ras.samples)
      s = static_cast<uint16_t>(rng.below(ras.maxval() + 1));
    auto path = temp_path("roundtrip_" + std::to_string(depth) + ".png");
    write_png(ras, path);
    auto back = read_png(path);
    REQUIRE(back.width == ras.width);
    REQUIRE(back.height == ras.height);
    REQUIRE(back.bit_depth == depth);
    CHECK(back.samples == ras.samples);
  }
}

TEST_CASE("single channel png round trip") {
  Raster ras;
  ras.width = 5;
  ras.height = 4;
  ras.channels = 1;
  ras.bit_depth = 16;
  ras.samples = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 1000, 20000, 40000, 65535};
  auto path = temp_path("gray16.png");
  write_png(ras, path);
  auto back = read_png(path);
  CHECK(back.channels == 1);
  CHECK(back.samples == ras.samples);
}

TEST_CASE("obj round trip: unit cube topology and coordinates") {
  auto cube = unit_cube();
  auto path = temp_path("cube.obj");
  write_mesh(cube, path);
  auto back = read_mesh(path);
  REQUIRE(back.vertex_count() == 8);
  REQUIRE(back.face_count() == 12);
  CHECK(back.faces == cube.faces);
  for (int i = 0; i < 8; i++)
    CHECK(distance(back.positions[i], cube.positions[i]) < 1e-6);
}

TEST_CASE("ply round trip is bit-exact for doubles") {
  auto cube = unit_cube();
  cube.positions[0] = {-0.12345678901234, 0.98765432109876, 1e-15};
  auto path = temp_path("cube.ply");
  write_mesh(cube, path);
  auto back = read_mesh(path);
  REQUIRE(back.vertex_count() == 8);
  REQUIRE(back.face_count() == 12);
  CHECK(back.faces == cube.faces);
  for (int i = 0; i < 8; i++) CHECK(back.positions[i] == cube.positions[i]);
}

TEST_CASE("mesh uvs survive obj and consistent-ply round trips") {
  TriangleMesh m;
  m.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  m.uvs = {{0.1, 0.2}, {0.9, 0.1}, {0.5, 0.8}};
  m.uv_faces = {{0, 1, 2}};
  for (const char* name : {"tri_uv.obj", "tri_uv.ply"}) {
    auto path = temp_path(name);
    write_mesh(m, path);
    auto back = read_mesh(path);
    REQUIRE(back.has_uvs());
    for (int k = 0; k < 3; k++) {
      CHECK(back.uvs[back.uv_faces[0][k]].x == doctest::Approx(m.uvs[k].x).epsilon(1e-6));
      CHECK(back.uvs[back.uv_faces[0][k]].y == doctest::Approx(m.uvs[k].y).epsilon(1e-6));
    }
  }
}

TEST_CASE("non-triangle obj faces are fan-triangulated") {
  auto path = temp_path("quad.obj");
  {
    FILE* f = fopen(path.c_str(), "w");
    fputs("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n", f);
    fclose(f);
  }
  MeshReadInfo info;
  auto mesh = read_mesh(path, &info);
  REQUIRE(mesh.face_count() == 2);
  CHECK(info.triangulated_polygons == 1);
  // fan from the first corner: (0,1,2), (0,2,3) — matches ear clipping on a
  // convex quad up to triangulation choice; compare areas instead of indices.
  double area = mesh.face_area(0) + mesh.face_area(1);
  CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("malformed obj reports the line number") {
  auto path = temp_path("bad.obj");
  {
    FILE* f = fopen(path.c_str(), "w");
    fputs("v 0 0 0\nv 1 0 0\nf 1 2 99\n", f);
    fclose(f);
  }
  try {
    read_mesh(path);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::format);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("missing file raises io error") {
  CHECK_THROWS_AS(read_mesh("/nonexistent/nope.obj"), Error);
  CHECK_THROWS_AS(read_png("/nonexistent/nope.png"), Error);
}
