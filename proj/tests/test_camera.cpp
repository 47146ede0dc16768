#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mvfuse/camera.hpp"
#include "mvfuse/error.hpp"
#include "mvfuse/rng.hpp"

using namespace mvfuse;

TEST_CASE("preset rig matches the front/left/right/back convention") {
  auto rig = preset_rig();
  REQUIRE(rig.size() == 4);
  CHECK(rig[0].azimuth_deg == 0.0);
  CHECK(rig[1].azimuth_deg == 90.0);
  CHECK(rig[2].azimuth_deg == 180.0);
  CHECK(rig[3].azimuth_deg == 270.0);
  for (const auto& cam : rig) CHECK(cam.elevation_deg == 0.0);

  // default distance = 1.5 / tan(30 deg) = 2.598...
  CHECK(rig[0].distance == doctest::Approx(2.598076211).epsilon(1e-9));
  Vec3 front = rig[0].position();
  CHECK(front.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(front.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(front.z == doctest::Approx(2.598076211).epsilon(1e-9));
}

TEST_CASE("single view sits on +Z looking at the origin") {
  auto rig = preset_rig(1);
  REQUIRE(rig.size() == 1);
  Vec3 p = rig[0].position();
  CHECK(p.x == doctest::Approx(0.0));
  CHECK(p.z > 0);
}

TEST_CASE("origin projects to the exact image center with correct depth") {
  for (const auto& cam : preset_rig(7, 60.0, 0.0, 320, 240)) {
    Vec2 pix;
    double depth;
    REQUIRE(project(cam, {0, 0, 0}, pix, depth));
    CHECK(pix.x == doctest::Approx(160.0).epsilon(1e-12));
    CHECK(pix.y == doctest::Approx(120.0).epsilon(1e-12));
    CHECK(depth == doctest::Approx(cam.distance).epsilon(1e-12));
  }
}

TEST_CASE("+x through the front camera lands right of center") {
  Camera cam = preset_rig()[0];
  Vec2 pix;
  double depth;
  REQUIRE(project(cam, {0.1, 0, 0}, pix, depth));
  CHECK(pix.x > cam.width / 2.0);
  CHECK(pix.y == doctest::Approx(cam.height / 2.0));
  // +y goes up on screen, i.e. smaller pixel y
  REQUIRE(project(cam, {0, 0.1, 0}, pix, depth));
  CHECK(pix.y < cam.height / 2.0);
}

TEST_CASE("points behind the camera are flagged invalid") {
  Camera cam = preset_rig()[0];
  Vec2 pix;
  double depth;
  CHECK_FALSE(project(cam, {0, 0, cam.distance + 1.0}, pix, depth));
}

TEST_CASE("project/unproject round trip over random frustum points") {
  Rng rng(99);
  auto rig = preset_rig(5, 47.0, 3.1, 200, 150);
  for (int i = 0; i < 10000; i++) {
    const auto& cam = rig[i % rig.size()];
    Vec3 p{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)};
    Vec2 pix;
    double depth;
    REQUIRE(project(cam, p, pix, depth));
    Vec3 back = unproject(cam, pix, depth);
    REQUIRE(distance(back, p) < 1e-6);
  }
}

TEST_CASE("opposite cameras: mirrored world points share pixels, planar points mirror") {
  auto rig = preset_rig(4);
  const Camera& front = rig[0];
  const Camera& back = rig[2];
  Rng rng(5);
  for (int i = 0; i < 1000; i++) {
    Vec3 p{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
    Vec3 mirrored{-p.x, p.y, -p.z};  // 180 degree rotation about +Y
    Vec2 a, b;
    double da, db;
    REQUIRE(project(front, p, a, da));
    REQUIRE(project(back, mirrored, b, db));
    CHECK(std::abs(a.x - b.x) < 1e-9);
    CHECK(std::abs(a.y - b.y) < 1e-9);
    CHECK(da == doctest::Approx(db).epsilon(1e-12));
  }
  // a point in the z=0 plane appears horizontally mirrored between the views
  for (int i = 0; i < 1000; i++) {
    Vec3 p{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), 0.0};
    Vec2 a, b;
    double da, db;
    REQUIRE(project(front, p, a, da));
    REQUIRE(project(back, p, b, db));
    CHECK(b.x == doctest::Approx(front.width - a.x).epsilon(1e-9));
    CHECK(b.y == doctest::Approx(a.y).epsilon(1e-9));
  }
}

TEST_CASE("top-down camera has a well-defined frame") {
  Camera cam;
  cam.elevation_deg = 90.0;
  cam.distance = 2.0;
  Vec2 pix;
  double depth;
  REQUIRE(project(cam, {0, 0, 0}, pix, depth));
  CHECK(depth == doctest::Approx(2.0));
  // +x still lands right of center under the fallback up vector
  REQUIRE(project(cam, {0.1, 0, 0}, pix, depth));
  CHECK(pix.x > cam.width / 2.0);
}

TEST_CASE("rig json round trips exactly and accepts presets") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "mvfuse_tests";
  fs::create_directories(dir);
  auto path = (dir / "rig.json").string();

  auto rig = preset_rig(3, 55.0, 2.25, 128, 96);
  rig[1].elevation_deg = 12.5;
  write_rig_json(rig, path);
  auto back = read_rig_json(path);
  REQUIRE(back.size() == rig.size());
  for (size_t i = 0; i < rig.size(); i++) {
    CHECK(back[i].azimuth_deg == rig[i].azimuth_deg);
    CHECK(back[i].elevation_deg == rig[i].elevation_deg);
    CHECK(back[i].fov_deg == rig[i].fov_deg);
    CHECK(back[i].distance == rig[i].distance);
    CHECK(back[i].width == rig[i].width);
    CHECK(back[i].height == rig[i].height);
  }

  auto preset = parse_rig_json(R"({"preset": {"n_views": 4, "fov_deg": 60.0, "width": 256, "height": 256}})");
  REQUIRE(preset.size() == 4);
  CHECK(preset[2].azimuth_deg == 180.0);
  CHECK(preset[0].distance == doctest::Approx(2.598076211).epsilon(1e-9));

  CHECK_THROWS_AS(parse_rig_json("{\"nope\": 1}"), Error);
  CHECK_THROWS_AS(parse_rig_json("not json"), Error);
}
