#pragma once

// Orbit-rig pinhole camera. World is right-handed, +Y up; azimuth 0 puts
// the camera on +Z looking at the origin, so "front/left/right/back" views
// sit at azimuth 0/90/180/270. Pixel origin is the top-left corner, +x
// right, +y down; camera-space depth is positive in front of the camera.

#include <string>
#include <vector>

#include "mvfuse/math.hpp"

namespace mvfuse {

struct Camera {
  int width = 256;
  int height = 256;
  double fov_deg = 60.0;        // vertical field of view
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  double distance = 0.0;        // from the origin; 0 = use default_distance()

  Vec3 position() const;
  // Rows are the camera x (right), y (up), z (backward) axes.
  Mat3 rotation() const;
  double focal_pixels() const;  // vertical focal length in pixels
};

// The orbit distance rule: 1.5x the NDC focal length, i.e. 1.5 / tan(fov/2).
double default_distance(double fov_deg);

// n_views cameras at azimuth 360*k/n_views, elevation 0. distance <= 0
// selects default_distance(fov_deg).
std::vector<Camera> preset_rig(int n_views = 4, double fov_deg = 60.0,
                               double distance = 0.0, int width = 256,
                               int height = 256);

// Perspective projection. Returns false (and leaves outputs untouched)
// when the point is not in front of the camera.
bool project(const Camera& cam, Vec3 p, Vec2& pixel, double& depth);

// Inverse of project for a given camera-space depth.
Vec3 unproject(const Camera& cam, Vec2 pixel, double depth);

// Rig JSON: a top-level array of per-camera objects, or an object with
// either a "cameras" array or a "preset" block
// {"n_views","fov_deg","distance","width","height"}.
std::vector<Camera> read_rig_json(const std::string& path);
std::vector<Camera> parse_rig_json(const std::string& text);
void write_rig_json(const std::vector<Camera>& rig, const std::string& path);
std::string rig_to_json(const std::vector<Camera>& rig);

}  // namespace mvfuse
