#include "mvfuse/camera.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvfuse/error.hpp"

namespace mvfuse {

double default_distance(double fov_deg) {
  return 1.5 / std::tan(radians(fov_deg) / 2.0);
}

Vec3 Camera::position() const {
  double az = radians(azimuth_deg), el = radians(elevation_deg);
  double d = distance > 0 ? distance : default_distance(fov_deg);
  return d * Vec3{std::sin(az) * std::cos(el), std::sin(el), std::cos(az) * std::cos(el)};
}

Mat3 Camera::rotation() const {
  Vec3 c = position();
  Vec3 back = normalize(c);  // camera z axis points away from the target
  Vec3 up{0, 1, 0};
  if (std::abs(dot(back, up)) > 0.999) up = {0, 0, -1};  // top/bottom views
  Vec3 right = normalize(cross(up, back));
  Vec3 cam_up = cross(back, right);
  return Mat3::from_rows(right, cam_up, back);
}

double Camera::focal_pixels() const {
  return (height / 2.0) / std::tan(radians(fov_deg) / 2.0);
}

std::vector<Camera> preset_rig(int n_views, double fov_deg, double distance,
                               int width, int height) {
  if (n_views < 1) throw_argument("preset_rig: n_views must be >= 1");
  if (distance <= 0) distance = default_distance(fov_deg);
  std::vector<Camera> rig(n_views);
  for (int k = 0; k < n_views; k++) {
    rig[k].width = width;
    rig[k].height = height;
    rig[k].fov_deg = fov_deg;
    rig[k].azimuth_deg = 360.0 * k / n_views;
    rig[k].elevation_deg = 0.0;
    rig[k].distance = distance;
  }
  return rig;
}

bool project(const Camera& cam, Vec3 p, Vec2& pixel, double& depth) {
  Vec3 view = cam.rotation() * (p - cam.position());
  double d = -view.z;
  if (d <= 1e-12) return false;
  double f = cam.focal_pixels();
  pixel = {cam.width / 2.0 + f * view.x / d, cam.height / 2.0 - f * view.y / d};
  depth = d;
  return true;
}

Vec3 unproject(const Camera& cam, Vec2 pixel, double depth) {
  double f = cam.focal_pixels();
  Vec3 view{(pixel.x - cam.width / 2.0) * depth / f,
            -(pixel.y - cam.height / 2.0) * depth / f, -depth};
  return transpose(cam.rotation()) * view + cam.position();
}

namespace {

using nlohmann::json;

Camera camera_from_json(const json& j) {
  Camera cam;
  cam.width = j.value("width", 256);
  cam.height = j.value("height", 256);
  cam.fov_deg = j.value("fov_deg", 60.0);
  cam.azimuth_deg = j.value("azimuth_deg", 0.0);
  cam.elevation_deg = j.value("elevation_deg", 0.0);
  cam.distance = j.value("distance", 0.0);
  if (cam.distance <= 0) cam.distance = default_distance(cam.fov_deg);
  if (cam.fov_deg <= 0 || cam.fov_deg >= 180)
    throw_format("camera fov_deg must lie in (0, 180)");
  if (cam.width < 1 || cam.height < 1)
    throw_format("camera resolution must be positive");
  return cam;
}

json camera_to_json(const Camera& cam) {
  return json{{"azimuth_deg", cam.azimuth_deg},
              {"elevation_deg", cam.elevation_deg},
              {"fov_deg", cam.fov_deg},
              {"distance", cam.distance > 0 ? cam.distance : default_distance(cam.fov_deg)},
              {"width", cam.width},
              {"height", cam.height}};
}

}  // namespace

std::vector<Camera> parse_rig_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw_format(std::string("rig JSON: ") + e.what());
  }
  std::vector<Camera> rig;
  if (j.is_array()) {
    for (const auto& item : j) rig.push_back(camera_from_json(item));
  } else if (j.is_object() && j.contains("cameras")) {
    for (const auto& item : j["cameras"]) rig.push_back(camera_from_json(item));
  } else if (j.is_object() && j.contains("preset")) {
    const auto& p = j["preset"];
    rig = preset_rig(p.value("n_views", 4), p.value("fov_deg", 60.0),
                     p.value("distance", 0.0), p.value("width", 256),
                     p.value("height", 256));
  } else {
    throw_format("rig JSON: expected camera array, \"cameras\", or \"preset\"");
  }
  if (rig.empty()) throw_format("rig JSON: no cameras");
  return rig;
}

std::vector<Camera> read_rig_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open rig file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rig_json(ss.str());
}

std::string rig_to_json(const std::vector<Camera>& rig) {
  json arr = json::array();
  for (const auto& cam : rig) arr.push_back(camera_to_json(cam));
  return arr.dump(2) + "\n";
}

void write_rig_json(const std::vector<Camera>& rig, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write rig file: " + path);
  out << rig_to_json(rig);
}

}  // namespace mvfuse
