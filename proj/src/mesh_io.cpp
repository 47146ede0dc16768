#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mvfuse/error.hpp"
#include "mvfuse/imageio.hpp"

namespace mvfuse {

namespace {

std::string lower_ext(const std::string& path) {
  auto pos = path.find_last_of('.');
  if (pos == std::string::npos) return "";
  std::string ext = path.substr(pos + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  return ext;
}

std::string stem_of(const std::string& path) {
  auto slash = path.find_last_of("/\\");
  auto base = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& msg) {
  throw_format(path + ":" + std::to_string(line) + ": " + msg);
}

// ---------------------------------------------------------------- OBJ ----

TriangleMesh read_obj(const std::string& path, MeshReadInfo* info) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open mesh: " + path);
  TriangleMesh mesh;
  std::vector<Vec2> uvs;
  bool any_uv_corner = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z)) parse_fail(path, lineno, "bad vertex line");
      mesh.positions.push_back(p);
    } else if (tag == "vt") {
      Vec2 t;
      if (!(ls >> t.x >> t.y)) parse_fail(path, lineno, "bad texcoord line");
      uvs.push_back(t);
    } else if (tag == "f") {
      // Corners as v, v/vt, v/vt/vn or v//vn; negative indices count from
      // the end per the OBJ spec.
      std::vector<int> vidx, tidx;
      std::string corner;
      while (ls >> corner) {
        int v = 0, t = 0;
        const char* s = corner.c_str();
        char* end = nullptr;
        v = static_cast<int>(std::strtol(s, &end, 10));
        if (end == s) parse_fail(path, lineno, "bad face corner '" + corner + "'");
        if (*end == '/') {
          const char* ts = end + 1;
          if (*ts != '/' && *ts != '\0') t = static_cast<int>(std::strtol(ts, &end, 10));
        }
        int nv = static_cast<int>(mesh.positions.size());
        int nt = static_cast<int>(uvs.size());
        v = v < 0 ? nv + v : v - 1;
        t = t < 0 ? nt + t : t - 1;
        if (v < 0 || v >= nv) parse_fail(path, lineno, "vertex index out of range");
        if (t >= nt) parse_fail(path, lineno, "texcoord index out of range");
        vidx.push_back(v);
        tidx.push_back(t);
      }
      if (vidx.size() < 3) parse_fail(path, lineno, "face with fewer than 3 corners");
      if (vidx.size() > 3 && info) info->triangulated_polygons++;
      for (size_t k = 1; k + 1 < vidx.size(); k++) {
        mesh.faces.push_back({vidx[0], vidx[k], vidx[k + 1]});
        mesh.uv_faces.push_back({tidx[0], tidx[k], tidx[k + 1]});
        if (tidx[0] >= 0 || tidx[k] >= 0 || tidx[k + 1] >= 0) any_uv_corner = true;
      }
    }
    // Other tags (vn, o, g, s, mtllib, usemtl) are accepted and ignored.
  }
  if (any_uv_corner && !uvs.empty()) {
    mesh.uvs = std::move(uvs);
    for (auto& t : mesh.uv_faces)
      for (int k = 0; k < 3; k++)
        if (t[k] < 0) t[k] = 0;  // corners without vt fall back to uv 0
  } else {
    mesh.uv_faces.clear();
  }
  return mesh;
}

void write_obj(const TriangleMesh& mesh, const std::string& path,
               const std::string& material_png) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write mesh: " + path);
  char buf[128];
  const bool with_uv = mesh.has_uvs();
  std::string mtl_name;
  if (!material_png.empty()) {
    mtl_name = stem_of(path) + ".mtl";
    auto slash = path.find_last_of("/\\");
    std::string mtl_path = slash == std::string::npos ? mtl_name : path.substr(0, slash + 1) + mtl_name;
    std::ofstream mtl(mtl_path);
    if (!mtl) throw_io("cannot write material: " + mtl_path);
    mtl << "newmtl material0\nKa 1 1 1\nKd 1 1 1\nKs 0 0 0\nmap_Kd " << material_png << "\n";
    out << "mtllib " << mtl_name << "\n";
  }
  for (const auto& p : mesh.positions) {
    std::snprintf(buf, sizeof buf, "v %.7g %.7g %.7g\n", p.x, p.y, p.z);
    out << buf;
  }
  if (with_uv) {
    for (const auto& t : mesh.uvs) {
      std::snprintf(buf, sizeof buf, "vt %.7g %.7g\n", t.x, t.y);
      out << buf;
    }
  }
  if (!material_png.empty()) out << "usemtl material0\n";
  for (size_t f = 0; f < mesh.faces.size(); f++) {
    const auto& t = mesh.faces[f];
    if (with_uv) {
      const auto& u = mesh.uv_faces[f];
      out << "f " << t[0] + 1 << '/' << u[0] + 1 << ' ' << t[1] + 1 << '/'
          << u[1] + 1 << ' ' << t[2] + 1 << '/' << u[2] + 1 << '\n';
    } else {
      out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
  }
  if (!out) throw_io("write failed: " + path);
}

// ---------------------------------------------------------------- PLY ----

struct PlyProperty {
  std::string name;
  int size = 0;       // bytes
  bool is_float = false;
  bool is_list = false;
  int count_size = 0;  // list count bytes
};

int ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

bool ply_type_float(const std::string& t) {
  return t == "float" || t == "float32" || t == "double" || t == "float64";
}

double read_scalar(const char* p, int size, bool is_float) {
  if (is_float) {
    if (size == 4) { float v; std::memcpy(&v, p, 4); return v; }
    double v; std::memcpy(&v, p, 8); return v;
  }
  // Integers are promoted through int64; unsigned widths <= 4 bytes fit.
  switch (size) {
    case 1: { uint8_t v; std::memcpy(&v, p, 1); return v; }
    case 2: { uint16_t v; std::memcpy(&v, p, 2); return v; }
    case 4: { int32_t v; std::memcpy(&v, p, 4); return v; }
    default: { int64_t v; std::memcpy(&v, p, 8); return static_cast<double>(v); }
  }
}

TriangleMesh read_ply(const std::string& path, MeshReadInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open mesh: " + path);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) parse_fail(path, lineno, "unexpected end of header");
    lineno++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next_line();
  if (line != "ply") parse_fail(path, lineno, "missing ply magic");

  struct Element {
    std::string name;
    long count = 0;
    std::vector<PlyProperty> props;
  };
  std::vector<Element> elements;
  bool little_endian = false;
  for (;;) {
    next_line();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "comment" || tag == "obj_info") continue;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") little_endian = true;
      else parse_fail(path, lineno, "unsupported PLY format '" + fmt + "' (binary_little_endian only)");
    } else if (tag == "element") {
      Element el;
      ls >> el.name >> el.count;
      elements.push_back(el);
    } else if (tag == "property") {
      if (elements.empty()) parse_fail(path, lineno, "property before element");
      PlyProperty prop;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> prop.name;
        prop.is_list = true;
        prop.count_size = ply_type_size(count_type);
        prop.size = ply_type_size(item_type);
        prop.is_float = ply_type_float(item_type);
        if (!prop.count_size || !prop.size) parse_fail(path, lineno, "unknown list types");
      } else {
        ls >> prop.name;
        prop.size = ply_type_size(type);
        prop.is_float = ply_type_float(type);
        if (!prop.size) parse_fail(path, lineno, "unknown property type '" + type + "'");
      }
      elements.back().props.push_back(prop);
    } else if (tag == "end_header") {
      break;
    } else {
      parse_fail(path, lineno, "unknown header line '" + line + "'");
    }
  }
  (void)little_endian;

  TriangleMesh mesh;
  std::vector<char> buf;
  bool has_uv = false;
  for (const auto& el : elements) {
    if (el.name == "vertex") {
      int off_x = -1, off_y = -1, off_z = -1, off_u = -1, off_v = -1;
      int stride = 0;
      std::vector<int> offsets;
      for (const auto& p : el.props) {
        if (p.is_list) parse_fail(path, lineno, "list property in vertex element unsupported");
        offsets.push_back(stride);
        if (p.name == "x") off_x = static_cast<int>(offsets.size()) - 1;
        if (p.name == "y") off_y = static_cast<int>(offsets.size()) - 1;
        if (p.name == "z") off_z = static_cast<int>(offsets.size()) - 1;
        if (p.name == "u" || p.name == "s") off_u = static_cast<int>(offsets.size()) - 1;
        if (p.name == "v" || p.name == "t") off_v = static_cast<int>(offsets.size()) - 1;
        stride += p.size;
      }
      if (off_x < 0 || off_y < 0 || off_z < 0)
        parse_fail(path, lineno, "vertex element missing x/y/z");
      has_uv = off_u >= 0 && off_v >= 0;
      buf.resize(static_cast<size_t>(stride));
      mesh.positions.reserve(el.count);
      for (long i = 0; i < el.count; i++) {
        if (!in.read(buf.data(), stride)) throw_format(path + ": truncated vertex data");
        auto get = [&](int pi) {
          const auto& p = el.props[pi];
          return read_scalar(buf.data() + offsets[pi], p.size, p.is_float);
        };
        mesh.positions.push_back({get(off_x), get(off_y), get(off_z)});
        if (has_uv) mesh.uvs.push_back({get(off_u), get(off_v)});
      }
    } else if (el.name == "face") {
      for (long i = 0; i < el.count; i++) {
        for (const auto& p : el.props) {
          if (!p.is_list) {
            buf.resize(p.size);
            if (!in.read(buf.data(), p.size)) throw_format(path + ": truncated face data");
            continue;
          }
          buf.resize(p.count_size);
          if (!in.read(buf.data(), p.count_size)) throw_format(path + ": truncated face data");
          long n = static_cast<long>(read_scalar(buf.data(), p.count_size, false));
          if (n < 3 || n > 255) throw_format(path + ": bad face vertex count");
          std::vector<int> idx(n);
          buf.resize(static_cast<size_t>(p.size) * n);
          if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size())))
            throw_format(path + ": truncated face data");
          for (long k = 0; k < n; k++)
            idx[k] = static_cast<int>(read_scalar(buf.data() + k * p.size, p.size, p.is_float));
          if (p.name == "vertex_indices" || p.name == "vertex_index") {
            if (n > 3 && info) info->triangulated_polygons++;
            for (long k = 1; k + 1 < n; k++) {
              mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
              if (has_uv) mesh.uv_faces.push_back({idx[0], idx[k], idx[k + 1]});
            }
          }
        }
      }
    } else {
      // Skip unknown fixed-stride elements.
      int stride = 0;
      for (const auto& p : el.props) {
        if (p.is_list) parse_fail(path, lineno, "cannot skip list element '" + el.name + "'");
        stride += p.size;
      }
      in.seekg(static_cast<std::streamoff>(stride) * el.count, std::ios::cur);
    }
  }
  for (const auto& t : mesh.faces)
    for (int k = 0; k < 3; k++)
      if (t[k] < 0 || t[k] >= mesh.vertex_count())
        throw_format(path + ": face index out of range");
  if (!has_uv) {
    mesh.uvs.clear();
    mesh.uv_faces.clear();
  }
  return mesh;
}

void write_ply(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write mesh: " + path);
  // Per-vertex UVs can be stored only when every corner of a vertex agrees,
  // i.e. the uv pool parallels the vertex array.
  bool with_uv = mesh.has_uvs() && mesh.uvs.size() == mesh.positions.size() &&
                 mesh.uv_faces == mesh.faces;
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.positions.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (with_uv) out << "property double u\nproperty double v\n";
  out << "element face " << mesh.faces.size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  for (size_t i = 0; i < mesh.positions.size(); i++) {
    double row[5] = {mesh.positions[i].x, mesh.positions[i].y, mesh.positions[i].z, 0, 0};
    int n = 3;
    if (with_uv) {
      row[3] = mesh.uvs[i].x;
      row[4] = mesh.uvs[i].y;
      n = 5;
    }
    out.write(reinterpret_cast<const char*>(row), n * 8);
  }
  for (const auto& t : mesh.faces) {
    uint8_t count = 3;
    int32_t idx[3] = {t[0], t[1], t[2]};
    out.write(reinterpret_cast<const char*>(&count), 1);
    out.write(reinterpret_cast<const char*>(idx), 12);
  }
  if (!out) throw_io("write failed: " + path);
}

}  // namespace

TriangleMesh read_mesh(const std::string& path, MeshReadInfo* info) {
  std::string ext = lower_ext(path);
  if (ext == "obj") return read_obj(path, info);
  if (ext == "ply") return read_ply(path, info);
  throw_argument("read_mesh: unsupported extension '" + ext + "' (use .obj or .ply)");
}

void write_mesh(const TriangleMesh& mesh, const std::string& path,
                const std::string& material_png) {
  std::string ext = lower_ext(path);
  if (ext == "obj") return write_obj(mesh, path, material_png);
  if (ext == "ply") return write_ply(mesh, path);
  throw_argument("write_mesh: unsupported extension '" + ext + "' (use .obj or .ply)");
}

}  // namespace mvfuse
