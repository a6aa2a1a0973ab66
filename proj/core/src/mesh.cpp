#include "planekit/mesh.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "planekit/dataset_io.hpp"
#include "planekit/error.hpp"

namespace planekit {

namespace {

constexpr std::uint32_t kNoVertex = std::numeric_limits<std::uint32_t>::max();

void append_number(std::string& out, double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  out.append(buffer, result.ptr);
}

void append_number(std::string& out, std::uint32_t value) {
  char buffer[16];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  out.append(buffer, result.ptr);
}

}  // namespace

std::array<std::uint8_t, 3> plane_color(std::size_t plane_index) {
  // Golden-ratio hue walk at fixed saturation/value.
  const double hue = std::fmod(0.11 + 0.6180339887498949 * static_cast<double>(plane_index), 1.0);
  const double s = 0.65;
  const double v = 0.95;
  const double h6 = hue * 6.0;
  const int sector = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  double r = v, g = t, b = p;
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  auto to_byte = [](double x) { return static_cast<std::uint8_t>(std::lround(x * 255.0)); };
  return {to_byte(r), to_byte(g), to_byte(b)};
}

Mesh export_mesh(const PlaneAnnotation& annotation, const CameraIntrinsics& camera) {
  Mesh mesh;
  if (annotation.planes.empty()) return mesh;
  camera.validate();
  const int width = camera.width;
  const int height = camera.height;
  const auto w = static_cast<std::uint32_t>(width);
  std::vector<std::uint32_t> vertex_of(camera.pixel_count(), kNoVertex);

  for (std::size_t k = 0; k < annotation.planes.size(); ++k) {
    const PlaneInstance& instance = annotation.planes[k];
    const auto color = plane_color(k);
    for (std::uint32_t i : instance.mask.indices) {
      if (i >= vertex_of.size()) {
        throw Error(ErrorKind::kConfiguration, "plane mask lies outside the image");
      }
      const Eigen::Vector3d ray = camera.ray(i % w, i / w);
      const double z = instance.plane.depth_along(ray);
      if (!(z > 0.0) || !std::isfinite(z)) continue;
      vertex_of[i] = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.push_back(z * ray);
      mesh.colors.push_back(color);
    }
    for (std::uint32_t i : instance.mask.indices) {
      const int u = static_cast<int>(i % w);
      const int v = static_cast<int>(i / w);
      if (u + 1 >= width || v + 1 >= height) continue;
      const std::uint32_t a = vertex_of[i];
      const std::uint32_t b = vertex_of[i + 1];
      const std::uint32_t c = vertex_of[i + w];
      const std::uint32_t d = vertex_of[i + w + 1];
      if (a == kNoVertex || b == kNoVertex || c == kNoVertex || d == kNoVertex) continue;
      mesh.faces.push_back({a, c, b});
      mesh.faces.push_back({b, c, d});
    }
    for (std::uint32_t i : instance.mask.indices) vertex_of[i] = kNoVertex;
  }
  return mesh;
}

std::string to_ply(const Mesh& mesh) {
  std::string out;
  out.reserve(64 + mesh.vertices.size() * 48 + mesh.faces.size() * 24);
  out += "ply\nformat ascii 1.0\n";
  out += "element vertex ";
  append_number(out, static_cast<std::uint32_t>(mesh.vertices.size()));
  out +=
      "\nproperty double x\nproperty double y\nproperty double z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "element face ";
  append_number(out, static_cast<std::uint32_t>(mesh.faces.size()));
  out += "\nproperty list uchar uint vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& p = mesh.vertices[i];
    append_number(out, p.x());
    out += ' ';
    append_number(out, p.y());
    out += ' ';
    append_number(out, p.z());
    for (std::uint8_t c : mesh.colors[i]) {
      out += ' ';
      append_number(out, static_cast<std::uint32_t>(c));
    }
    out += '\n';
  }
  for (const auto& f : mesh.faces) {
    out += '3';
    for (std::uint32_t idx : f) {
      out += ' ';
      append_number(out, idx);
    }
    out += '\n';
  }
  return out;
}

void write_ply(const Mesh& mesh, const std::string& path) {
  write_text_file(path, to_ply(mesh));
}

}  // namespace planekit
