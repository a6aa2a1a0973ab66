#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "planekit/annotation.hpp"

namespace planekit {

struct Mesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<std::uint8_t, 3>> colors;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

// Triangulates each plane's mask at planar depth. Vertices are emitted in
// row-major mask order, planes in annotation order.
Mesh export_mesh(const PlaneAnnotation& annotation, const CameraIntrinsics& camera);

std::array<std::uint8_t, 3> plane_color(std::size_t plane_index);

std::string to_ply(const Mesh& mesh);
void write_ply(const Mesh& mesh, const std::string& path);

}  // namespace planekit
