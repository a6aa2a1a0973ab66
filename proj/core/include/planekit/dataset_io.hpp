#pragma once

#include <string>
#include <vector>

#include "planekit/annotation.hpp"
#include "planekit/exemplars.hpp"
#include "planekit/geometry.hpp"
#include "planekit/losses.hpp"

namespace planekit {

// Integer depth coding for 16-bit PNGs.
struct DepthEncoding {
  double scale = 1000.0;  // units per meter
  std::uint16_t invalid_value = 0;

  void validate() const;
};

// Raw float32 depth: 8-byte magic, little-endian uint32 width and height,
// then width·height little-endian float32 meters, row-major. Zero or
// non-finite values are invalid.
inline constexpr char kFloatDepthMagic[8] = {'P', 'K', 'D', 'E', 'P', 'T', 'H', '1'};
inline constexpr const char* kFloatDepthExtension = ".fdm";

// Dispatches on content: PNG signature or float32 magic.
DepthMap load_depth(const std::string& path, const DepthEncoding& encoding = {});
// ".png" writes 16-bit PNG; anything else writes the float32 format.
void save_depth(const DepthMap& depth, const std::string& path,
                const DepthEncoding& encoding = {});

struct LoadedSegmentation {
  InstanceSegmentation segmentation;
  std::vector<std::string> warnings;
};

// Indexed 8/16-bit PNG ids plus a JSON object {"<id>": "<class>"}.
LoadedSegmentation load_segmentation(const std::string& mask_path, const std::string& table_path);
void save_segmentation(const InstanceSegmentation& segmentation, const std::string& mask_path,
                       const std::string& table_path);

// Annotation directory: planes.png (16-bit labels, 0 = non-planar, k = plane
// k) and planes.json (camera, per-plane records sorted by id).
inline constexpr const char* kAnnotationRaster = "planes.png";
inline constexpr const char* kAnnotationSidecar = "planes.json";

void save_annotation(const PlaneAnnotation& annotation, const std::string& dir);
PlaneAnnotation load_annotation(const std::string& dir);

struct LoadedIntrinsics {
  CameraIntrinsics camera;
  std::vector<std::string> warnings;
};

LoadedIntrinsics load_intrinsics(const std::string& path);
void save_intrinsics(const CameraIntrinsics& camera, const std::string& path);

// Heuristic resolution checks (principal point far from the center, focal
// aspect far from 1) that usually mean intrinsics were not rescaled along
// with the image.
std::vector<std::string> intrinsics_consistency_warnings(const CameraIntrinsics& camera);
CameraIntrinsics scale_intrinsics(const CameraIntrinsics& camera, double factor);

void save_exemplars(const ExemplarSet& exemplars, const std::string& path);
ExemplarSet load_exemplars(const std::string& path);

// JSON prediction dump; see docs/formats.md.
PredictionSet load_predictions(const std::string& path);
void save_predictions(const PredictionSet& predictions, const std::string& path);

void save_targets(const std::vector<PlaneTarget>& targets, const std::string& path);
std::vector<PlaneTarget> load_targets(const std::string& path);

// Writes `contents` to `path` atomically enough for batch use (temp + rename).
void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace planekit
