#include "planekit/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "planekit/error.hpp"
#include "planekit/png_io.hpp"

namespace planekit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSidecarVersion = 1;

std::string read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kFormat, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::kFormat, "cannot read " + path);
  return buffer.str();
}

json parse_json(const std::string& path, ErrorKind kind) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(kind, path + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Runs `body`, turning JSON access errors into Error(kind).
template <typename F>
auto with_json_errors(const std::string& path, ErrorKind kind, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw Error(kind, path + ": " + e.what());
  }
}

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw json::type_error::create(302, "expected an array of 3 numbers", &j);
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json camera_to_json(const CameraIntrinsics& c) {
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy},
          {"width", c.width}, {"height", c.height}};
}

CameraIntrinsics camera_from_json(const json& j) {
  CameraIntrinsics c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  return c;
}

std::uint32_t read_le32(const char* p) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(p[b]);
  return v;
}

void write_le32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

DepthMap load_float_depth(const std::string& path, const std::string& bytes) {
  constexpr std::size_t kHeader = sizeof(kFloatDepthMagic) + 8;
  if (bytes.size() < kHeader) throw Error(ErrorKind::kFormat, path + ": truncated depth header");
  const std::uint32_t w = read_le32(bytes.data() + 8);
  const std::uint32_t h = read_le32(bytes.data() + 12);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
    throw Error(ErrorKind::kFormat, path + ": implausible depth dimensions");
  }
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if (bytes.size() != kHeader + 4 * count) {
    throw Error(ErrorKind::kFormat, path + ": depth payload size does not match dimensions");
  }
  DepthMap depth(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < count; ++i) {
    const float z = std::bit_cast<float>(read_le32(bytes.data() + kHeader + 4 * i));
    if (std::isfinite(z) && z != 0.0f) depth.set(i, static_cast<double>(z));
  }
  return depth;
}

DepthMap load_png_depth(const std::string& path, const DepthEncoding& encoding) {
  const GrayImage image = read_png_gray(path);
  if (image.bit_depth != 16) {
    throw Error(ErrorKind::kFormat, path + ": depth PNG must be 16-bit");
  }
  DepthMap depth(image.pixels.width(), image.pixels.height());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const std::uint16_t raw = image.pixels[i];
    if (raw != encoding.invalid_value) depth.set(i, static_cast<double>(raw) / encoding.scale);
  }
  return depth;
}

bool has_extension(const std::string& path, const char* ext) {
  std::string actual = fs::path(path).extension().string();
  for (char& c : actual) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return actual == ext;
}

void write_binary_file(const std::string& path, const std::string& contents) {
  write_text_file(path, contents);
}

}  // namespace

void DepthEncoding::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::kConfiguration, "depth scale must be positive");
  }
}

DepthMap load_depth(const std::string& path, const DepthEncoding& encoding) {
  encoding.validate();
  const std::string bytes = read_binary(path);
  static constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return load_png_depth(path, encoding);
  }
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kFloatDepthMagic, 8) == 0) {
    return load_float_depth(path, bytes);
  }
  throw Error(ErrorKind::kFormat, path + ": neither a PNG nor a float depth raster");
}

void save_depth(const DepthMap& depth, const std::string& path, const DepthEncoding& encoding) {
  encoding.validate();
  if (has_extension(path, ".png")) {
    Raster<std::uint16_t> raw(depth.width(), depth.height(), encoding.invalid_value);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!depth.is_valid(i)) continue;
      const double scaled = std::round(depth.values[i] * encoding.scale);
      if (!(scaled >= 0.0 && scaled <= 65535.0) || scaled == encoding.invalid_value) {
        throw Error(ErrorKind::kFormat, path + ": depth not representable at this scale");
      }
      raw[i] = static_cast<std::uint16_t>(scaled);
    }
    write_png_gray16(path, raw);
    return;
  }
  std::string bytes(kFloatDepthMagic, sizeof(kFloatDepthMagic));
  write_le32(bytes, static_cast<std::uint32_t>(depth.width()));
  write_le32(bytes, static_cast<std::uint32_t>(depth.height()));
  bytes.reserve(bytes.size() + 4 * depth.values.size());
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    float z = 0.0f;
    if (depth.is_valid(i)) {
      z = static_cast<float>(depth.values[i]);
      if (!std::isfinite(z) || z == 0.0f) {
        throw Error(ErrorKind::kFormat, path + ": depth not representable as float32");
      }
    }
    write_le32(bytes, std::bit_cast<std::uint32_t>(z));
  }
  write_binary_file(path, bytes);
}

LoadedSegmentation load_segmentation(const std::string& mask_path, const std::string& table_path) {
  const GrayImage image = read_png_gray(mask_path);
  LoadedSegmentation out;
  out.segmentation.ids = Raster<std::int32_t>(image.pixels.width(), image.pixels.height());
  std::set<std::int32_t> present;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    out.segmentation.ids[i] = image.pixels[i];
    if (image.pixels[i] != 0) present.insert(image.pixels[i]);
  }
  if (!table_path.empty()) {
    const json table = parse_json(table_path, ErrorKind::kFormat);
    if (!table.is_object()) {
      throw Error(ErrorKind::kFormat, table_path + ": class table must be a JSON object");
    }
    for (const auto& [key, value] : table.items()) {
      std::int32_t id = 0;
      std::size_t used = 0;
      try {
        id = static_cast<std::int32_t>(std::stol(key, &used));
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != key.size() || key.empty() || id < 0) {
        throw Error(ErrorKind::kFormat, table_path + ": instance id '" + key + "' is not a number");
      }
      if (!value.is_string()) {
        throw Error(ErrorKind::kFormat, table_path + ": class of " + key + " must be a string");
      }
      out.segmentation.classes[id] = value.get<std::string>();
    }
  }
  for (std::int32_t id : present) {
    if (!out.segmentation.classes.contains(id)) {
      out.warnings.push_back("instance " + std::to_string(id) +
                             " has no class entry; using \"" + kDefaultClass + "\"");
    }
  }
  return out;
}

void save_segmentation(const InstanceSegmentation& segmentation, const std::string& mask_path,
                       const std::string& table_path) {
  const Raster<std::int32_t>& ids = segmentation.ids;
  Raster<std::uint16_t> raw(ids.width(), ids.height());
  std::int32_t max_id = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] > 65535) {
      throw Error(ErrorKind::kFormat, mask_path + ": instance ids must fit in 16 bits");
    }
    raw[i] = static_cast<std::uint16_t>(ids[i]);
    max_id = std::max(max_id, ids[i]);
  }
  if (max_id > 255) {
    write_png_gray16(mask_path, raw);
  } else {
    write_png_gray8(mask_path, raw);
  }
  json table = json::object();
  for (const auto& [id, name] : segmentation.classes) table[std::to_string(id)] = name;
  write_text_file(table_path, dump(table));
}

void save_annotation(const PlaneAnnotation& annotation, const std::string& dir) {
  if (annotation.planes.size() > 65535) {
    throw Error(ErrorKind::kFormat, "annotation has more planes than a 16-bit raster can label");
  }
  const Raster<std::int32_t> labels = label_raster(annotation);
  Raster<std::uint16_t> raw(labels.width(), labels.height());
  for (std::size_t i = 0; i < labels.size(); ++i) raw[i] = static_cast<std::uint16_t>(labels[i]);

  json planes = json::array();
  for (std::size_t k = 0; k < annotation.planes.size(); ++k) {
    const PlaneInstance& p = annotation.planes[k];
    planes.push_back({{"id", k + 1},
                      {"normal", vec3_to_json(p.plane.normal())},
                      {"offset", p.plane.offset()},
                      {"pixel_count", p.mask.size()},
                      {"inlier_count", p.inlier_count},
                      {"mean_fit_error", p.mean_fit_error},
                      {"mean_depth", p.mean_depth},
                      {"instance_id", p.instance_id},
                      {"semantic_class", p.semantic_class}});
  }
  const json sidecar = {{"version", kSidecarVersion},
                        {"camera", camera_to_json(annotation.camera)},
                        {"planes", planes},
                        {"underfilled_instances", annotation.underfilled_instances}};

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kFormat, "cannot create " + dir + ": " + ec.message());
  write_png_gray16((fs::path(dir) / kAnnotationRaster).string(), raw);
  write_text_file((fs::path(dir) / kAnnotationSidecar).string(), dump(sidecar));
}

PlaneAnnotation load_annotation(const std::string& dir) {
  const std::string raster_path = (fs::path(dir) / kAnnotationRaster).string();
  const std::string sidecar_path = (fs::path(dir) / kAnnotationSidecar).string();
  const json sidecar = parse_json(sidecar_path, ErrorKind::kFormat);
  const GrayImage image = read_png_gray(raster_path);

  PlaneAnnotation annotation;
  std::vector<std::size_t> pixel_counts;
  with_json_errors(sidecar_path, ErrorKind::kFormat, [&] {
    if (sidecar.at("version").get<int>() != kSidecarVersion) {
      throw Error(ErrorKind::kFormat, sidecar_path + ": unsupported sidecar version");
    }
    annotation.camera = camera_from_json(sidecar.at("camera"));
    const json& planes = sidecar.at("planes");
    if (!planes.is_array()) throw Error(ErrorKind::kFormat, sidecar_path + ": planes must be a list");
    for (std::size_t k = 0; k < planes.size(); ++k) {
      const json& entry = planes[k];
      if (entry.at("id").get<std::size_t>() != k + 1) {
        throw Error(ErrorKind::kFormat, sidecar_path + ": plane ids must be 1..N in order");
      }
      PlaneInstance p;
      try {
        p.plane = Plane::from_canonical(vec3_from_json(entry.at("normal")),
                                        entry.at("offset").get<double>());
      } catch (const Error& e) {
        throw Error(ErrorKind::kFormat, sidecar_path + ": plane " + std::to_string(k + 1) + ": " +
                                            e.what());
      }
      p.inlier_count = entry.at("inlier_count").get<std::size_t>();
      p.mean_fit_error = entry.at("mean_fit_error").get<double>();
      p.mean_depth = entry.at("mean_depth").get<double>();
      p.instance_id = entry.at("instance_id").get<std::int32_t>();
      p.semantic_class = entry.at("semantic_class").get<std::string>();
      pixel_counts.push_back(entry.at("pixel_count").get<std::size_t>());
      annotation.planes.push_back(std::move(p));
    }
    annotation.underfilled_instances =
        sidecar.at("underfilled_instances").get<std::vector<std::int32_t>>();
  });

  if (image.pixels.width() != annotation.camera.width ||
      image.pixels.height() != annotation.camera.height) {
    throw Error(ErrorKind::kFormat, dir + ": raster size does not match the sidecar camera");
  }
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const std::uint16_t label = image.pixels[i];
    if (label == 0) continue;
    if (label > annotation.planes.size()) {
      throw Error(ErrorKind::kFormat,
                  dir + ": raster label " + std::to_string(label) + " has no sidecar entry");
    }
    annotation.planes[label - 1].mask.indices.push_back(static_cast<std::uint32_t>(i));
  }
  for (std::size_t k = 0; k < annotation.planes.size(); ++k) {
    if (annotation.planes[k].mask.size() != pixel_counts[k]) {
      throw Error(ErrorKind::kFormat, dir + ": plane " + std::to_string(k + 1) +
                                          " pixel count disagrees with the raster");
    }
  }
  return annotation;
}

LoadedIntrinsics load_intrinsics(const std::string& path) {
  const json j = parse_json(path, ErrorKind::kConfiguration);
  LoadedIntrinsics out;
  out.camera = with_json_errors(path, ErrorKind::kConfiguration, [&] { return camera_from_json(j); });
  out.camera.validate();
  out.warnings = intrinsics_consistency_warnings(out.camera);
  return out;
}

void save_intrinsics(const CameraIntrinsics& camera, const std::string& path) {
  camera.validate();
  write_text_file(path, dump(camera_to_json(camera)));
}

std::vector<std::string> intrinsics_consistency_warnings(const CameraIntrinsics& camera) {
  std::vector<std::string> warnings;
  const double center_u = 0.5 * (camera.width - 1);
  const double center_v = 0.5 * (camera.height - 1);
  if (std::abs(camera.cx - center_u) > 0.2 * camera.width ||
      std::abs(camera.cy - center_v) > 0.2 * camera.height) {
    warnings.push_back("principal point is far from the image center; intrinsics may belong to "
                       "a different resolution");
  }
  const double aspect = camera.fx / camera.fy;
  if (aspect > 1.5 || aspect < 1.0 / 1.5) {
    warnings.push_back("fx/fy differ by more than 50%; intrinsics may have been scaled along "
                       "one axis only");
  }
  return warnings;
}

CameraIntrinsics scale_intrinsics(const CameraIntrinsics& camera, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorKind::kConfiguration, "scale factor must be positive");
  }
  CameraIntrinsics out = camera;
  out.fx *= factor;
  out.fy *= factor;
  // Pixel centers sit at integer coordinates, so the principal point scales
  // about −0.5.
  out.cx = (camera.cx + 0.5) * factor - 0.5;
  out.cy = (camera.cy + 0.5) * factor - 0.5;
  out.width = static_cast<int>(std::lround(camera.width * factor));
  out.height = static_cast<int>(std::lround(camera.height * factor));
  return out;
}

void save_exemplars(const ExemplarSet& exemplars, const std::string& path) {
  json normals = json::array();
  for (const auto& n : exemplars.normals()) normals.push_back(vec3_to_json(n));
  const json j = {{"normals", normals},
                  {"offsets", exemplars.offsets()},
                  {"split_threshold", exemplars.split_threshold()},
                  {"seed", exemplars.seed()},
                  {"near_group_size", exemplars.provenance.near_group_size},
                  {"far_group_size", exemplars.provenance.far_group_size}};
  write_text_file(path, dump(j));
}

ExemplarSet load_exemplars(const std::string& path) {
  const json j = parse_json(path, ErrorKind::kFormat);
  return with_json_errors(path, ErrorKind::kFormat, [&] {
    std::vector<Eigen::Vector3d> normals;
    for (const json& n : j.at("normals")) normals.push_back(vec3_from_json(n));
    ExemplarSet set(std::move(normals), j.at("offsets").get<std::vector<double>>(),
                    j.at("split_threshold").get<double>(), j.at("seed").get<std::uint64_t>());
    set.provenance.near_group_size = j.value("near_group_size", std::size_t{0});
    set.provenance.far_group_size = j.value("far_group_size", std::size_t{0});
    return set;
  });
}

PredictionSet load_predictions(const std::string& path) {
  const json j = parse_json(path, ErrorKind::kFormat);
  return with_json_errors(path, ErrorKind::kFormat, [&] {
    PredictionSet set;
    set.width = j.at("width").get<int>();
    set.height = j.at("height").get<int>();
    for (const json& q : j.at("queries")) {
      QueryPrediction query;
      query.plane_prob = q.at("plane_prob").get<double>();
      query.mask_logits = q.at("mask_logits").get<std::vector<double>>();
      query.normal_class_logits = q.at("normal_class_logits").get<std::vector<double>>();
      for (const json& r : q.at("normal_residuals")) query.normal_residuals.push_back(vec3_from_json(r));
      query.offset_class_logits = q.at("offset_class_logits").get<std::vector<double>>();
      query.offset_residuals = q.at("offset_residuals").get<std::vector<double>>();
      set.queries.push_back(std::move(query));
    }
    if (j.contains("pixel_depth")) set.pixel_depth = j.at("pixel_depth").get<std::vector<double>>();
    if (j.contains("pixel_normals")) {
      std::vector<Eigen::Vector3d> normals;
      for (const json& n : j.at("pixel_normals")) normals.push_back(vec3_from_json(n));
      set.pixel_normals = std::move(normals);
    }
    return set;
  });
}

void save_predictions(const PredictionSet& predictions, const std::string& path) {
  json queries = json::array();
  for (const QueryPrediction& q : predictions.queries) {
    json residuals = json::array();
    for (const auto& r : q.normal_residuals) residuals.push_back(vec3_to_json(r));
    queries.push_back({{"plane_prob", q.plane_prob},
                       {"mask_logits", q.mask_logits},
                       {"normal_class_logits", q.normal_class_logits},
                       {"normal_residuals", residuals},
                       {"offset_class_logits", q.offset_class_logits},
                       {"offset_residuals", q.offset_residuals}});
  }
  json j = {{"width", predictions.width}, {"height", predictions.height}, {"queries", queries}};
  if (predictions.pixel_depth) j["pixel_depth"] = *predictions.pixel_depth;
  if (predictions.pixel_normals) {
    json normals = json::array();
    for (const auto& n : *predictions.pixel_normals) normals.push_back(vec3_to_json(n));
    j["pixel_normals"] = normals;
  }
  write_text_file(path, dump(j));
}

void save_targets(const std::vector<PlaneTarget>& targets, const std::string& path) {
  json list = json::array();
  for (const PlaneTarget& t : targets) {
    list.push_back({{"normal_class", t.normal_class},
                    {"normal_residual", vec3_to_json(t.normal_residual)},
                    {"offset_class", t.offset_class},
                    {"offset_residual", t.offset_residual}});
  }
  write_text_file(path, dump(json{{"targets", list}}));
}

std::vector<PlaneTarget> load_targets(const std::string& path) {
  const json j = parse_json(path, ErrorKind::kFormat);
  return with_json_errors(path, ErrorKind::kFormat, [&] {
    std::vector<PlaneTarget> targets;
    for (const json& t : j.at("targets")) {
      PlaneTarget target;
      target.normal_class = t.at("normal_class").get<int>();
      target.normal_residual = vec3_from_json(t.at("normal_residual"));
      target.offset_class = t.at("offset_class").get<int>();
      target.offset_residual = t.at("offset_residual").get<double>();
      targets.push_back(target);
    }
    return targets;
  });
}

void write_text_file(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw Error(ErrorKind::kFormat, "cannot create " + target.parent_path().string());
  }
  const std::string temp = path + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kFormat, "cannot write " + temp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::kFormat, "cannot write " + temp);
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) throw Error(ErrorKind::kFormat, "cannot rename " + temp + ": " + ec.message());
}

std::string read_text_file(const std::string& path) { return read_binary(path); }

}  // namespace planekit
