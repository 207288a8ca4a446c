#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cao/error.hpp"

namespace cao {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class CameraModel { Pinhole, SimpleRadial, Radial };

inline const char* camera_model_name(CameraModel model) {
  switch (model) {
    case CameraModel::Pinhole: return "PINHOLE";
    case CameraModel::SimpleRadial: return "SIMPLE_RADIAL";
    case CameraModel::Radial: return "RADIAL";
  }
  return "?";
}

inline std::optional<CameraModel> camera_model_from_name(std::string_view name) {
  if (name == "PINHOLE") return CameraModel::Pinhole;
  if (name == "SIMPLE_RADIAL") return CameraModel::SimpleRadial;
  if (name == "RADIAL") return CameraModel::Radial;
  return std::nullopt;
}

inline std::size_t camera_model_param_count(CameraModel model) {
  switch (model) {
    case CameraModel::Pinhole: return 4;       // fx fy cx cy
    case CameraModel::SimpleRadial: return 4;  // f cx cy k
    case CameraModel::Radial: return 5;        // f cx cy k1 k2
  }
  return 0;
}

struct CameraIntrinsics {
  int camera_id = 0;
  CameraModel model = CameraModel::Pinhole;
  int width = 0;
  int height = 0;
  std::vector<double> params;

  bool operator==(const CameraIntrinsics&) const = default;
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  std::optional<std::int64_t> point3d_id;

  bool operator==(const Keypoint&) const = default;
};

struct PosedImage {
  int image_id = 0;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();  // world -> camera
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int camera_id = 0;
  std::string name;
  std::vector<Keypoint> keypoints;

  bool operator==(const PosedImage& o) const {
    return image_id == o.image_id && rotation.coeffs() == o.rotation.coeffs() &&
           translation == o.translation && camera_id == o.camera_id &&
           name == o.name && keypoints == o.keypoints;
  }
};

struct TrackElement {
  int image_id = 0;
  int keypoint_index = 0;

  bool operator==(const TrackElement&) const = default;
};

struct ScenePoint {
  std::int64_t point3d_id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::array<std::uint8_t, 3> color = {0, 0, 0};
  double reproj_error = 0.0;
  std::vector<TrackElement> track;

  bool operator==(const ScenePoint& o) const {
    return point3d_id == o.point3d_id && position == o.position &&
           color == o.color && reproj_error == o.reproj_error && track == o.track;
  }
};

struct ReconstructionBundle {
  std::map<int, CameraIntrinsics> cameras;
  std::map<int, PosedImage> images;
  std::map<std::int64_t, ScenePoint> points;
  int total_input_images = 0;  // images offered to SfM, including unregistered

  bool operator==(const ReconstructionBundle&) const = default;
};

enum class Label : std::uint8_t {
  Unknown = 0,
  Trachea = 1,
  Tumor = 2,
  Fiducial = 3,
  Char = 4,
};

inline const char* label_name(Label label) {
  switch (label) {
    case Label::Unknown: return "unknown";
    case Label::Trachea: return "trachea";
    case Label::Tumor: return "tumor";
    case Label::Fiducial: return "fiducial";
    case Label::Char: return "char";
  }
  return "?";
}

// Fixed palette, stable for golden-file comparisons.
inline std::array<std::uint8_t, 3> label_color(Label label) {
  switch (label) {
    case Label::Unknown: return {128, 128, 128};   // gray
    case Label::Trachea: return {255, 170, 190};   // pink
    case Label::Tumor: return {0, 180, 60};        // green
    case Label::Fiducial: return {40, 90, 255};    // blue
    case Label::Char: return {20, 20, 20};         // black
  }
  return {0, 0, 0};
}

struct LabeledPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Label label = Label::Unknown;
  double confidence = 0.0;
  std::optional<std::int64_t> source_id;

  bool operator==(const LabeledPoint& o) const {
    return position == o.position && label == o.label &&
           confidence == o.confidence && source_id == o.source_id;
  }
};

struct LabeledCloud {
  std::vector<LabeledPoint> points;

  bool operator==(const LabeledCloud&) const = default;
};

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] inline void malformed(const std::string& file, std::size_t line_no,
                                   const std::string& what) {
  throw Error(ErrorCode::MalformedLine,
              file + ":" + std::to_string(line_no) + ": " + what);
}

inline double parse_double(std::string_view tok, const std::string& file,
                           std::size_t line_no) {
  double value = 0.0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    malformed(file, line_no, "expected number, got '" + std::string(tok) + "'");
  return value;
}

template <typename Int>
inline Int parse_int(std::string_view tok, const std::string& file,
                     std::size_t line_no) {
  Int value = 0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    malformed(file, line_no, "expected integer, got '" + std::string(tok) + "'");
  return value;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::MissingFile, "missing file: " + path.string());
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bundle validation
// ---------------------------------------------------------------------------

// Referential-integrity check run on every load: camera references, keypoint
// -> point references, and bidirectional track <-> keypoint consistency.
inline void validate_bundle(const ReconstructionBundle& bundle) {
  for (const auto& [image_id, image] : bundle.images) {
    if (!bundle.cameras.count(image.camera_id))
      throw Error(ErrorCode::BrokenReference,
                  "image " + std::to_string(image_id) + " references camera " +
                      std::to_string(image.camera_id) + " absent from cameras");
  }

  struct PairHash {
    std::size_t operator()(const std::pair<int, int>& p) const {
      return std::hash<std::uint64_t>()(
          (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.first)) << 32) |
          static_cast<std::uint32_t>(p.second));
    }
  };
  std::unordered_map<std::pair<int, int>, std::int64_t, PairHash> track_entries;
  for (const auto& [point_id, point] : bundle.points) {
    for (const TrackElement& el : point.track) {
      auto image_it = bundle.images.find(el.image_id);
      if (image_it == bundle.images.end())
        throw Error(ErrorCode::BrokenReference,
                    "point " + std::to_string(point_id) + " track references image " +
                        std::to_string(el.image_id));
      const auto& keypoints = image_it->second.keypoints;
      if (el.keypoint_index < 0 ||
          static_cast<std::size_t>(el.keypoint_index) >= keypoints.size())
        throw Error(ErrorCode::BrokenReference,
                    "point " + std::to_string(point_id) + " track references keypoint " +
                        std::to_string(el.keypoint_index) + " of image " +
                        std::to_string(el.image_id) + " which does not exist");
      const auto& back_ref = keypoints[el.keypoint_index].point3d_id;
      if (!back_ref || *back_ref != point_id)
        throw Error(ErrorCode::BrokenReference,
                    "track of point " + std::to_string(point_id) +
                        " is not mirrored by keypoint " + std::to_string(el.keypoint_index) +
                        " of image " + std::to_string(el.image_id));
      track_entries.emplace(std::make_pair(el.image_id, el.keypoint_index), point_id);
    }
  }

  for (const auto& [image_id, image] : bundle.images) {
    for (std::size_t k = 0; k < image.keypoints.size(); ++k) {
      const auto& ref = image.keypoints[k].point3d_id;
      if (!ref) continue;
      if (!bundle.points.count(*ref))
        throw Error(ErrorCode::BrokenReference,
                    "image " + std::to_string(image_id) + " keypoint " + std::to_string(k) +
                        " references point " + std::to_string(*ref) + " absent from points");
      auto it = track_entries.find({image_id, static_cast<int>(k)});
      if (it == track_entries.end() || it->second != *ref)
        throw Error(ErrorCode::BrokenReference,
                    "keypoint " + std::to_string(k) + " of image " + std::to_string(image_id) +
                        " is not mirrored by the track of point " + std::to_string(*ref));
    }
  }
}

// ---------------------------------------------------------------------------
// COLMAP sparse text format
// ---------------------------------------------------------------------------

inline ReconstructionBundle read_bundle(const std::filesystem::path& dir_path,
                                        int total_input_images) {
  ReconstructionBundle bundle;

  const auto cameras_path = dir_path / "cameras.txt";
  const auto images_path = dir_path / "images.txt";
  const auto points_path = dir_path / "points3D.txt";

  {
    std::ifstream in = detail::open_input(cameras_path);
    const std::string fname = cameras_path.string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto text = detail::trim(line);
      if (text.empty() || text.front() == '#') continue;
      auto tok = detail::split_ws(text);
      if (tok.size() < 4) detail::malformed(fname, line_no, "camera line needs >= 4 fields");
      CameraIntrinsics cam;
      cam.camera_id = detail::parse_int<int>(tok[0], fname, line_no);
      auto model = camera_model_from_name(tok[1]);
      if (!model)
        throw Error(ErrorCode::UnknownCameraModel,
                    fname + ":" + std::to_string(line_no) + ": unknown camera model '" +
                        std::string(tok[1]) + "'");
      cam.model = *model;
      cam.width = detail::parse_int<int>(tok[2], fname, line_no);
      cam.height = detail::parse_int<int>(tok[3], fname, line_no);
      if (cam.width <= 0 || cam.height <= 0)
        detail::malformed(fname, line_no, "non-positive image dimensions");
      const std::size_t expected = camera_model_param_count(cam.model);
      if (tok.size() != 4 + expected)
        detail::malformed(fname, line_no,
                          std::string(camera_model_name(cam.model)) + " expects " +
                              std::to_string(expected) + " params, got " +
                              std::to_string(tok.size() - 4));
      for (std::size_t i = 4; i < tok.size(); ++i)
        cam.params.push_back(detail::parse_double(tok[i], fname, line_no));
      if (cam.params[0] <= 0.0 ||
          (cam.model == CameraModel::Pinhole && cam.params[1] <= 0.0))
        detail::malformed(fname, line_no, "non-positive focal length");
      if (!bundle.cameras.emplace(cam.camera_id, std::move(cam)).second)
        detail::malformed(fname, line_no, "duplicate camera id");
    }
  }

  {
    std::ifstream in = detail::open_input(images_path);
    const std::string fname = images_path.string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto text = detail::trim(line);
      if (text.empty() || text.front() == '#') continue;
      auto tok = detail::split_ws(text);
      if (tok.size() != 10)
        detail::malformed(fname, line_no, "image header line needs exactly 10 fields");
      PosedImage image;
      image.image_id = detail::parse_int<int>(tok[0], fname, line_no);
      const double qw = detail::parse_double(tok[1], fname, line_no);
      const double qx = detail::parse_double(tok[2], fname, line_no);
      const double qy = detail::parse_double(tok[3], fname, line_no);
      const double qz = detail::parse_double(tok[4], fname, line_no);
      image.rotation = Eigen::Quaterniond(qw, qx, qy, qz);
      const double norm = image.rotation.norm();
      if (std::abs(norm - 1.0) > 1e-3)
        detail::malformed(fname, line_no, "quaternion far from unit norm");
      // Keep exact stored values when already unit; renormalize mild drift.
      if (std::abs(norm - 1.0) > 1e-12) image.rotation.normalize();
      image.translation = Eigen::Vector3d(detail::parse_double(tok[5], fname, line_no),
                                          detail::parse_double(tok[6], fname, line_no),
                                          detail::parse_double(tok[7], fname, line_no));
      image.camera_id = detail::parse_int<int>(tok[8], fname, line_no);
      image.name = std::string(tok[9]);

      if (!std::getline(in, line))
        detail::malformed(fname, line_no, "missing keypoint line for image " +
                                              std::to_string(image.image_id));
      ++line_no;
      auto kp_text = detail::trim(line);
      if (!kp_text.empty() && kp_text.front() == '#')
        detail::malformed(fname, line_no, "keypoint line may not be a comment");
      auto kp_tok = detail::split_ws(kp_text);
      if (kp_tok.size() % 3 != 0)
        detail::malformed(fname, line_no, "keypoint line must hold X Y POINT3D_ID triples");
      image.keypoints.reserve(kp_tok.size() / 3);
      for (std::size_t i = 0; i < kp_tok.size(); i += 3) {
        Keypoint kp;
        kp.x = detail::parse_double(kp_tok[i], fname, line_no);
        kp.y = detail::parse_double(kp_tok[i + 1], fname, line_no);
        const auto id = detail::parse_int<std::int64_t>(kp_tok[i + 2], fname, line_no);
        if (id != -1) kp.point3d_id = id;  // -1 is the on-disk "no point" sentinel
        image.keypoints.push_back(kp);
      }
      if (!bundle.images.emplace(image.image_id, std::move(image)).second)
        detail::malformed(fname, line_no, "duplicate image id");
    }
  }

  {
    std::ifstream in = detail::open_input(points_path);
    const std::string fname = points_path.string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto text = detail::trim(line);
      if (text.empty() || text.front() == '#') continue;
      auto tok = detail::split_ws(text);
      if (tok.size() < 8 || (tok.size() - 8) % 2 != 0)
        detail::malformed(fname, line_no,
                          "point line needs ID X Y Z R G B ERROR plus (IMAGE_ID IDX) pairs");
      ScenePoint point;
      point.point3d_id = detail::parse_int<std::int64_t>(tok[0], fname, line_no);
      point.position = Eigen::Vector3d(detail::parse_double(tok[1], fname, line_no),
                                       detail::parse_double(tok[2], fname, line_no),
                                       detail::parse_double(tok[3], fname, line_no));
      for (int c = 0; c < 3; ++c) {
        const int v = detail::parse_int<int>(tok[4 + c], fname, line_no);
        if (v < 0 || v > 255) detail::malformed(fname, line_no, "color out of byte range");
        point.color[c] = static_cast<std::uint8_t>(v);
      }
      point.reproj_error = detail::parse_double(tok[7], fname, line_no);
      for (std::size_t i = 8; i < tok.size(); i += 2) {
        TrackElement el;
        el.image_id = detail::parse_int<int>(tok[i], fname, line_no);
        el.keypoint_index = detail::parse_int<int>(tok[i + 1], fname, line_no);
        point.track.push_back(el);
      }
      if (point.track.size() < 2)
        detail::malformed(fname, line_no, "triangulated point needs a track of length >= 2");
      if (!bundle.points.emplace(point.point3d_id, std::move(point)).second)
        detail::malformed(fname, line_no, "duplicate point id");
    }
  }

  if (total_input_images < static_cast<int>(bundle.images.size()))
    throw Error(ErrorCode::InvalidConfig,
                "total_input_images (" + std::to_string(total_input_images) +
                    ") below registered image count (" + std::to_string(bundle.images.size()) + ")");
  bundle.total_input_images = total_input_images;

  validate_bundle(bundle);
  return bundle;
}

inline void write_bundle(const ReconstructionBundle& bundle,
                         const std::filesystem::path& dir_path) {
  std::filesystem::create_directories(dir_path);

  {
    std::ofstream out = detail::open_output(dir_path / "cameras.txt");
    out.precision(17);
    out << "# Camera list with one line of data per camera:\n"
        << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
        << "# Number of cameras: " << bundle.cameras.size() << "\n";
    for (const auto& [id, cam] : bundle.cameras) {
      out << id << " " << camera_model_name(cam.model) << " " << cam.width << " "
          << cam.height;
      for (double p : cam.params) out << " " << p;
      out << "\n";
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed: cameras.txt");
  }

  {
    std::ofstream out = detail::open_output(dir_path / "images.txt");
    out.precision(17);
    out << "# Image list with two lines of data per image:\n"
        << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
        << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n"
        << "# Number of images: " << bundle.images.size() << "\n";
    for (const auto& [id, image] : bundle.images) {
      out << id << " " << image.rotation.w() << " " << image.rotation.x() << " "
          << image.rotation.y() << " " << image.rotation.z() << " "
          << image.translation.x() << " " << image.translation.y() << " "
          << image.translation.z() << " " << image.camera_id << " " << image.name << "\n";
      bool first = true;
      for (const Keypoint& kp : image.keypoints) {
        if (!first) out << " ";
        first = false;
        out << kp.x << " " << kp.y << " " << (kp.point3d_id ? *kp.point3d_id : -1);
      }
      out << "\n";
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed: images.txt");
  }

  {
    std::ofstream out = detail::open_output(dir_path / "points3D.txt");
    out.precision(17);
    out << "# 3D point list with one line of data per point:\n"
        << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n"
        << "# Number of points: " << bundle.points.size() << "\n";
    for (const auto& [id, point] : bundle.points) {
      out << id << " " << point.position.x() << " " << point.position.y() << " "
          << point.position.z() << " " << int(point.color[0]) << " " << int(point.color[1])
          << " " << int(point.color[2]) << " " << point.reproj_error;
      for (const TrackElement& el : point.track)
        out << " " << el.image_id << " " << el.keypoint_index;
      out << "\n";
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed: points3D.txt");
  }
}

// ---------------------------------------------------------------------------
// ASCII PLY export for labeled clouds
// ---------------------------------------------------------------------------

inline void export_ply(const LabeledCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out = detail::open_output(path);
  out.precision(17);
  out << "ply\n"
      << "format ascii 1.0\n"
      << "comment labeled surgical scene cloud\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property double x\n"
      << "property double y\n"
      << "property double z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "property uchar label\n"
      << "end_header\n";
  for (const LabeledPoint& p : cloud.points) {
    const auto rgb = label_color(p.label);
    out << p.position.x() << " " << p.position.y() << " " << p.position.z() << " "
        << int(rgb[0]) << " " << int(rgb[1]) << " " << int(rgb[2]) << " "
        << int(static_cast<std::uint8_t>(p.label)) << "\n";
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

// Reads back clouds written by export_ply (ascii, x y z rgb label layout).
inline LabeledCloud import_ply(const std::filesystem::path& path) {
  std::ifstream in = detail::open_input(path);
  const std::string fname = path.string();
  std::string line;
  std::size_t line_no = 0;
  std::size_t vertex_count = 0;
  bool in_header = true;
  std::vector<std::string> properties;
  while (in_header && std::getline(in, line)) {
    ++line_no;
    auto text = detail::trim(line);
    auto tok = detail::split_ws(text);
    if (line_no == 1 && text != "ply") detail::malformed(fname, line_no, "not a PLY file");
    if (tok.empty()) continue;
    if (tok[0] == "element") {
      if (tok.size() != 3 || tok[1] != "vertex")
        detail::malformed(fname, line_no, "only vertex elements are supported");
      vertex_count = detail::parse_int<std::size_t>(tok[2], fname, line_no);
    } else if (tok[0] == "property") {
      if (tok.size() == 3) properties.emplace_back(tok[2]);
    } else if (tok[0] == "end_header") {
      in_header = false;
    }
  }
  if (in_header) detail::malformed(fname, line_no, "missing end_header");
  const std::vector<std::string> expected = {"x", "y", "z", "red", "green", "blue", "label"};
  if (properties != expected)
    detail::malformed(fname, line_no, "unsupported vertex layout");

  LabeledCloud cloud;
  cloud.points.reserve(vertex_count);
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (!std::getline(in, line)) detail::malformed(fname, line_no, "truncated vertex list");
    ++line_no;
    auto tok = detail::split_ws(detail::trim(line));
    if (tok.size() != 7) detail::malformed(fname, line_no, "vertex line needs 7 fields");
    LabeledPoint p;
    p.position = Eigen::Vector3d(detail::parse_double(tok[0], fname, line_no),
                                 detail::parse_double(tok[1], fname, line_no),
                                 detail::parse_double(tok[2], fname, line_no));
    const int code = detail::parse_int<int>(tok[6], fname, line_no);
    if (code < 0 || code > 4) detail::malformed(fname, line_no, "label code out of range");
    p.label = static_cast<Label>(code);
    p.confidence = (p.label == Label::Unknown) ? 0.0 : 1.0;
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace cao
