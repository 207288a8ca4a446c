#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cao/camera_models.hpp"
#include "cao/colmap_model.hpp"
#include "cao/error.hpp"
#include "cao/image.hpp"
#include "cao/registration.hpp"

namespace cao {

struct SceneNoise {
  double pixel_sigma = 0.0;     // px, added to stored keypoints
  double point_sigma = 0.0;     // mm, added to stored 3D positions
  double mask_flip_rate = 0.0;  // fraction of foreground mask pixels re-labeled
};

// Half-pipe trachea with an ellipsoid tumor bump and five cauterized
// fiducial dots, imaged by a camera ring. All lengths in mm (robot frame).
struct SceneSpec {
  double trachea_radius = 10.0;
  double trachea_length = 40.0;
  double half_angle_deg = 45.0;  // sampled band around the gutter bottom
  double trachea_spacing = 0.7;

  Eigen::Vector2d tumor_center{20.0, 0.0};
  double tumor_semi_x = 8.0;
  double tumor_semi_y = 4.0;
  double tumor_height = 5.0;  // ~50% of a 10 mm lumen
  double tumor_spacing = 0.55;

  // xy dot centers on the surface; layout keeps sorted centroid distances
  // well separated so distance-based correspondence stays stable under noise.
  std::array<Eigen::Vector2d, 5> fiducial_xy = {{{36.12, 2.41},
                                                 {14.94, -6.12},
                                                 {4.38, -2.03},
                                                 {34.10, -5.95},
                                                 {24.56, -6.07}}};
  double fiducial_radius = 0.8;
  double exclusion_gap = 0.8;  // unlabeled ring between regions

  int camera_count = 20;
  int unregistered_images = 0;  // offered to SfM but not reconstructed
  double ring_radius = 60.0;
  double ring_height = 120.0;
  int image_width = 545;
  int image_height = 545;
  double focal = 600.0;
  CameraModel camera_model = CameraModel::SimpleRadial;
  double k1 = -0.03;
  double k2 = 0.0;

  SceneNoise noise;
  std::uint64_t seed = 0;

  bool has_tumor() const {
    return tumor_semi_x > 0.0 && tumor_semi_y > 0.0 && tumor_height > 0.0;
  }
};

struct GroundTruth {
  SimilarityTransform recon_to_robot;  // true similarity, recon frame -> robot mm
  std::array<Eigen::Vector3d, 5> fiducial_centers_robot;
  LabeledCloud robot_cloud;                      // noiseless samples, robot frame
  std::map<std::int64_t, Label> bundle_labels;   // per reconstructed point id
  double surface_radius = 0.0;
  double surface_length = 0.0;
  Eigen::Vector2d tumor_center{0.0, 0.0};
  double tumor_semi_x = 0.0, tumor_semi_y = 0.0, tumor_height = 0.0;
  int total_input_images = 0;
};

namespace detail {

// Independent RNG streams so seed changes redraw noise without touching the
// deterministic geometry sampling (which uses no RNG at all).
inline constexpr std::uint64_t kStreamTransform = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kStreamPixels = 0xD1B54A32D192ED03ull;
inline constexpr std::uint64_t kStreamPoints = 0x94D049BB133111EBull;
inline constexpr std::uint64_t kStreamFlips = 0xBF58476D1CE4E5B9ull;

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::mt19937_64 rng(seed ^ stream);
  rng.discard(7);
  return rng;
}

inline void validate_spec(const SceneSpec& s) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (s.trachea_radius <= 0.0 || s.trachea_length <= 0.0) fail("trachea dimensions must be positive");
  if (s.half_angle_deg <= 0.0 || s.half_angle_deg >= 90.0) fail("half angle must be in (0, 90)");
  if (s.trachea_spacing <= 0.0 || s.tumor_spacing <= 0.0) fail("sample spacing must be positive");
  if (s.tumor_semi_x < 0.0 || s.tumor_semi_y < 0.0 || s.tumor_height < 0.0)
    fail("tumor semi-axes must be >= 0");
  if (s.fiducial_radius <= 0.0) fail("fiducial radius must be positive");
  if (s.camera_count < 2) fail("need at least 2 cameras");
  if (s.unregistered_images < 0) fail("unregistered image count must be >= 0");
  if (s.ring_radius <= 0.0 || s.ring_height <= 0.0) fail("camera ring must be above the scene");
  if (s.image_width <= 0 || s.image_height <= 0) fail("image dimensions must be positive");
  if (s.focal <= 0.0) fail("focal length must be positive");
  if (s.noise.pixel_sigma < 0.0 || s.noise.point_sigma < 0.0) fail("noise sigmas must be >= 0");
  if (s.noise.mask_flip_rate < 0.0 || s.noise.mask_flip_rate >= 1.0)
    fail("mask flip rate must be in [0, 1)");
}

}  // namespace detail

class SyntheticScene {
 public:
  explicit SyntheticScene(const SceneSpec& spec) : spec_(spec) {
    detail::validate_spec(spec_);
    build_geometry();
    build_cameras();
    build_bundle();
  }

  const SceneSpec& spec() const { return spec_; }
  const ReconstructionBundle& bundle() const { return bundle_; }
  const GroundTruth& truth() const { return truth_; }

  double surface_height(double y) const {
    const double r = spec_.trachea_radius;
    return r - std::sqrt(std::max(0.0, r * r - y * y));
  }

  // Label masks per registered image: ground-truth labels splatted at exact
  // projections (3x3, nearest-depth wins), then optional random re-labeling
  // of foreground pixels.
  std::map<int, MaskImage> render_masks() const {
    auto masks = splat_labels();
    if (spec_.noise.mask_flip_rate > 0.0) {
      auto rng = detail::stream_rng(spec_.seed, detail::kStreamFlips);
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      std::uniform_int_distribution<int> pick(0, 2);
      for (auto& [image_id, mask] : masks) {
        for (auto& code : mask.data) {
          if (code == kMaskBackground) continue;
          if (coin(rng) >= spec_.noise.mask_flip_rate) continue;
          int replacement = pick(rng);
          if (replacement >= code) ++replacement;  // uniform over the other 3 codes
          code = static_cast<std::uint8_t>(replacement);
        }
      }
    }
    return masks;
  }

  // Grayscale images for fiducial detection: flat tissue at 200 with dark
  // cautery dots at 30 wherever fiducial points project.
  std::map<int, GrayImage> render_gray_images() const {
    const auto masks = splat_labels();
    std::map<int, GrayImage> out;
    for (const auto& [image_id, mask] : masks) {
      GrayImage g(mask.width, mask.height, 200);
      for (std::size_t i = 0; i < mask.data.size(); ++i)
        if (mask.data[i] == kMaskFiducial) g.data[i] = 30;
      out.emplace(image_id, std::move(g));
    }
    return out;
  }

  void write(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_bundle(bundle_, dir / "sparse");

    const auto masks = render_masks();
    fs::create_directories(dir / "masks");
    std::map<std::string, fs::path> mask_entries;
    for (const auto& [image_id, mask] : masks) {
      const std::string stem = image_name(image_id);
      const std::string file = stem.substr(0, stem.size() - 4) + ".pgm";
      write_pgm(mask, dir / "masks" / file);
      mask_entries[stem] = file;
    }
    write_manifest(mask_entries, dir / "masks" / "manifest.txt");

    const auto gray = render_gray_images();
    fs::create_directories(dir / "gray");
    std::map<std::string, fs::path> gray_entries;
    for (const auto& [image_id, img] : gray) {
      const std::string stem = image_name(image_id);
      const std::string file = stem.substr(0, stem.size() - 4) + ".pgm";
      write_pgm(img, dir / "gray" / file);
      gray_entries[stem] = file;
    }
    write_manifest(gray_entries, dir / "gray" / "manifest.txt");

    std::vector<Eigen::Vector3d> tips(truth_.fiducial_centers_robot.begin(),
                                      truth_.fiducial_centers_robot.end());
    write_points_csv(tips, dir / "robot_touchpoints.csv", "idx,x_mm,y_mm,z_mm");

    nlohmann::json j;
    j["seed"] = spec_.seed;
    j["total_input_images"] = truth_.total_input_images;
    j["transform_recon_to_robot"] = to_json(truth_.recon_to_robot);
    nlohmann::json fids = nlohmann::json::array();
    for (const auto& f : truth_.fiducial_centers_robot) fids.push_back({f.x(), f.y(), f.z()});
    j["fiducial_centers_robot"] = fids;
    j["surface"] = {{"radius_mm", truth_.surface_radius},
                    {"length_mm", truth_.surface_length}};
    j["tumor"] = {{"center", {truth_.tumor_center.x(), truth_.tumor_center.y()}},
                  {"semi_x", truth_.tumor_semi_x},
                  {"semi_y", truth_.tumor_semi_y},
                  {"height", truth_.tumor_height}};
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& [id, label] : truth_.bundle_labels)
      labels.push_back({id, static_cast<int>(label)});
    j["bundle_labels"] = labels;
    std::ofstream out(dir / "ground_truth.json", std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write ground_truth.json");
    out << j.dump(2) << "\n";
  }

  static std::string image_name(int image_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%03d.png", image_id);
    return buf;
  }

 private:
  bool inside_tumor(double x, double y, double inflate) const {
    if (!spec_.has_tumor()) return false;
    const double ux = (x - spec_.tumor_center.x()) / (spec_.tumor_semi_x + inflate);
    const double uy = (y - spec_.tumor_center.y()) / (spec_.tumor_semi_y + inflate);
    return ux * ux + uy * uy < 1.0;
  }

  void build_geometry() {
    const double r = spec_.trachea_radius;
    const double theta_max = spec_.half_angle_deg * std::numbers::pi / 180.0;
    const double gap = spec_.exclusion_gap;

    auto push = [&](const Eigen::Vector3d& p, Label label) {
      LabeledPoint lp;
      lp.position = p;
      lp.label = label;
      lp.confidence = 1.0;
      lp.source_id = static_cast<std::int64_t>(truth_.robot_cloud.points.size());
      truth_.robot_cloud.points.push_back(lp);
    };

    // Trachea band, excluding the (inflated) tumor footprint and fiducial dots.
    const int nx = std::max(2, static_cast<int>(std::floor(spec_.trachea_length /
                                                           spec_.trachea_spacing)) + 1);
    const double arc = 2.0 * theta_max * r;
    const int nth = std::max(2, static_cast<int>(std::floor(arc / spec_.trachea_spacing)) + 1);
    for (int ix = 0; ix < nx; ++ix) {
      const double x = spec_.trachea_length * ix / (nx - 1);
      for (int it = 0; it < nth; ++it) {
        const double theta = -theta_max + 2.0 * theta_max * it / (nth - 1);
        const double y = r * std::sin(theta);
        const double z = r - r * std::cos(theta);
        if (inside_tumor(x, y, gap)) continue;
        bool near_fiducial = false;
        for (const auto& f : spec_.fiducial_xy) {
          const double dx = x - f.x(), dy = y - f.y();
          const double reach = spec_.fiducial_radius + gap;
          if (dx * dx + dy * dy < reach * reach) { near_fiducial = true; break; }
        }
        if (near_fiducial) continue;
        push({x, y, z}, Label::Trachea);
      }
    }

    // Tumor bump.
    if (spec_.has_tumor()) {
      const double ax = spec_.tumor_semi_x, ay = spec_.tumor_semi_y;
      const double cx = spec_.tumor_center.x(), cy = spec_.tumor_center.y();
      const int mx = std::max(2, static_cast<int>(std::floor(2.0 * ax / spec_.tumor_spacing)) + 1);
      const int my = std::max(2, static_cast<int>(std::floor(2.0 * ay / spec_.tumor_spacing)) + 1);
      for (int i = 0; i < mx; ++i) {
        const double x = cx - ax + 2.0 * ax * i / (mx - 1);
        for (int k = 0; k < my; ++k) {
          const double y = cy - ay + 2.0 * ay * k / (my - 1);
          const double ux = (x - cx) / ax, uy = (y - cy) / ay;
          const double u2 = ux * ux + uy * uy;
          if (u2 >= 1.0) continue;
          if (std::abs(y) > r * std::sin(theta_max)) continue;  // stay on the band
          const double z = surface_height(y) + spec_.tumor_height * std::sqrt(1.0 - u2);
          push({x, y, z}, Label::Tumor);
        }
      }
    }

    // Fiducial dots on the surface.
    for (std::size_t f = 0; f < spec_.fiducial_xy.size(); ++f) {
      const double cx = spec_.fiducial_xy[f].x(), cy = spec_.fiducial_xy[f].y();
      truth_.fiducial_centers_robot[f] = {cx, cy, surface_height(cy)};
      const double fr = spec_.fiducial_radius;
      const double step = fr / 3.0;
      const int m = static_cast<int>(std::floor(2.0 * fr / step)) + 1;
      for (int i = 0; i < m; ++i) {
        const double x = cx - fr + 2.0 * fr * i / (m - 1);
        for (int k = 0; k < m; ++k) {
          const double y = cy - fr + 2.0 * fr * k / (m - 1);
          const double dx = x - cx, dy = y - cy;
          if (dx * dx + dy * dy > fr * fr) continue;
          push({x, y, surface_height(y)}, Label::Fiducial);
        }
      }
    }

    truth_.surface_radius = spec_.trachea_radius;
    truth_.surface_length = spec_.trachea_length;
    truth_.tumor_center = spec_.tumor_center;
    truth_.tumor_semi_x = spec_.tumor_semi_x;
    truth_.tumor_semi_y = spec_.tumor_semi_y;
    truth_.tumor_height = spec_.tumor_height;
    truth_.total_input_images = spec_.camera_count + spec_.unregistered_images;

    // True similarity (recon -> robot) drawn from the seed's transform stream;
    // the recon frame is the robot frame seen through its inverse.
    auto rng = detail::stream_rng(spec_.seed, detail::kStreamTransform);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    std::uniform_real_distribution<double> scale_draw(0.5, 2.0);
    std::uniform_real_distribution<double> shift(-20.0, 20.0);
    truth_.recon_to_robot.scale = scale_draw(rng);
    truth_.recon_to_robot.rotation = q.toRotationMatrix();
    truth_.recon_to_robot.translation = {shift(rng), shift(rng), shift(rng)};
  }

  void build_cameras() {
    const Eigen::Vector3d target(spec_.trachea_length / 2.0, 0.0, 2.0);
    robot_poses_.clear();
    for (int i = 0; i < spec_.camera_count; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / spec_.camera_count;
      const Eigen::Vector3d pos = target + Eigen::Vector3d(spec_.ring_radius * std::cos(phi),
                                                           spec_.ring_radius * std::sin(phi),
                                                           spec_.ring_height);
      // Camera axes: x right, y down, z forward (toward the target).
      const Eigen::Vector3d forward = (target - pos).normalized();
      Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
      if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();
      right.normalize();
      const Eigen::Vector3d down = forward.cross(right);
      Eigen::Matrix3d world_to_cam;
      world_to_cam.row(0) = right;
      world_to_cam.row(1) = down;
      world_to_cam.row(2) = forward;

      PosedImage pose;
      pose.image_id = i + 1;
      pose.camera_id = 1;
      pose.name = image_name(i + 1);
      pose.rotation = Eigen::Quaterniond(world_to_cam);
      pose.rotation.normalize();
      pose.translation = -(pose.rotation * pos);
      robot_poses_.push_back(pose);
    }

    intrinsics_.camera_id = 1;
    intrinsics_.model = spec_.camera_model;
    intrinsics_.width = spec_.image_width;
    intrinsics_.height = spec_.image_height;
    const double cx = spec_.image_width / 2.0, cy = spec_.image_height / 2.0;
    switch (spec_.camera_model) {
      case CameraModel::Pinhole:
        intrinsics_.params = {spec_.focal, spec_.focal, cx, cy};
        break;
      case CameraModel::SimpleRadial:
        intrinsics_.params = {spec_.focal, cx, cy, spec_.k1};
        break;
      case CameraModel::Radial:
        intrinsics_.params = {spec_.focal, cx, cy, spec_.k1, spec_.k2};
        break;
    }
  }

  void build_bundle() {
    bundle_.cameras.emplace(intrinsics_.camera_id, intrinsics_);
    bundle_.total_input_images = truth_.total_input_images;

    const std::size_t n_points = truth_.robot_cloud.points.size();

    // Noiseless visibility and exact projections, per image.
    struct Obs {
      std::int64_t point_index;
      Pixel px;
    };
    std::vector<std::vector<Obs>> per_image(robot_poses_.size());
    for (std::size_t c = 0; c < robot_poses_.size(); ++c) {
      const PosedImage& pose = robot_poses_[c];
      per_image[c].reserve(n_points);
      for (std::size_t p = 0; p < n_points; ++p) {
        const auto px =
            project(intrinsics_, world_to_camera(pose, truth_.robot_cloud.points[p].position));
        if (!px) continue;
        const int xi = static_cast<int>(std::lround(px->u));
        const int yi = static_cast<int>(std::lround(px->v));
        if (xi < 0 || xi >= intrinsics_.width || yi < 0 || yi >= intrinsics_.height) continue;
        per_image[c].push_back({static_cast<std::int64_t>(p), *px});
      }
    }

    // Keypoint noise, drawn image-major then point-major.
    auto pixel_rng = detail::stream_rng(spec_.seed, detail::kStreamPixels);
    std::normal_distribution<double> pixel_noise(0.0, 1.0);

    std::vector<std::vector<TrackElement>> tracks(n_points);
    for (std::size_t c = 0; c < robot_poses_.size(); ++c) {
      PosedImage image = robot_poses_[c];  // robot-frame pose; re-posed below
      image.keypoints.reserve(per_image[c].size());
      for (const Obs& obs : per_image[c]) {
        Keypoint kp;
        kp.x = obs.px.u;
        kp.y = obs.px.v;
        if (spec_.noise.pixel_sigma > 0.0) {
          kp.x += spec_.noise.pixel_sigma * pixel_noise(pixel_rng);
          kp.y += spec_.noise.pixel_sigma * pixel_noise(pixel_rng);
        }
        kp.point3d_id = obs.point_index + 1;  // ids are 1-based
        tracks[obs.point_index].push_back(
            {image.image_id, static_cast<int>(image.keypoints.size())});
        image.keypoints.push_back(kp);
      }
      bundle_.images.emplace(image.image_id, std::move(image));
    }

    // Point positions: optional robot-frame noise, then mapped into the
    // reconstruction frame through the inverse of the true similarity.
    auto point_rng = detail::stream_rng(spec_.seed, detail::kStreamPoints);
    std::normal_distribution<double> point_noise(0.0, 1.0);
    const SimilarityTransform robot_to_recon = truth_.recon_to_robot.inverse();

    std::vector<Eigen::Vector3d> stored_robot(n_points);
    for (std::size_t p = 0; p < n_points; ++p) {
      Eigen::Vector3d pos = truth_.robot_cloud.points[p].position;
      if (spec_.noise.point_sigma > 0.0)
        pos += spec_.noise.point_sigma * Eigen::Vector3d(point_noise(point_rng),
                                                         point_noise(point_rng),
                                                         point_noise(point_rng));
      stored_robot[p] = pos;
    }

    // Points observed fewer than twice are not triangulable; drop them.
    for (std::size_t p = 0; p < n_points; ++p) {
      if (tracks[p].size() < 2) {
        for (const TrackElement& el : tracks[p])
          bundle_.images.at(el.image_id).keypoints[el.keypoint_index].point3d_id.reset();
        continue;
      }
      ScenePoint point;
      point.point3d_id = static_cast<std::int64_t>(p) + 1;
      point.position = robot_to_recon.apply(stored_robot[p]);
      point.color = label_color(truth_.robot_cloud.points[p].label);
      point.track = tracks[p];

      double err_sum = 0.0;
      for (const TrackElement& el : tracks[p]) {
        const PosedImage& robot_pose = robot_poses_[el.image_id - 1];
        const auto px = project(intrinsics_, world_to_camera(robot_pose, stored_robot[p]));
        const Keypoint& kp = bundle_.images.at(el.image_id).keypoints[el.keypoint_index];
        if (px) {
          const double du = px->u - kp.x, dv = px->v - kp.y;
          err_sum += std::sqrt(du * du + dv * dv);
        }
      }
      point.reproj_error = err_sum / static_cast<double>(tracks[p].size());

      truth_.bundle_labels[point.point3d_id] = truth_.robot_cloud.points[p].label;
      bundle_.points.emplace(point.point3d_id, std::move(point));
    }

    // Re-pose images into the reconstruction frame: R' = R_w * R_T,
    // t' = (R_w * t_T + t_w) / s, which reproduces the robot-frame pixels
    // because projection is scale-invariant along rays.
    const SimilarityTransform& T = truth_.recon_to_robot;
    for (auto& [image_id, image] : bundle_.images) {
      const PosedImage& robot_pose = robot_poses_[image_id - 1];
      const Eigen::Matrix3d R_w = robot_pose.rotation.toRotationMatrix();
      Eigen::Matrix3d R_recon = R_w * T.rotation;
      image.rotation = Eigen::Quaterniond(R_recon);
      image.rotation.normalize();
      image.translation = (R_w * T.translation + robot_pose.translation) / T.scale;
    }

    validate_bundle(bundle_);
  }

  std::map<int, MaskImage> splat_labels() const {
    std::map<int, MaskImage> masks;
    const double inf = std::numeric_limits<double>::infinity();
    for (const PosedImage& pose : robot_poses_) {
      MaskImage mask(intrinsics_.width, intrinsics_.height, kMaskBackground);
      std::vector<double> depth(mask.data.size(), inf);
      for (const LabeledPoint& lp : truth_.robot_cloud.points) {
        const Eigen::Vector3d p_cam = world_to_camera(pose, lp.position);
        const auto px = project(intrinsics_, p_cam);
        if (!px) continue;
        const int cx = static_cast<int>(std::lround(px->u));
        const int cy = static_cast<int>(std::lround(px->v));
        std::uint8_t code = kMaskBackground;
        switch (lp.label) {
          case Label::Trachea: code = kMaskTrachea; break;
          case Label::Tumor: code = kMaskTumor; break;
          case Label::Fiducial: code = kMaskFiducial; break;
          default: continue;
        }
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int x = cx + dx, y = cy + dy;
            if (!mask.in_bounds(x, y)) continue;
            const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
            if (p_cam.z() < depth[idx]) {
              depth[idx] = p_cam.z();
              mask.data[idx] = code;
            }
          }
        }
      }
      masks.emplace(pose.image_id, std::move(mask));
    }
    return masks;
  }

  SceneSpec spec_;
  ReconstructionBundle bundle_;
  GroundTruth truth_;
  std::vector<PosedImage> robot_poses_;  // poses in the robot frame
  CameraIntrinsics intrinsics_;
};

// Post-procedure scene: the tumor footprint is replaced by char-labeled
// points displaced cut_depth_error mm in z from the true surface; everything
// else stays healthy trachea. Robot frame, noiseless.
inline LabeledCloud generate_post_procedure(const SceneSpec& spec, double cut_depth_error) {
  detail::validate_spec(spec);
  const double r = spec.trachea_radius;
  const double theta_max = spec.half_angle_deg * std::numbers::pi / 180.0;

  LabeledCloud cloud;
  const int nx =
      std::max(2, static_cast<int>(std::floor(spec.trachea_length / spec.trachea_spacing)) + 1);
  const double arc = 2.0 * theta_max * r;
  const int nth = std::max(2, static_cast<int>(std::floor(arc / spec.trachea_spacing)) + 1);
  for (int ix = 0; ix < nx; ++ix) {
    const double x = spec.trachea_length * ix / (nx - 1);
    for (int it = 0; it < nth; ++it) {
      const double theta = -theta_max + 2.0 * theta_max * it / (nth - 1);
      const double y = r * std::sin(theta);
      const double z = r - r * std::cos(theta);
      LabeledPoint lp;
      lp.confidence = 1.0;
      bool charred = false;
      if (spec.has_tumor()) {
        const double ux = (x - spec.tumor_center.x()) / spec.tumor_semi_x;
        const double uy = (y - spec.tumor_center.y()) / spec.tumor_semi_y;
        charred = ux * ux + uy * uy < 1.0;
      }
      lp.position = {x, y, z + (charred ? cut_depth_error : 0.0)};
      lp.label = charred ? Label::Char : Label::Trachea;
      cloud.points.push_back(lp);
    }
  }
  return cloud;
}

}  // namespace cao
