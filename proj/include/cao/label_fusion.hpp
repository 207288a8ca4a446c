#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "cao/camera_models.hpp"
#include "cao/colmap_model.hpp"
#include "cao/error.hpp"
#include "cao/image.hpp"

namespace cao {

// Center-weighted vote: labels read near the image center are more reliable.
inline double vote_weight(double center_dist_px) {
  if (center_dist_px < 0.0)
    throw Error(ErrorCode::NegativeDistance, "center distance must be >= 0");
  return 1.0 / (1.0 + center_dist_px);
}

// Accumulated weight per mask code (0 background, 1 trachea, 2 tumor, 3 fiducial).
struct VoteTally {
  std::array<double, 4> weight = {0.0, 0.0, 0.0, 0.0};

  void add(std::uint8_t mask_code, double w) { weight[mask_code] += w; }
  double total() const { return weight[0] + weight[1] + weight[2] + weight[3]; }
};

struct FusionOptions {
  bool background_votes = true;  // background pixels vote (can win -> Unknown)
  int threads = 1;
};

namespace detail {

// Ties resolve conservatively toward flagging tumor tissue:
// tumor > fiducial > trachea > background.
inline constexpr std::array<std::uint8_t, 4> kTiePriority = {
    kMaskTumor, kMaskFiducial, kMaskTrachea, kMaskBackground};

inline LabeledPoint resolve_tally(const VoteTally& tally, const Eigen::Vector3d& position,
                                  std::optional<std::int64_t> source_id) {
  LabeledPoint out;
  out.position = position;
  out.source_id = source_id;
  const double total = tally.total();
  if (total <= 0.0) return out;  // no usable vote: Unknown, confidence 0

  std::uint8_t best = kMaskBackground;
  double best_weight = -1.0;
  for (std::uint8_t code : kTiePriority) {
    if (tally.weight[code] > best_weight) {
      best_weight = tally.weight[code];
      best = code;
    }
  }
  if (best == kMaskBackground) return out;  // background won: Unknown, confidence 0
  switch (best) {
    case kMaskTrachea: out.label = Label::Trachea; break;
    case kMaskTumor: out.label = Label::Tumor; break;
    case kMaskFiducial: out.label = Label::Fiducial; break;
    default: break;
  }
  out.confidence = best_weight / total;
  return out;
}

inline const MaskImage& mask_for_image(const std::map<int, MaskImage>& masks,
                                       const ReconstructionBundle& bundle, int image_id) {
  auto it = masks.find(image_id);
  if (it == masks.end())
    throw Error(ErrorCode::MissingMask, "no mask for image " + std::to_string(image_id));
  const CameraIntrinsics& cam = bundle.cameras.at(bundle.images.at(image_id).camera_id);
  if (it->second.width != cam.width || it->second.height != cam.height)
    throw Error(ErrorCode::MaskDimensionMismatch,
                "mask for image " + std::to_string(image_id) + " is " +
                    std::to_string(it->second.width) + "x" + std::to_string(it->second.height) +
                    ", camera is " + std::to_string(cam.width) + "x" +
                    std::to_string(cam.height));
  return it->second;
}

// Adds one vote if the projection lands in bounds; mask lookup rounds to the
// nearest pixel.
inline void vote_observation(VoteTally& tally, const CameraIntrinsics& cam,
                             const PosedImage& image, const MaskImage& mask,
                             const Eigen::Vector3d& p_world, const FusionOptions& opts) {
  const auto px = project(cam, world_to_camera(image, p_world));
  if (!px) return;
  const int xi = static_cast<int>(std::lround(px->u));
  const int yi = static_cast<int>(std::lround(px->v));
  if (!mask.in_bounds(xi, yi)) return;
  const std::uint8_t code = mask.at(xi, yi);
  if (code > kMaskFiducial) return;  // undefined codes never vote
  if (code == kMaskBackground && !opts.background_votes) return;
  tally.add(code, vote_weight(center_distance(cam, *px)));
}

template <typename Fn>
inline void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min<int>(threads, static_cast<int>(n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Sparse fusion: each 3D point votes only through its own track observations,
// in ascending image-id order.
inline LabeledCloud fuse_sparse(const ReconstructionBundle& bundle,
                                const std::map<int, MaskImage>& masks,
                                const FusionOptions& opts = {}) {
  // Validate mask availability for every image that appears in a track.
  for (const auto& [image_id, image] : bundle.images) {
    bool referenced = false;
    for (const Keypoint& kp : image.keypoints)
      if (kp.point3d_id) { referenced = true; break; }
    if (referenced) detail::mask_for_image(masks, bundle, image_id);
  }

  std::vector<const ScenePoint*> pts;
  pts.reserve(bundle.points.size());
  for (const auto& [id, point] : bundle.points) pts.push_back(&point);

  LabeledCloud cloud;
  cloud.points.resize(pts.size());
  detail::parallel_for(pts.size(), opts.threads, [&](std::size_t i) {
    const ScenePoint& point = *pts[i];
    VoteTally tally;
    // Track elements sorted by image id for a deterministic accumulation order.
    std::vector<TrackElement> track = point.track;
    std::sort(track.begin(), track.end(), [](const TrackElement& a, const TrackElement& b) {
      return a.image_id < b.image_id ||
             (a.image_id == b.image_id && a.keypoint_index < b.keypoint_index);
    });
    for (const TrackElement& el : track) {
      const PosedImage& image = bundle.images.at(el.image_id);
      const CameraIntrinsics& cam = bundle.cameras.at(image.camera_id);
      detail::vote_observation(tally, cam, image, masks.at(el.image_id), point.position, opts);
    }
    cloud.points[i] = detail::resolve_tally(tally, point.position, point.point3d_id);
  });
  return cloud;
}

// Dense fusion: every point is projected into every masked image (no tracks).
// Used when point-to-pixel correspondences are unavailable (densified clouds)
// and for fiducial lifting.
inline LabeledCloud fuse_dense(const std::vector<Eigen::Vector3d>& cloud_positions,
                               const ReconstructionBundle& bundle,
                               const std::map<int, MaskImage>& masks,
                               const FusionOptions& opts = {}) {
  for (const auto& [image_id, image] : bundle.images)
    detail::mask_for_image(masks, bundle, image_id);

  LabeledCloud cloud;
  cloud.points.resize(cloud_positions.size());
  detail::parallel_for(cloud_positions.size(), opts.threads, [&](std::size_t i) {
    VoteTally tally;
    for (const auto& [image_id, image] : bundle.images) {
      const CameraIntrinsics& cam = bundle.cameras.at(image.camera_id);
      detail::vote_observation(tally, cam, image, masks.at(image_id), cloud_positions[i], opts);
    }
    cloud.points[i] =
        detail::resolve_tally(tally, cloud_positions[i], static_cast<std::int64_t>(i));
  });
  return cloud;
}

// Dense fusion over the bundle's own points, keeping point3d ids as source ids.
inline LabeledCloud fuse_dense_bundle(const ReconstructionBundle& bundle,
                                      const std::map<int, MaskImage>& masks,
                                      const FusionOptions& opts = {}) {
  std::vector<Eigen::Vector3d> positions;
  std::vector<std::int64_t> ids;
  positions.reserve(bundle.points.size());
  ids.reserve(bundle.points.size());
  for (const auto& [id, point] : bundle.points) {
    positions.push_back(point.position);
    ids.push_back(id);
  }
  LabeledCloud cloud = fuse_dense(positions, bundle, masks, opts);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) cloud.points[i].source_id = ids[i];
  return cloud;
}

struct PrecisionReport {
  double overall_pct = 0.0;        // pooled over all projected tumor points
  double per_image_mean_pct = 0.0;
  double per_image_std_pct = 0.0;  // population std
  std::vector<std::pair<int, double>> per_image;  // (image_id, pct)
  std::size_t projected = 0;
  std::size_t inside = 0;
};

// Fraction of tumor-labeled points whose projections land on tumor mask
// pixels of the reference masks. Points projecting out of bounds or behind a
// camera do not count toward the denominator.
inline PrecisionReport projection_precision(const LabeledCloud& cloud,
                                            const std::map<int, MaskImage>& reference_masks,
                                            const ReconstructionBundle& bundle) {
  std::vector<Eigen::Vector3d> tumor;
  for (const LabeledPoint& p : cloud.points)
    if (p.label == Label::Tumor) tumor.push_back(p.position);
  if (tumor.empty())
    throw Error(ErrorCode::NoTumorPoints, "cloud holds no tumor-labeled points");

  PrecisionReport report;
  for (const auto& [image_id, mask] : reference_masks) {
    auto image_it = bundle.images.find(image_id);
    if (image_it == bundle.images.end())
      throw Error(ErrorCode::MissingMask,
                  "reference mask for unknown image " + std::to_string(image_id));
    const CameraIntrinsics& cam = bundle.cameras.at(image_it->second.camera_id);
    if (mask.width != cam.width || mask.height != cam.height)
      throw Error(ErrorCode::MaskDimensionMismatch,
                  "reference mask for image " + std::to_string(image_id));
    std::size_t projected = 0, inside = 0;
    for (const Eigen::Vector3d& p : tumor) {
      const auto px = project(cam, world_to_camera(image_it->second, p));
      if (!px) continue;
      const int xi = static_cast<int>(std::lround(px->u));
      const int yi = static_cast<int>(std::lround(px->v));
      if (!mask.in_bounds(xi, yi)) continue;
      ++projected;
      if (mask.at(xi, yi) == kMaskTumor) ++inside;
    }
    if (projected > 0)
      report.per_image.emplace_back(
          image_id, 100.0 * static_cast<double>(inside) / static_cast<double>(projected));
    report.projected += projected;
    report.inside += inside;
  }

  if (report.projected == 0)
    throw Error(ErrorCode::NoProjectableObservations,
                "no tumor point projects into any reference mask");
  report.overall_pct =
      100.0 * static_cast<double>(report.inside) / static_cast<double>(report.projected);
  double mean = 0.0;
  for (const auto& [id, pct] : report.per_image) mean += pct;
  mean /= static_cast<double>(report.per_image.size());
  double var = 0.0;
  for (const auto& [id, pct] : report.per_image) var += (pct - mean) * (pct - mean);
  var /= static_cast<double>(report.per_image.size());
  report.per_image_mean_pct = mean;
  report.per_image_std_pct = std::sqrt(var);
  return report;
}

}  // namespace cao
