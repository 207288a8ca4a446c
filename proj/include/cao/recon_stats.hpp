#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include "cao/camera_models.hpp"
#include "cao/colmap_model.hpp"
#include "cao/error.hpp"

namespace cao {

struct ReconReport {
  double reconstructed_pct = 0.0;
  std::size_t n_points = 0;
  double mean_track_length = 0.0;
  double mean_observations_per_image = 0.0;
  double mean_reprojection_error = 0.0;   // recomputed from geometry
  double stored_error_mean = 0.0;         // mean of the per-point ERROR field
  std::size_t skipped_observations = 0;   // behind-camera observations
  std::optional<double> runtime_minutes;  // pass-through metadata
};

inline double reconstruction_percentage(const ReconstructionBundle& bundle) {
  if (bundle.total_input_images <= 0)
    throw Error(ErrorCode::ZeroTotalImages, "total_input_images must be >= 1");
  return 100.0 * static_cast<double>(bundle.images.size()) /
         static_cast<double>(bundle.total_input_images);
}

inline double mean_track_length(const ReconstructionBundle& bundle) {
  if (bundle.points.empty())
    throw Error(ErrorCode::EmptyPointSet, "no 3D points in bundle");
  std::size_t total = 0;
  for (const auto& [id, point] : bundle.points) total += point.track.size();
  return static_cast<double>(total) / static_cast<double>(bundle.points.size());
}

inline double mean_observations_per_image(const ReconstructionBundle& bundle) {
  if (bundle.images.empty())
    throw Error(ErrorCode::EmptyImageSet, "no registered images in bundle");
  std::size_t total = 0;
  for (const auto& [id, point] : bundle.points) total += point.track.size();
  return static_cast<double>(total) / static_cast<double>(bundle.images.size());
}

// Mean pixel distance between each track observation's projection and its
// keypoint, recomputed from poses and intrinsics. Behind-camera observations
// are skipped and tallied. Summation runs in ascending point-id order so the
// result is reproducible.
inline double mean_reprojection_error(const ReconstructionBundle& bundle,
                                      std::size_t* skipped = nullptr) {
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t behind = 0;
  for (const auto& [point_id, point] : bundle.points) {
    for (const TrackElement& el : point.track) {
      const PosedImage& image = bundle.images.at(el.image_id);
      const CameraIntrinsics& cam = bundle.cameras.at(image.camera_id);
      const auto px = project(cam, world_to_camera(image, point.position));
      if (!px) {
        ++behind;
        continue;
      }
      const Keypoint& kp = image.keypoints[el.keypoint_index];
      const double du = px->u - kp.x;
      const double dv = px->v - kp.y;
      sum += std::sqrt(du * du + dv * dv);
      ++count;
    }
  }
  if (skipped) *skipped = behind;
  if (count == 0)
    throw Error(ErrorCode::NoProjectableObservations,
                "every observation lies behind its camera");
  return sum / static_cast<double>(count);
}

inline ReconReport compute_recon_report(const ReconstructionBundle& bundle,
                                        std::optional<double> runtime_minutes = {}) {
  ReconReport report;
  report.reconstructed_pct = reconstruction_percentage(bundle);
  report.n_points = bundle.points.size();
  report.mean_track_length = bundle.points.empty() ? 0.0 : mean_track_length(bundle);
  report.mean_observations_per_image = mean_observations_per_image(bundle);
  report.mean_reprojection_error =
      bundle.points.empty() ? 0.0
                            : mean_reprojection_error(bundle, &report.skipped_observations);
  if (!bundle.points.empty()) {
    double stored = 0.0;
    for (const auto& [id, point] : bundle.points) stored += point.reproj_error;
    report.stored_error_mean = stored / static_cast<double>(bundle.points.size());
  }
  report.runtime_minutes = runtime_minutes;
  return report;
}

inline std::string recon_report_csv_header() {
  // observations = total track observations / registered images (per-image mean)
  return "# reconstructed_pct = 100*registered/total_input; observations = "
         "sum(track lengths)/registered images; reprojection recomputed from geometry\n"
         "reconstructed_pct,n_points,mean_track_length,mean_observations_per_image,"
         "mean_reprojection_error_px,stored_error_mean_px,runtime_minutes\n";
}

inline std::string recon_report_csv_row(const ReconReport& r) {
  std::ostringstream out;
  out.precision(12);
  out << r.reconstructed_pct << "," << r.n_points << "," << r.mean_track_length << ","
      << r.mean_observations_per_image << "," << r.mean_reprojection_error << ","
      << r.stored_error_mean << ",";
  if (r.runtime_minutes) out << *r.runtime_minutes;
  out << "\n";
  return out.str();
}

inline std::string recon_report_table(const ReconReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "Reconstructed images : " << r.reconstructed_pct << " %\n"
      << "3D points            : " << r.n_points << "\n"
      << "Mean track length    : " << r.mean_track_length << "\n"
      << "Observations / image : " << r.mean_observations_per_image << "\n"
      << "Reprojection error   : " << r.mean_reprojection_error << " px (recomputed)\n"
      << "Stored error mean    : " << r.stored_error_mean << " px\n";
  if (r.skipped_observations > 0)
    out << "Skipped observations : " << r.skipped_observations << " (behind camera)\n";
  if (r.runtime_minutes) out << "Runtime              : " << *r.runtime_minutes << " min\n";
  return out.str();
}

}  // namespace cao
