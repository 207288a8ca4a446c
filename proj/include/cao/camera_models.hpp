#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <optional>

#include "cao/colmap_model.hpp"
#include "cao/error.hpp"

namespace cao {

struct Pixel {
  double u = 0.0;
  double v = 0.0;

  bool operator==(const Pixel&) const = default;
};

inline constexpr double kBehindCameraEps = 1e-9;

inline Eigen::Vector3d world_to_camera(const PosedImage& pose,
                                       const Eigen::Vector3d& p_world) {
  return pose.rotation * p_world + pose.translation;
}

// Forward projection. Empty optional means the point lies behind the camera
// (z <= eps); callers treat that as a regular skip, not a failure.
inline std::optional<Pixel> project(const CameraIntrinsics& cam,
                                    const Eigen::Vector3d& p_cam) {
  if (p_cam.z() <= kBehindCameraEps) return std::nullopt;
  const double xn = p_cam.x() / p_cam.z();
  const double yn = p_cam.y() / p_cam.z();
  switch (cam.model) {
    case CameraModel::Pinhole: {
      const double fx = cam.params[0], fy = cam.params[1];
      const double cx = cam.params[2], cy = cam.params[3];
      return Pixel{fx * xn + cx, fy * yn + cy};
    }
    case CameraModel::SimpleRadial: {
      const double f = cam.params[0], cx = cam.params[1], cy = cam.params[2];
      const double k = cam.params[3];
      const double r2 = xn * xn + yn * yn;
      const double g = 1.0 + k * r2;
      return Pixel{f * g * xn + cx, f * g * yn + cy};
    }
    case CameraModel::Radial: {
      const double f = cam.params[0], cx = cam.params[1], cy = cam.params[2];
      const double k1 = cam.params[3], k2 = cam.params[4];
      const double r2 = xn * xn + yn * yn;
      const double g = 1.0 + k1 * r2 + k2 * r2 * r2;
      return Pixel{f * g * xn + cx, f * g * yn + cy};
    }
  }
  return std::nullopt;
}

inline std::optional<Pixel> project_world(const CameraIntrinsics& cam,
                                          const PosedImage& pose,
                                          const Eigen::Vector3d& p_world) {
  return project(cam, world_to_camera(pose, p_world));
}

// Distance to the continuous image center (width/2, height/2).
inline double center_distance(const CameraIntrinsics& cam, const Pixel& px) {
  const double du = px.u - 0.5 * cam.width;
  const double dv = px.v - 0.5 * cam.height;
  return std::sqrt(du * du + dv * dv);
}

}  // namespace cao
