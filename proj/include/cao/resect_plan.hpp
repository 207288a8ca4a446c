#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cao/colmap_model.hpp"
#include "cao/error.hpp"
#include "cao/surface_fit.hpp"

namespace cao {

struct PlanConfig {
  double clearance = 1.0;        // mm above the trachea surface, along the normal
  double depth_increment = 4.0;  // mm lateral advance into the tumor per pass
  double step_ds = 0.5;          // max waypoint spacing, mm
  double margin_mm = 2.0;        // axis extension beyond the tumor boundary
  int n_passes_max = 50;
};

struct CutPass {
  std::vector<Eigen::Vector3d> waypoints;  // mm, robot frame
  int pass_index = 0;
  double depth_offset = 0.0;  // pass_index * depth_increment
};

struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();
};

struct CutPlan {
  std::vector<CutPass> passes;
  double clearance = 1.0;
  double depth_increment = 4.0;
  double step_ds = 0.5;
  Aabb tumor_bbox;
};

struct TumorExtent {
  Eigen::Vector2d axis;     // principal cut direction in xy, unit, x-positive
  Eigen::Vector3d start;    // extreme tumor point, pushed margin_mm outward
  Eigen::Vector3d end;
  double width = 0.0;       // footprint extent perpendicular to the axis
};

namespace detail {

inline std::vector<Eigen::Vector3d> points_with_label(const LabeledCloud& cloud,
                                                      Label label) {
  std::vector<Eigen::Vector3d> out;
  for (const LabeledPoint& p : cloud.points)
    if (p.label == label) out.push_back(p.position);
  return out;
}

// First principal component of the xy footprint, sign fixed toward +x
// (toward +y when x-free) so plans are deterministic.
inline Eigen::Vector2d principal_xy_axis(const std::vector<Eigen::Vector3d>& points) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p.head<2>();
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector2d d = p.head<2>() - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Eigen::Vector2d axis = eig.eigenvectors().col(1);  // largest eigenvalue last
  if (axis.x() < 0.0 || (axis.x() == 0.0 && axis.y() < 0.0)) axis = -axis;
  return axis;
}

}  // namespace detail

// The tumor footprint defines where incisions start and end.
inline TumorExtent tumor_extent(const LabeledCloud& tumor_cloud, double margin_mm = 2.0) {
  const auto tumor = detail::points_with_label(tumor_cloud, Label::Tumor);
  if (tumor.size() < 10)
    throw Error(ErrorCode::TooFewTumorPoints,
                "tumor extent needs >= 10 tumor points, got " + std::to_string(tumor.size()));

  TumorExtent ext;
  ext.axis = detail::principal_xy_axis(tumor);
  const Eigen::Vector2d perp(-ext.axis.y(), ext.axis.x());

  double a_min = std::numeric_limits<double>::max();
  double a_max = std::numeric_limits<double>::lowest();
  double q_min = a_min, q_max = a_max;
  std::size_t lo_idx = 0, hi_idx = 0;
  for (std::size_t i = 0; i < tumor.size(); ++i) {
    const double a = tumor[i].head<2>().dot(ext.axis);
    const double q = tumor[i].head<2>().dot(perp);
    if (a < a_min) { a_min = a; lo_idx = i; }
    if (a > a_max) { a_max = a; hi_idx = i; }
    q_min = std::min(q_min, q);
    q_max = std::max(q_max, q);
  }
  ext.start = tumor[lo_idx];
  ext.end = tumor[hi_idx];
  ext.start.head<2>() -= margin_mm * ext.axis;
  ext.end.head<2>() += margin_mm * ext.axis;
  ext.width = q_max - q_min;
  return ext;
}

// Incremental cut passes over the fitted surface. Pass k runs parallel to
// the tumor's principal axis, offset laterally by k * depth_increment from
// the near edge of the footprint, each waypoint lifted clearance mm along
// the local surface normal. Passes stop once the offset leaves the footprint.
inline CutPlan plan_cuts(const PolySurface& surface, const LabeledCloud& tumor_cloud,
                         const PlanConfig& config = {}) {
  const auto tumor = detail::points_with_label(tumor_cloud, Label::Tumor);
  if (tumor.size() < 10)
    throw Error(ErrorCode::TooFewTumorPoints,
                "plan needs >= 10 tumor points, got " + std::to_string(tumor.size()));

  const Eigen::Vector2d axis = detail::principal_xy_axis(tumor);
  const Eigen::Vector2d perp(-axis.y(), axis.x());

  double a_min = std::numeric_limits<double>::max(), a_max = std::numeric_limits<double>::lowest();
  double q_min = a_min, q_max = a_max;
  for (const auto& p : tumor) {
    const double a = p.head<2>().dot(axis);
    const double q = p.head<2>().dot(perp);
    a_min = std::min(a_min, a);
    a_max = std::max(a_max, a);
    q_min = std::min(q_min, q);
    q_max = std::max(q_max, q);
  }
  const double a_lo = a_min - config.margin_mm;
  const double a_hi = a_max + config.margin_mm;
  const double width = q_max - q_min;
  const double line_len = a_hi - a_lo;
  if (!(line_len > 0.0))
    throw Error(ErrorCode::EmptyPlan, "tumor footprint has no extent along the cut axis");

  CutPlan plan;
  plan.clearance = config.clearance;
  plan.depth_increment = config.depth_increment;
  plan.step_ds = config.step_ds;
  plan.tumor_bbox.min = tumor[0];
  plan.tumor_bbox.max = tumor[0];
  for (const auto& p : tumor) {
    plan.tumor_bbox.min = plan.tumor_bbox.min.cwiseMin(p);
    plan.tumor_bbox.max = plan.tumor_bbox.max.cwiseMax(p);
  }

  auto lift = [&](double a, double q) {
    const Eigen::Vector2d xy = a * axis + q * perp;
    const double z = eval(surface, xy.x(), xy.y());
    const Eigen::Vector3d n = surface_normal(surface, xy.x(), xy.y());
    return Eigen::Vector3d(xy.x(), xy.y(), z) + config.clearance * n;
  };

  for (int k = 0; k < config.n_passes_max; ++k) {
    const double offset = k * config.depth_increment;
    if (offset > width + 1e-9) break;
    const double q = q_min + offset;

    int segments = std::max(1, static_cast<int>(std::ceil(line_len / config.step_ds)));
    std::vector<Eigen::Vector3d> waypoints;
    for (int refine = 0; refine < 8; ++refine) {
      waypoints.clear();
      waypoints.reserve(segments + 1);
      for (int i = 0; i <= segments; ++i)
        waypoints.push_back(lift(a_lo + line_len * i / segments, q));
      double max_gap = 0.0;
      for (std::size_t i = 1; i < waypoints.size(); ++i)
        max_gap = std::max(max_gap, (waypoints[i] - waypoints[i - 1]).norm());
      if (max_gap <= config.step_ds) break;
      segments *= 2;  // slope stretched the 3D spacing past step_ds
    }

    CutPass pass;
    pass.waypoints = std::move(waypoints);
    pass.pass_index = k;
    pass.depth_offset = offset;
    plan.passes.push_back(std::move(pass));
  }

  if (plan.passes.empty())
    throw Error(ErrorCode::EmptyPlan, "no cut pass fits the tumor footprint");
  return plan;
}

// ---------------------------------------------------------------------------
// Plan validation
// ---------------------------------------------------------------------------

struct PlanViolation {
  enum class Kind { Clearance, BelowTissue };
  Kind kind = Kind::Clearance;
  int pass_index = 0;
  int waypoint_index = 0;
  double value = 0.0;  // measured clearance, or height deficit vs the tissue point
};

struct PlanValidation {
  std::vector<PlanViolation> violations;
  std::size_t waypoints_checked = 0;
  double min_clearance = 0.0;
  double max_clearance = 0.0;
};

// Signed distance from a point to the surface along the local normal,
// via fixed-point foot-point iteration (smooth low-curvature surfaces).
inline double normal_clearance(const PolySurface& surface, const Eigen::Vector3d& p) {
  double x = p.x(), y = p.y();
  double d = 0.0;
  for (int it = 0; it < 12; ++it) {
    const Eigen::Vector3d base(x, y, eval(surface, x, y));
    const Eigen::Vector3d n = surface_normal(surface, x, y);
    d = (p - base).dot(n);
    const Eigen::Vector3d foot = p - d * n;
    const double dx = foot.x() - x, dy = foot.y() - y;
    x = foot.x();
    y = foot.y();
    if (dx * dx + dy * dy < 1e-20) break;
  }
  return d;
}

// Report-only safety check: every waypoint must sit clearance +- 0.1 mm above
// the surface along the local normal, and must not be below any trachea point
// within a 0.5 mm xy radius.
inline PlanValidation validate_plan(const CutPlan& plan, const PolySurface& surface,
                                    const LabeledCloud& trachea_cloud) {
  constexpr double kClearanceTol = 0.1;  // mm
  constexpr double kXyRadius = 0.5;      // mm

  const auto trachea = detail::points_with_label(trachea_cloud, Label::Trachea);

  PlanValidation report;
  report.min_clearance = std::numeric_limits<double>::max();
  report.max_clearance = std::numeric_limits<double>::lowest();
  for (const CutPass& pass : plan.passes) {
    for (std::size_t w = 0; w < pass.waypoints.size(); ++w) {
      const Eigen::Vector3d& wp = pass.waypoints[w];
      ++report.waypoints_checked;

      const double d = normal_clearance(surface, wp);
      report.min_clearance = std::min(report.min_clearance, d);
      report.max_clearance = std::max(report.max_clearance, d);
      if (d < plan.clearance - kClearanceTol || d > plan.clearance + kClearanceTol)
        report.violations.push_back(
            {PlanViolation::Kind::Clearance, pass.pass_index, static_cast<int>(w), d});

      for (const Eigen::Vector3d& q : trachea) {
        const double dx = q.x() - wp.x(), dy = q.y() - wp.y();
        if (dx * dx + dy * dy > kXyRadius * kXyRadius) continue;
        if (wp.z() < q.z()) {
          report.violations.push_back({PlanViolation::Kind::BelowTissue, pass.pass_index,
                                       static_cast<int>(w), q.z() - wp.z()});
          break;  // one tissue violation per waypoint is enough
        }
      }
    }
  }
  if (report.waypoints_checked == 0) {
    report.min_clearance = 0.0;
    report.max_clearance = 0.0;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization: JSON plan + per-pass waypoint CSVs for robot consumption
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CutPlan& plan) {
  nlohmann::json j;
  j["units"] = "mm";
  j["clearance_mm"] = plan.clearance;
  j["depth_increment_mm"] = plan.depth_increment;
  j["step_ds_mm"] = plan.step_ds;
  j["tumor_bbox"] = {{"min", {plan.tumor_bbox.min.x(), plan.tumor_bbox.min.y(),
                              plan.tumor_bbox.min.z()}},
                     {"max", {plan.tumor_bbox.max.x(), plan.tumor_bbox.max.y(),
                              plan.tumor_bbox.max.z()}}};
  nlohmann::json passes = nlohmann::json::array();
  for (const CutPass& pass : plan.passes) {
    nlohmann::json pj;
    pj["pass_index"] = pass.pass_index;
    pj["depth_offset_mm"] = pass.depth_offset;
    nlohmann::json wps = nlohmann::json::array();
    for (const auto& wp : pass.waypoints) wps.push_back({wp.x(), wp.y(), wp.z()});
    pj["waypoints"] = std::move(wps);
    passes.push_back(std::move(pj));
  }
  j["passes"] = std::move(passes);
  return j;
}

inline void write_plan_json(const CutPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << to_json(plan).dump(2) << "\n";
}

inline void write_plan_csvs(const CutPlan& plan, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const CutPass& pass : plan.passes) {
    char name[32];
    std::snprintf(name, sizeof(name), "pass_%03d.csv", pass.pass_index);
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write pass CSV");
    out.precision(17);
    out << "# units: mm, robot frame\n"
        << "x_mm,y_mm,z_mm\n";
    for (const auto& wp : pass.waypoints)
      out << wp.x() << "," << wp.y() << "," << wp.z() << "\n";
  }
}

}  // namespace cao
