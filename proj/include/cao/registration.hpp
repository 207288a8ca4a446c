#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cao/colmap_model.hpp"
#include "cao/error.hpp"

namespace cao {

// Similarity map p -> scale * rotation * p + translation.
struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }

  SimilarityTransform inverse() const {
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.scale) * (inv.rotation * translation);
    return inv;
  }
};

struct CorrespondenceSet {
  std::vector<Eigen::Vector3d> source;  // reconstruction frame
  std::vector<Eigen::Vector3d> target;  // robot / world frame, mm
};

// Stable ascending sort by distance to the set centroid; exact ties fall back
// to lexicographic (x, y, z). Returns the permutation: element k of the result
// is the original index of the k-th closest point.
inline std::vector<std::size_t> order_by_centroid_distance(
    const std::vector<Eigen::Vector3d>& points) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : points) centroid += p;
  if (!points.empty()) centroid /= static_cast<double>(points.size());

  std::vector<std::size_t> perm(points.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    const double da = (points[a] - centroid).norm();
    const double db = (points[b] - centroid).norm();
    if (da != db) return da < db;
    const auto& pa = points[a];
    const auto& pb = points[b];
    if (pa.x() != pb.x()) return pa.x() < pb.x();
    if (pa.y() != pb.y()) return pa.y() < pb.y();
    return pa.z() < pb.z();
  });
  return perm;
}

inline std::vector<Eigen::Vector3d> apply_permutation(
    const std::vector<Eigen::Vector3d>& points, const std::vector<std::size_t>& perm) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (std::size_t idx : perm) out.push_back(points[idx]);
  return out;
}

// Closed-form least-squares similarity (or rigid, with_scale=false) aligning
// source onto target. Rotation comes from the SVD of the cross-covariance
// with the determinant-sign correction diag(1, 1, det(U V^T)), which keeps
// det(R) = +1 even for mirror-image inputs.
inline SimilarityTransform umeyama(const CorrespondenceSet& corr, bool with_scale = true) {
  const std::size_t n = corr.source.size();
  if (n != corr.target.size() || n < 3)
    throw Error(ErrorCode::DegenerateConfiguration,
                "need >= 3 corresponding point pairs, got " + std::to_string(n));

  Eigen::Vector3d mu_src = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_tgt = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_src += corr.source[i];
    mu_tgt += corr.target[i];
  }
  mu_src /= static_cast<double>(n);
  mu_tgt /= static_cast<double>(n);

  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();  // E[(tgt-mu)(src-mu)^T]
  double src_var = 0.0;
  Eigen::Matrix3d src_scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d ds = corr.source[i] - mu_src;
    const Eigen::Vector3d dt = corr.target[i] - mu_tgt;
    cross += dt * ds.transpose();
    src_scatter += ds * ds.transpose();
    src_var += ds.squaredNorm();
  }
  cross /= static_cast<double>(n);
  src_var /= static_cast<double>(n);

  {
    Eigen::JacobiSVD<Eigen::Matrix3d> scatter_svd(src_scatter);
    const auto& sv = scatter_svd.singularValues();
    if (sv(1) <= 1e-12 * std::max(sv(0), 1e-300))
      throw Error(ErrorCode::DegenerateConfiguration,
                  "source points are collinear or coincident");
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  Eigen::Vector3d sign = Eigen::Vector3d::Ones();
  if ((U * V.transpose()).determinant() < 0.0) sign(2) = -1.0;

  SimilarityTransform xf;
  xf.rotation = U * sign.asDiagonal() * V.transpose();
  xf.scale = with_scale ? svd.singularValues().dot(sign) / src_var : 1.0;
  xf.translation = mu_tgt - xf.scale * (xf.rotation * mu_src);
  return xf;
}

struct RegistrationAccuracy {
  std::vector<double> per_point;  // L2 residuals, mm
  double mean = 0.0;
  double stddev = 0.0;  // population std, matching a 5-point report style
};

inline RegistrationAccuracy registration_accuracy(const SimilarityTransform& xf,
                                                  const CorrespondenceSet& corr) {
  RegistrationAccuracy acc;
  acc.per_point.reserve(corr.source.size());
  for (std::size_t i = 0; i < corr.source.size(); ++i)
    acc.per_point.push_back((corr.target[i] - xf.apply(corr.source[i])).norm());
  if (acc.per_point.empty()) return acc;
  acc.mean = std::accumulate(acc.per_point.begin(), acc.per_point.end(), 0.0) /
             static_cast<double>(acc.per_point.size());
  double var = 0.0;
  for (double r : acc.per_point) var += (r - acc.mean) * (r - acc.mean);
  acc.stddev = std::sqrt(var / static_cast<double>(acc.per_point.size()));
  return acc;
}

inline LabeledCloud apply(const SimilarityTransform& xf, const LabeledCloud& cloud) {
  LabeledCloud out = cloud;
  for (LabeledPoint& p : out.points) p.position = xf.apply(p.position);
  return out;
}

// ---------------------------------------------------------------------------
// JSON serialization: {scale, rotation (row-major 9), translation}
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const SimilarityTransform& xf) {
  nlohmann::json j;
  j["scale"] = xf.scale;
  std::vector<double> rot(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot[r * 3 + c] = xf.rotation(r, c);
  j["rotation"] = rot;
  j["translation"] = {xf.translation.x(), xf.translation.y(), xf.translation.z()};
  return j;
}

inline SimilarityTransform transform_from_json(const nlohmann::json& j) {
  SimilarityTransform xf;
  xf.scale = j.at("scale").get<double>();
  const auto rot = j.at("rotation").get<std::vector<double>>();
  const auto tr = j.at("translation").get<std::vector<double>>();
  if (rot.size() != 9 || tr.size() != 3)
    throw Error(ErrorCode::MalformedLine, "transform JSON needs 9 rotation + 3 translation values");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) xf.rotation(r, c) = rot[r * 3 + c];
  xf.translation = Eigen::Vector3d(tr[0], tr[1], tr[2]);
  return xf;
}

inline void write_transform_json(const SimilarityTransform& xf,
                                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << to_json(xf).dump(2) << "\n";
}

inline SimilarityTransform read_transform_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::MissingFile, "missing file: " + path.string());
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  return transform_from_json(j);
}

// ---------------------------------------------------------------------------
// Point CSV: "idx,x,y,z" rows (robot touchpoints use mm)
// ---------------------------------------------------------------------------

inline void write_points_csv(const std::vector<Eigen::Vector3d>& points,
                             const std::filesystem::path& path,
                             const std::string& header = "idx,x,y,z") {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.precision(17);
  out << header << "\n";
  for (std::size_t i = 0; i < points.size(); ++i)
    out << i << "," << points[i].x() << "," << points[i].y() << "," << points[i].z() << "\n";
}

inline std::vector<Eigen::Vector3d> read_points_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::MissingFile, "missing file: " + path.string());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<Eigen::Vector3d> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const char c0 = line[0];
    if (!std::isdigit(static_cast<unsigned char>(c0)) && c0 != '-' && c0 != '+' && c0 != '.')
      continue;  // header row
    std::array<double, 4> vals{};
    std::size_t field = 0, pos = 0;
    while (field < 4 && pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      try {
        vals[field] = std::stod(line.substr(pos, comma - pos));
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedLine,
                    path.string() + ":" + std::to_string(line_no) + ": expected number");
      }
      ++field;
      pos = comma + 1;
    }
    if (field != 4)
      throw Error(ErrorCode::MalformedLine,
                  path.string() + ":" + std::to_string(line_no) + ": expected idx,x,y,z");
    points.emplace_back(vals[1], vals[2], vals[3]);
  }
  return points;
}

}  // namespace cao
