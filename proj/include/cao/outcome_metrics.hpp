#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cao/colmap_model.hpp"
#include "cao/error.hpp"
#include "cao/image.hpp"
#include "cao/surface_fit.hpp"

namespace cao {

struct CharReport {
  std::size_t char_area = 0;   // pixels or points; same domain as tumor_area
  std::size_t tumor_area = 0;
  double am = 0.0;             // area margin
  double char_darkness = 0.0;
  double trachea_darkness = 0.0;
  double dm = 0.0;             // darkening margin
  std::string area_domain;     // provenance of the two area counts
};

// Charred tissue: intensity strictly below the fixed threshold.
inline BinaryMask char_mask(const GrayImage& img, std::uint8_t tau) {
  BinaryMask mask(img.width, img.height, 0);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    if (img.data[i] < tau) mask.data[i] = 1;
  return mask;
}

// Relative excess of charred area over tumor area; negative means
// under-charring and the sign is preserved.
inline double area_margin(std::size_t char_area, std::size_t tumor_area) {
  if (tumor_area == 0)
    throw Error(ErrorCode::ZeroTumorArea, "tumor area must be positive");
  return (static_cast<double>(char_area) - static_cast<double>(tumor_area)) /
         static_cast<double>(tumor_area);
}

// Darkness of a region = mean over its pixels of (255 - intensity) / 255.
inline double region_darkness(const GrayImage& img, const BinaryMask& region) {
  if (img.width != region.width || img.height != region.height)
    throw Error(ErrorCode::MaskDimensionMismatch, "region mask does not match image");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (!region.data[i]) continue;
    sum += (255.0 - img.data[i]) / 255.0;
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

inline double darkening_margin(double char_darkness, double trachea_darkness) {
  if (trachea_darkness <= 0.0)
    throw Error(ErrorCode::ZeroTracheaDarkness,
                "trachea darkness is zero; darkening margin undefined");
  return (char_darkness - trachea_darkness) / trachea_darkness;
}

struct CutSurfaceRmse {
  double rmse = 0.0;  // mm
  std::size_t n_char = 0;
};

// Post-procedure score: fit the goal surface to non-charred trachea points,
// then compare each charred point's z against the surface at its (x, y).
inline CutSurfaceRmse cut_surface_rmse(const LabeledCloud& post_cloud) {
  std::vector<Eigen::Vector3d> trachea;
  std::vector<Eigen::Vector3d> charred;
  for (const LabeledPoint& p : post_cloud.points) {
    if (p.label == Label::Trachea) trachea.push_back(p.position);
    else if (p.label == Label::Char) charred.push_back(p.position);
  }
  if (trachea.size() < 21)
    throw Error(ErrorCode::TooFewTracheaPoints,
                "goal surface needs >= 21 trachea points, got " +
                    std::to_string(trachea.size()));
  if (charred.empty())
    throw Error(ErrorCode::NoCharPoints, "no char-labeled points to score");

  const PolySurface goal = fit_poly55(trachea);
  double sum_sq = 0.0;
  for (const Eigen::Vector3d& p : charred) {
    const double r = p.z() - eval(goal, p.x(), p.y());
    sum_sq += r * r;
  }
  return {std::sqrt(sum_sq / static_cast<double>(charred.size())), charred.size()};
}

// ---------------------------------------------------------------------------
// Report emission: JSON per run, CSV row appended for cross-model comparisons
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CharReport& r) {
  nlohmann::json j;
  j["char_area"] = r.char_area;
  j["tumor_area"] = r.tumor_area;
  j["area_margin"] = r.am;
  j["char_darkness"] = r.char_darkness;
  j["trachea_darkness"] = r.trachea_darkness;
  j["darkening_margin"] = r.dm;
  j["area_domain"] = r.area_domain;
  return j;
}

inline void append_char_report_csv(const CharReport& r, const std::string& model_id,
                                   const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.precision(12);
  if (fresh)
    out << "model,char_area,tumor_area,area_margin,char_darkness,trachea_darkness,"
           "darkening_margin,area_domain\n";
  out << model_id << "," << r.char_area << "," << r.tumor_area << "," << r.am << ","
      << r.char_darkness << "," << r.trachea_darkness << "," << r.dm << ","
      << r.area_domain << "\n";
}

}  // namespace cao
