#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "cao/error.hpp"

namespace cao {

inline constexpr int kPolyDegree = 5;
inline constexpr int kPolyTermCount = 21;  // monomials x^i y^j with i + j <= 5

// Exponent table in graded-lex order: degree 0..5, higher x power first
// within each degree. Index k -> (i, j).
inline const std::array<std::pair<int, int>, kPolyTermCount>& poly55_exponents() {
  static const std::array<std::pair<int, int>, kPolyTermCount> table = [] {
    std::array<std::pair<int, int>, kPolyTermCount> t{};
    int k = 0;
    for (int d = 0; d <= kPolyDegree; ++d)
      for (int i = d; i >= 0; --i) t[k++] = {i, d - i};
    return t;
  }();
  return table;
}

// Bivariate degree-5 surface z = f(x, y), evaluated on inputs centered and
// scaled to unit std. Raw millimeter coordinates at degree 5 are too
// ill-conditioned to fit directly, so normalization is part of the model.
struct PolySurface {
  std::array<double, kPolyTermCount> coefficients{};
  double x_mean = 0.0, y_mean = 0.0;
  double x_scale = 1.0, y_scale = 1.0;
  // Bounding box of the fit data, for extrapolation queries.
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

  bool in_footprint(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

namespace detail {

inline void monomial_powers(double v, std::array<double, kPolyDegree + 1>& powers) {
  powers[0] = 1.0;
  for (int d = 1; d <= kPolyDegree; ++d) powers[d] = powers[d - 1] * v;
}

}  // namespace detail

inline double eval(const PolySurface& s, double x, double y) {
  const double xn = (x - s.x_mean) / s.x_scale;
  const double yn = (y - s.y_mean) / s.y_scale;
  std::array<double, kPolyDegree + 1> xp, yp;
  detail::monomial_powers(xn, xp);
  detail::monomial_powers(yn, yp);
  double z = 0.0;
  const auto& exps = poly55_exponents();
  for (int k = 0; k < kPolyTermCount; ++k)
    z += s.coefficients[k] * xp[exps[k].first] * yp[exps[k].second];
  return z;
}

// Analytic partials of f with respect to raw x, y (chain rule through the
// normalization).
inline Eigen::Vector2d eval_gradient(const PolySurface& s, double x, double y) {
  const double xn = (x - s.x_mean) / s.x_scale;
  const double yn = (y - s.y_mean) / s.y_scale;
  std::array<double, kPolyDegree + 1> xp, yp;
  detail::monomial_powers(xn, xp);
  detail::monomial_powers(yn, yp);
  double dx = 0.0, dy = 0.0;
  const auto& exps = poly55_exponents();
  for (int k = 0; k < kPolyTermCount; ++k) {
    const auto [i, j] = exps[k];
    if (i > 0) dx += s.coefficients[k] * i * xp[i - 1] * yp[j];
    if (j > 0) dy += s.coefficients[k] * j * xp[i] * yp[j - 1];
  }
  return {dx / s.x_scale, dy / s.y_scale};
}

// Upward unit normal of the graph z = f(x, y).
inline Eigen::Vector3d surface_normal(const PolySurface& s, double x, double y) {
  const Eigen::Vector2d g = eval_gradient(s, x, y);
  return Eigen::Vector3d(-g.x(), -g.y(), 1.0).normalized();
}

// Least-squares poly55 fit via column-pivoted QR. Throws TooFewPoints below
// 21 samples and RankDeficientFootprint when the (x, y) footprint cannot
// support a full-rank degree-5 design matrix.
inline PolySurface fit_poly55(const std::vector<Eigen::Vector3d>& points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < kPolyTermCount)
    throw Error(ErrorCode::TooFewPoints,
                "poly55 needs >= 21 points, got " + std::to_string(points.size()));

  PolySurface s;
  double sx = 0.0, sy = 0.0;
  s.x_min = s.x_max = points[0].x();
  s.y_min = s.y_max = points[0].y();
  for (const auto& p : points) {
    sx += p.x();
    sy += p.y();
    s.x_min = std::min(s.x_min, p.x());
    s.x_max = std::max(s.x_max, p.x());
    s.y_min = std::min(s.y_min, p.y());
    s.y_max = std::max(s.y_max, p.y());
  }
  s.x_mean = sx / static_cast<double>(n);
  s.y_mean = sy / static_cast<double>(n);
  double vx = 0.0, vy = 0.0;
  for (const auto& p : points) {
    vx += (p.x() - s.x_mean) * (p.x() - s.x_mean);
    vy += (p.y() - s.y_mean) * (p.y() - s.y_mean);
  }
  s.x_scale = std::sqrt(vx / static_cast<double>(n));
  s.y_scale = std::sqrt(vy / static_cast<double>(n));
  if (s.x_scale <= 1e-12 || s.y_scale <= 1e-12)
    throw Error(ErrorCode::RankDeficientFootprint,
                "degenerate (x, y) footprint: zero spread along an axis");

  Eigen::MatrixXd design(n, kPolyTermCount);
  Eigen::VectorXd rhs(n);
  const auto& exps = poly55_exponents();
  std::array<double, kPolyDegree + 1> xp, yp;
  for (Eigen::Index r = 0; r < n; ++r) {
    detail::monomial_powers((points[r].x() - s.x_mean) / s.x_scale, xp);
    detail::monomial_powers((points[r].y() - s.y_mean) / s.y_scale, yp);
    for (int k = 0; k < kPolyTermCount; ++k)
      design(r, k) = xp[exps[k].first] * yp[exps[k].second];
    rhs(r) = points[r].z();
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < kPolyTermCount)
    throw Error(ErrorCode::RankDeficientFootprint,
                "design matrix rank " + std::to_string(qr.rank()) + " < 21");
  const Eigen::VectorXd coeffs = qr.solve(rhs);
  for (int k = 0; k < kPolyTermCount; ++k) s.coefficients[k] = coeffs(k);
  return s;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PolySurface& s) {
  nlohmann::json j;
  j["degree"] = kPolyDegree;
  j["term_order"] = "graded-lex, x power descending within each total degree";
  j["coefficients"] = std::vector<double>(s.coefficients.begin(), s.coefficients.end());
  j["normalization"] = {{"x_mean", s.x_mean},
                        {"y_mean", s.y_mean},
                        {"x_scale", s.x_scale},
                        {"y_scale", s.y_scale}};
  j["footprint"] = {{"x_min", s.x_min}, {"x_max", s.x_max},
                    {"y_min", s.y_min}, {"y_max", s.y_max}};
  return j;
}

inline PolySurface surface_from_json(const nlohmann::json& j) {
  PolySurface s;
  const auto coeffs = j.at("coefficients").get<std::vector<double>>();
  if (coeffs.size() != kPolyTermCount)
    throw Error(ErrorCode::MalformedLine, "surface JSON needs exactly 21 coefficients");
  std::copy(coeffs.begin(), coeffs.end(), s.coefficients.begin());
  const auto& norm = j.at("normalization");
  s.x_mean = norm.at("x_mean").get<double>();
  s.y_mean = norm.at("y_mean").get<double>();
  s.x_scale = norm.at("x_scale").get<double>();
  s.y_scale = norm.at("y_scale").get<double>();
  if (s.x_scale <= 0.0 || s.y_scale <= 0.0)
    throw Error(ErrorCode::MalformedLine, "surface JSON scales must be positive");
  if (j.contains("footprint")) {
    const auto& fp = j.at("footprint");
    s.x_min = fp.at("x_min").get<double>();
    s.x_max = fp.at("x_max").get<double>();
    s.y_min = fp.at("y_min").get<double>();
    s.y_max = fp.at("y_max").get<double>();
  }
  return s;
}

inline void write_surface_json(const PolySurface& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << to_json(s).dump(2) << "\n";
}

inline PolySurface read_surface_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::MissingFile, "missing file: " + path.string());
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  return surface_from_json(j);
}

}  // namespace cao
