#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "cao/colmap_model.hpp"
#include "cao/error.hpp"
#include "cao/image.hpp"
#include "cao/label_fusion.hpp"
#include "cao/registration.hpp"

namespace cao {

struct FiducialParams {
  int block = 11;        // adaptive threshold neighborhood, odd
  double c = 2.0;        // threshold offset below neighborhood mean
  double min_circularity = 0.5;
  double epsilon_c = 0.0;  // cluster linkage distance; <= 0 selects 1% of bbox diagonal
};

// Foreground = darker than the block x block neighborhood mean minus c,
// with border replication. Cautery marks are dark burns on bright tissue.
inline BinaryMask adaptive_threshold(const GrayImage& img, int block, double c) {
  if (block < 3 || block % 2 == 0)
    throw Error(ErrorCode::EvenBlockSize,
                "adaptive threshold block must be odd and >= 3, got " + std::to_string(block));
  const int r = block / 2;
  const int w = img.width, h = img.height;

  // Separable replicate-border box sum: horizontal pass, then vertical.
  std::vector<double> horiz(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int dx = -r; dx <= r; ++dx) {
        const int xi = std::clamp(x + dx, 0, w - 1);
        sum += img.at(xi, y);
      }
      horiz[static_cast<std::size_t>(y) * w + x] = sum;
    }
  }
  BinaryMask mask(w, h, 0);
  const double inv_area = 1.0 / (static_cast<double>(block) * block);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yi = std::clamp(y + dy, 0, h - 1);
        sum += horiz[static_cast<std::size_t>(yi) * w + x];
      }
      if (img.at(x, y) < sum * inv_area - c) mask.at(x, y) = 1;
    }
  }
  return mask;
}

// Binary dilation with the full 5x5 structuring element, clipped at borders.
inline BinaryMask dilate(const BinaryMask& mask) {
  BinaryMask out(mask.width, mask.height, 0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      const int x0 = std::max(0, x - 2), x1 = std::min(mask.width - 1, x + 2);
      const int y0 = std::max(0, y - 2), y1 = std::min(mask.height - 1, y + 2);
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) out.at(xx, yy) = 1;
    }
  }
  return out;
}

struct Blob {
  std::vector<std::pair<int, int>> pixels;  // (x, y)
  double area = 0.0;
  double perimeter = 0.0;
  double circularity = 0.0;
};

struct BlobSet {
  std::vector<Blob> blobs;
};

namespace detail {

// Moore neighborhood, clockwise starting east.
inline constexpr std::array<std::pair<int, int>, 8> kMooreDirs = {
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

// Outer-contour length by Moore-neighbor tracing: unit steps for edge moves,
// sqrt(2) for diagonal moves. Tracing runs until the (pixel, backtrack)
// state repeats; the closed-cycle length is the contour length, which walks
// both sides of one-pixel-wide spurs as a physical boundary does. A single
// pixel has no path; its perimeter is defined as 4 (the unit square), and
// that floor also applies to 2-pixel dominoes whose center-line trace
// degenerates to a back-and-forth segment.
inline double trace_perimeter(const BinaryMask& grid,
                              const std::vector<std::pair<int, int>>& pixels) {
  if (pixels.size() == 1) return 4.0;

  // Topmost-leftmost pixel; its west neighbor is guaranteed background.
  auto start = *std::min_element(pixels.begin(), pixels.end(),
                                 [](const auto& a, const auto& b) {
                                   return a.second < b.second ||
                                          (a.second == b.second && a.first < b.first);
                                 });
  auto is_fg = [&grid](int x, int y) { return grid.in_bounds(x, y) && grid.at(x, y) != 0; };

  // State = (pixel, direction from pixel to its backtrack cell).
  auto state_key = [](int x, int y, int back_dir) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 40) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(y)) << 8) |
           static_cast<std::uint64_t>(back_dir);
  };

  std::unordered_map<std::uint64_t, double> seen_at_length;
  double length = 0.0;
  std::pair<int, int> cur = start;
  int back_dir = 4;  // west
  const std::size_t guard_max = pixels.size() * 16 + 64;
  for (std::size_t guard = 0; guard < guard_max; ++guard) {
    const std::uint64_t key = state_key(cur.first, cur.second, back_dir);
    auto [it, inserted] = seen_at_length.emplace(key, length);
    if (!inserted) return std::max(length - it->second, 4.0);  // cycle closed

    int found = -1;
    for (int k = 1; k <= 8; ++k) {
      const int dir = (back_dir + k) % 8;
      const int nx = cur.first + kMooreDirs[dir].first;
      const int ny = cur.second + kMooreDirs[dir].second;
      if (is_fg(nx, ny)) {
        found = dir;
        break;
      }
    }
    if (found < 0) return 4.0;  // unreachable for connected blobs of size > 1
    length += (found % 2 == 1) ? std::numbers::sqrt2 : 1.0;
    // New backtrack cell: the last background cell scanned before the move.
    const int prev = (found + 7) % 8;
    const std::pair<int, int> next = {cur.first + kMooreDirs[found].first,
                                      cur.second + kMooreDirs[found].second};
    const std::pair<int, int> back_cell = {cur.first + kMooreDirs[prev].first,
                                           cur.second + kMooreDirs[prev].second};
    int next_back = -1;
    for (int d = 0; d < 8; ++d) {
      if (next.first + kMooreDirs[d].first == back_cell.first &&
          next.second + kMooreDirs[d].second == back_cell.second) {
        next_back = d;
        break;
      }
    }
    if (next_back < 0) next_back = (found + 4) % 8;  // fall back to reverse of the move
    cur = next;
    back_dir = next_back;
  }
  return std::max(length, 4.0);
}

}  // namespace detail

// 8-connected components with circularity 4*pi*area/perimeter^2.
inline BlobSet analyze_blobs(const BinaryMask& mask) {
  BlobSet set;
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y) || seen[static_cast<std::size_t>(y) * w + x]) continue;
      Blob blob;
      stack.clear();
      stack.emplace_back(x, y);
      seen[static_cast<std::size_t>(y) * w + x] = 1;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        blob.pixels.emplace_back(cx, cy);
        for (const auto& [dx, dy] : detail::kMooreDirs) {
          const int nx = cx + dx, ny = cy + dy;
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          std::uint8_t& flag = seen[static_cast<std::size_t>(ny) * w + nx];
          if (flag || !mask.at(nx, ny)) continue;
          flag = 1;
          stack.emplace_back(nx, ny);
        }
      }
      blob.area = static_cast<double>(blob.pixels.size());
      blob.perimeter = detail::trace_perimeter(mask, blob.pixels);
      blob.circularity = 4.0 * std::numbers::pi * blob.area / (blob.perimeter * blob.perimeter);
      set.blobs.push_back(std::move(blob));
    }
  }
  return set;
}

inline BlobSet blob_filter(const BinaryMask& mask, double min_circularity = 0.5) {
  BlobSet all = analyze_blobs(mask);
  BlobSet kept;
  for (Blob& b : all.blobs)
    if (b.circularity >= min_circularity) kept.blobs.push_back(std::move(b));
  return kept;
}

// Full per-image detection chain: threshold -> dilate -> circularity filter,
// rendered back into a binary mask of surviving blobs.
inline BinaryMask detect_fiducial_mask(const GrayImage& img, const FiducialParams& params) {
  const BinaryMask dilated = dilate(adaptive_threshold(img, params.block, params.c));
  const BlobSet kept = blob_filter(dilated, params.min_circularity);
  BinaryMask out(img.width, img.height, 0);
  for (const Blob& blob : kept.blobs)
    for (const auto& [x, y] : blob.pixels) out.at(x, y) = 1;
  return out;
}

struct FiducialSet {
  std::array<Eigen::Vector3d, 5> points;  // ordered by distance to their centroid
  std::vector<double> ordering_key;       // the sorted centroid distances
};

// Lifts per-image fiducial masks to five ordered 3D registration points:
// dense voting marks fiducial cloud points, single-linkage clustering at
// epsilon_c groups them, the five largest clusters survive, and centroids are
// sorted by distance to their common centroid.
inline FiducialSet lift_fiducials(const std::map<int, BinaryMask>& fiducial_masks,
                                  const ReconstructionBundle& bundle,
                                  const std::vector<Eigen::Vector3d>& cloud,
                                  const FiducialParams& params = {}) {
  std::map<int, MaskImage> vote_masks;
  for (const auto& [image_id, mask] : fiducial_masks) {
    MaskImage m(mask.width, mask.height, kMaskBackground);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
      if (mask.data[i]) m.data[i] = kMaskFiducial;
    vote_masks.emplace(image_id, std::move(m));
  }

  const LabeledCloud voted = fuse_dense(cloud, bundle, vote_masks);
  std::vector<Eigen::Vector3d> fid_points;
  for (const LabeledPoint& p : voted.points)
    if (p.label == Label::Fiducial) fid_points.push_back(p.position);

  if (fid_points.empty())
    throw Error(ErrorCode::FewerThanFiveClusters, "found 0 fiducial clusters");

  double eps = params.epsilon_c;
  if (eps <= 0.0) {
    Eigen::Vector3d lo = cloud.front(), hi = cloud.front();
    for (const auto& p : cloud) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    eps = 0.01 * (hi - lo).norm();
  }

  // Single-linkage clustering via union-find over pairs within eps.
  std::vector<std::size_t> parent(fid_points.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  const double eps2 = eps * eps;
  for (std::size_t i = 0; i < fid_points.size(); ++i)
    for (std::size_t j = i + 1; j < fid_points.size(); ++j)
      if ((fid_points[i] - fid_points[j]).squaredNorm() <= eps2) {
        const std::size_t ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }

  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < fid_points.size(); ++i) clusters[find(i)].push_back(i);

  struct Cluster {
    std::size_t size;
    Eigen::Vector3d centroid;
  };
  std::vector<Cluster> all;
  for (const auto& [root, members] : clusters) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (std::size_t idx : members) c += fid_points[idx];
    c /= static_cast<double>(members.size());
    all.push_back({members.size(), c});
  }
  if (all.size() < 5)
    throw Error(ErrorCode::FewerThanFiveClusters,
                "found " + std::to_string(all.size()) + " fiducial clusters, need 5");

  // Five largest; size ties break on centroid lexicographic order.
  std::sort(all.begin(), all.end(), [](const Cluster& a, const Cluster& b) {
    if (a.size != b.size) return a.size > b.size;
    if (a.centroid.x() != b.centroid.x()) return a.centroid.x() < b.centroid.x();
    if (a.centroid.y() != b.centroid.y()) return a.centroid.y() < b.centroid.y();
    return a.centroid.z() < b.centroid.z();
  });
  std::vector<Eigen::Vector3d> centroids;
  for (std::size_t i = 0; i < 5; ++i) centroids.push_back(all[i].centroid);

  const auto perm = order_by_centroid_distance(centroids);
  FiducialSet out;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& c : centroids) mean += c;
  mean /= 5.0;
  for (std::size_t k = 0; k < 5; ++k) {
    out.points[k] = centroids[perm[k]];
    out.ordering_key.push_back((out.points[k] - mean).norm());
  }
  return out;
}

}  // namespace cao
