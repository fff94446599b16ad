#include "slforce/geometry.hpp"

#include <cmath>
#include <numeric>

namespace slforce::geom {

void validate(const StereoRig& rig) {
  if (!(rig.focal_px > 0.0)) {
    throw std::invalid_argument("stereo rig: focal length must be positive");
  }
  if (!(rig.baseline_m > 0.0)) {
    throw std::invalid_argument("stereo rig: baseline must be positive");
  }
}

TriangulateResult triangulate(const stereo::DisparityMap& disparity,
                              const StereoRig& rig) {
  validate(rig);
  TriangulateResult out;
  const int h = disparity.height();
  const int w = disparity.width();
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(static_cast<size_t>(h) * w / 4);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!disparity.valid(v, u)) continue;
      const double d = disparity.d(v, u);
      if (d <= 0.0) {
        ++out.skipped_nonpositive;
        continue;
      }
      const double z = rig.focal_px * rig.baseline_m / d;
      pts.emplace_back((u - rig.cx) * z / rig.focal_px,
                       (v - rig.cy) * z / rig.focal_px, z);
      out.cloud.source_px.push_back({v, u});
    }
  }
  out.cloud.pts.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (size_t i = 0; i < pts.size(); ++i) {
    out.cloud.pts.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  }
  return out;
}

namespace {

double exact_max_pairwise(const Cloud& pts) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pts.rows(); ++j) {
      best = std::max(best, (pts.row(i) - pts.row(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

}  // namespace

double max_pairwise_distance(const Cloud& pts) {
  const Eigen::Index k = pts.rows();
  if (k < 2) return 0.0;
  if (k <= 4096) return exact_max_pairwise(pts);

  // Diameter candidates: extreme points along a fan of directions. The
  // exact quadratic pass then runs on this small candidate set.
  std::vector<Eigen::Vector3d> dirs;
  for (int a = -1; a <= 1; ++a) {
    for (int b = -1; b <= 1; ++b) {
      for (int c = -1; c <= 1; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        dirs.emplace_back(Eigen::Vector3d(a, b, c).normalized());
      }
    }
  }
  std::vector<Eigen::Index> cand;
  for (const auto& dir : dirs) {
    Eigen::Index lo = 0, hi = 0;
    double lo_v = pts.row(0).dot(dir), hi_v = lo_v;
    for (Eigen::Index i = 1; i < k; ++i) {
      const double v = pts.row(i).dot(dir);
      if (v < lo_v) {
        lo_v = v;
        lo = i;
      }
      if (v > hi_v) {
        hi_v = v;
        hi = i;
      }
    }
    cand.push_back(lo);
    cand.push_back(hi);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  Cloud sub(static_cast<Eigen::Index>(cand.size()), 3);
  for (size_t i = 0; i < cand.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = pts.row(cand[i]);
  }
  return exact_max_pairwise(sub);
}

NormalizedCloud normalize_cloud(const Cloud& pts,
                                const Eigen::VectorXd* weights) {
  if (pts.rows() < 2) {
    throw DataError("normalize_cloud: need at least two points");
  }
  Eigen::Vector3d centroid;
  if (weights != nullptr) {
    if (weights->size() != pts.rows()) {
      throw std::invalid_argument("normalize_cloud: weight count mismatch");
    }
    const double total = weights->sum();
    if (!(total > 0.0)) {
      throw std::invalid_argument("normalize_cloud: weights must sum > 0");
    }
    centroid = (pts.transpose() * *weights) / total;
  } else {
    centroid = pts.colwise().mean();
  }

  NormalizedCloud out;
  out.centroid_m = centroid;
  out.pts = pts.rowwise() - centroid.transpose();
  out.scale_m = max_pairwise_distance(pts);
  if (!(out.scale_m > 0.0)) {
    throw DataError("normalize_cloud: degenerate cloud (zero extent)");
  }
  out.pts /= out.scale_m;
  return out;
}

Cloud sample_points(const Cloud& pts, int n_points, std::uint64_t seed) {
  if (n_points <= 0) {
    throw std::invalid_argument("sample_points: n_points must be positive");
  }
  const Eigen::Index k = pts.rows();
  if (k == 0) throw DataError("sample_points: empty cloud");

  std::mt19937_64 rng(seed);
  Cloud out(n_points, 3);
  if (k >= n_points) {
    // Partial Fisher-Yates over an index vector.
    std::vector<Eigen::Index> idx(static_cast<size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n_points; ++i) {
      const auto j =
          i + static_cast<Eigen::Index>(draw_index(rng, static_cast<std::uint64_t>(k - i)));
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
      out.row(i) = pts.row(idx[static_cast<size_t>(i)]);
    }
  } else {
    for (int i = 0; i < n_points; ++i) {
      out.row(i) = pts.row(static_cast<Eigen::Index>(
          draw_index(rng, static_cast<std::uint64_t>(k))));
    }
  }
  return out;
}

}  // namespace slforce::geom
