#pragma once

#include "slforce/core.hpp"
#include "slforce/stereo.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace slforce::geom {

// Rectified pinhole pair. Image y points down; right-handed camera frame
// with +z forward, +x toward the right camera.
struct StereoRig {
  double focal_px = 0.0;
  double cx = 0.0, cy = 0.0;
  double baseline_m = 0.0;
};

void validate(const StereoRig& rig);

// Points as rows. Meters in camera frame unless stated otherwise.
using Cloud = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct PointCloud {
  Cloud pts;
  std::vector<std::array<int, 2>> source_px;  // (row, col); may be empty
};

struct TriangulateResult {
  PointCloud cloud;
  int skipped_nonpositive = 0;  // valid pixels with d <= 0
};

TriangulateResult triangulate(const stereo::DisparityMap& disparity,
                              const StereoRig& rig);

// Largest pairwise distance. Exact O(k^2) up to 4096 points; above that,
// evaluated over extreme points along a fixed direction fan.
double max_pairwise_distance(const Cloud& pts);

struct NormalizedCloud {
  Cloud pts;
  Eigen::Vector3d centroid_m = Eigen::Vector3d::Zero();
  double scale_m = 0.0;  // the D_max divisor
};

// Weighted centroid subtraction followed by division by the maximum
// pairwise extent. Throws DataError for < 2 points or a degenerate extent.
NormalizedCloud normalize_cloud(const Cloud& pts,
                                const Eigen::VectorXd* weights = nullptr);

// Uniform sample of exactly n_points: without replacement when the cloud
// is large enough, with replacement otherwise. Deterministic in the seed.
Cloud sample_points(const Cloud& pts, int n_points, std::uint64_t seed);

}  // namespace slforce::geom
