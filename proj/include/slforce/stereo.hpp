#pragma once

#include "slforce/core.hpp"
#include "slforce/pattern.hpp"

#include <array>
#include <vector>

namespace slforce::stereo {

// Sentinel cost for correspondences that leave the frame. Large but finite
// so path aggregation stays well defined.
constexpr double kInvalidCost = 1e30;

struct StereoPair {
  Rgb left, right;
  bool rectified = true;
};

// Horizontal Sobel magnitude, borders replicated. Input and output share
// the intensity scale of the input.
Grey sobel_x(const Grey& img);

// Birchfield-Tomasi sampling-insensitive dissimilarity between left pixel
// `col` and right pixel `col - d`, symmetric min over both directions.
// Out-of-frame correspondences return kInvalidCost.
double bt_cost(const Eigen::ArrayXd& left_row, const Eigen::ArrayXd& right_row,
               int col, int d);

struct CostVolume {
  int width = 0, height = 0;
  int d_min = 0, d_max = 0;
  std::vector<double> costs;  // ((row * width) + col) * levels + (d - d_min)

  int levels() const { return d_max - d_min + 1; }
  double& at(int row, int col, int d) {
    return costs[(static_cast<size_t>(row) * width + col) * levels() +
                 (d - d_min)];
  }
  const double& at(int row, int col, int d) const {
    return costs[(static_cast<size_t>(row) * width + col) * levels() +
                 (d - d_min)];
  }
};

// Summed BT cost over raw intensities and their horizontal Sobel response.
CostVolume build_cost_volume(const Grey& left, const Grey& right, int d_min,
                             int d_max);
CostVolume build_cost_volume(const StereoPair& pair, int d_min, int d_max);

std::vector<std::array<int, 2>> eight_path_directions();
std::vector<std::array<int, 2>> four_path_directions();

struct SgmParams {
  double p1 = 8.0;  // penalty for |Δd| == 1 along a path
  double p2 = 32.0; // penalty for larger jumps
  std::vector<std::array<int, 2>> path_directions = eight_path_directions();
};

void validate(const SgmParams& params);

// Directional path aggregation; returns S = sum over paths of L_r.
CostVolume aggregate_paths(const CostVolume& volume, const SgmParams& params);

enum class MatchTag : std::uint8_t {
  Unmatched = 0,  // no valid disparity candidate at all
  Candidate,      // WTA winner, not yet verified
  Verified,       // fringe ids agree
  Relocated,      // re-matched to a neighboring pixel with the correct id
  Rejected,       // id mismatch and no replacement found
};

struct DisparityMap {
  Eigen::ArrayXXd d;  // NaN where invalid
  Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> tag;
  int d_min = 0, d_max = 0;

  int width() const { return static_cast<int>(d.cols()); }
  int height() const { return static_cast<int>(d.rows()); }
  bool valid(int row, int col) const { return std::isfinite(d(row, col)); }
  MatchTag tag_at(int row, int col) const {
    return static_cast<MatchTag>(tag(row, col));
  }
};

// Winner-take-all over the aggregated volume; ties break toward the
// smaller disparity.
DisparityMap select_disparity(const CostVolume& aggregated);

struct BaseColorResult {
  Rgb image;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> correctable;
};

// Per-channel division by a white-projection reference (diagonal
// reflectance model), clamped to [0,1]. Pixels with a zero reference
// channel are flagged uncorrectable and left black.
BaseColorResult remove_base_color(const Rgb& captured, const Rgb& reference,
                                  double min_reference = 1e-6);

// Fringe-id verification of candidate matches. When ids disagree, the
// right scanline within +-radius of the original correspondent is searched
// for a pixel with the matching id; among those the lowest aggregated cost
// wins (nearest offset when no volume is supplied). Relocated disparities
// stay within [d_min, d_max].
DisparityMap verify_matches(const DisparityMap& disparity,
                            const Eigen::ArrayXXi& left_ids,
                            const Eigen::ArrayXXi& right_ids, int radius,
                            const CostVolume* aggregated = nullptr);

struct MatchParams {
  SgmParams sgm;
  int d_min = 0;
  int d_max = 64;
  int relocation_radius = 16;
  pattern::DecodeParams decode;
};

// Full two-step pipeline: base-color removal, fringe decoding on both
// views, BT+Sobel cost volume, path aggregation, WTA, id verification.
// Null references skip the base-color step (inputs already corrected).
DisparityMap match(const StereoPair& pair, const pattern::PatternSpec& spec,
                   const MatchParams& params, const Rgb* left_reference,
                   const Rgb* right_reference);

}  // namespace slforce::stereo
