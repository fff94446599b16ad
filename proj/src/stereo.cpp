#include "slforce/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slforce::stereo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Half-sample interpolation bounds over {I(x-1/2), I(x), I(x+1/2)} with
// replicated borders.
void half_sample_bounds(const Eigen::ArrayXd& row, Eigen::ArrayXd& lo,
                        Eigen::ArrayXd& hi) {
  const int n = static_cast<int>(row.size());
  lo.resize(n);
  hi.resize(n);
  for (int x = 0; x < n; ++x) {
    const double c = row[x];
    const double lm = 0.5 * (c + row[std::max(x - 1, 0)]);
    const double rp = 0.5 * (c + row[std::min(x + 1, n - 1)]);
    lo[x] = std::min({c, lm, rp});
    hi[x] = std::max({c, lm, rp});
  }
}

inline double bt_one_sided(double probe, double target_lo, double target_hi) {
  return std::max({0.0, probe - target_hi, target_lo - probe});
}

}  // namespace

Grey sobel_x(const Grey& img) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  if (h < 3 || w < 3) {
    throw std::invalid_argument("sobel_x: image smaller than the 3x3 kernel");
  }
  Grey out(h, w);
  for (int r = 0; r < h; ++r) {
    const int rm = std::max(r - 1, 0);
    const int rp = std::min(r + 1, h - 1);
    for (int c = 0; c < w; ++c) {
      const int cm = std::max(c - 1, 0);
      const int cp = std::min(c + 1, w - 1);
      const double resp = (img(rm, cp) + 2.0 * img(r, cp) + img(rp, cp)) -
                          (img(rm, cm) + 2.0 * img(r, cm) + img(rp, cm));
      out(r, c) = std::fabs(resp);
    }
  }
  return out;
}

double bt_cost(const Eigen::ArrayXd& left_row, const Eigen::ArrayXd& right_row,
               int col, int d) {
  const int w_l = static_cast<int>(left_row.size());
  const int w_r = static_cast<int>(right_row.size());
  const int rc = col - d;
  if (col < 0 || col >= w_l || rc < 0 || rc >= w_r) return kInvalidCost;

  const auto bounds_at = [](const Eigen::ArrayXd& row, int x, double& lo,
                            double& hi) {
    const int n = static_cast<int>(row.size());
    const double c = row[x];
    const double lm = 0.5 * (c + row[std::max(x - 1, 0)]);
    const double rp = 0.5 * (c + row[std::min(x + 1, n - 1)]);
    lo = std::min({c, lm, rp});
    hi = std::max({c, lm, rp});
  };
  double rlo, rhi, llo, lhi;
  bounds_at(right_row, rc, rlo, rhi);
  bounds_at(left_row, col, llo, lhi);
  return std::min(bt_one_sided(left_row[col], rlo, rhi),
                  bt_one_sided(right_row[rc], llo, lhi));
}

CostVolume build_cost_volume(const Grey& left, const Grey& right, int d_min,
                             int d_max) {
  if (d_min > d_max) {
    throw std::invalid_argument("build_cost_volume: d_min > d_max");
  }
  if (left.rows() != right.rows() || left.cols() != right.cols()) {
    throw std::invalid_argument("build_cost_volume: image size mismatch");
  }
  const int h = static_cast<int>(left.rows());
  const int w = static_cast<int>(left.cols());
  const Grey left_sobel = sobel_x(left);
  const Grey right_sobel = sobel_x(right);

  CostVolume vol;
  vol.width = w;
  vol.height = h;
  vol.d_min = d_min;
  vol.d_max = d_max;
  vol.costs.assign(static_cast<size_t>(h) * w * vol.levels(), kInvalidCost);

  Eigen::ArrayXd lraw, rraw, lsob, rsob;
  Eigen::ArrayXd lraw_lo, lraw_hi, rraw_lo, rraw_hi;
  Eigen::ArrayXd lsob_lo, lsob_hi, rsob_lo, rsob_hi;
  for (int r = 0; r < h; ++r) {
    lraw = left.row(r).transpose();
    rraw = right.row(r).transpose();
    lsob = left_sobel.row(r).transpose();
    rsob = right_sobel.row(r).transpose();
    half_sample_bounds(lraw, lraw_lo, lraw_hi);
    half_sample_bounds(rraw, rraw_lo, rraw_hi);
    half_sample_bounds(lsob, lsob_lo, lsob_hi);
    half_sample_bounds(rsob, rsob_lo, rsob_hi);
    for (int c = 0; c < w; ++c) {
      double* cell = &vol.at(r, c, d_min);
      for (int d = d_min; d <= d_max; ++d) {
        const int rc = c - d;
        if (rc < 0 || rc >= w) continue;
        const double raw =
            std::min(bt_one_sided(lraw[c], rraw_lo[rc], rraw_hi[rc]),
                     bt_one_sided(rraw[rc], lraw_lo[c], lraw_hi[c]));
        const double sob =
            std::min(bt_one_sided(lsob[c], rsob_lo[rc], rsob_hi[rc]),
                     bt_one_sided(rsob[rc], lsob_lo[c], lsob_hi[c]));
        cell[d - d_min] = raw + sob;
      }
    }
  }
  return vol;
}

CostVolume build_cost_volume(const StereoPair& pair, int d_min, int d_max) {
  if (!pair.rectified) {
    throw std::invalid_argument("build_cost_volume: pair must be rectified");
  }
  return build_cost_volume(to_grey255(pair.left), to_grey255(pair.right),
                           d_min, d_max);
}

std::vector<std::array<int, 2>> eight_path_directions() {
  return {{{0, 1}, {0, -1}, {1, 0}, {-1, 0}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
}

std::vector<std::array<int, 2>> four_path_directions() {
  return {{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};
}

void validate(const SgmParams& params) {
  if (!(params.p1 > 0.0) || params.p1 > params.p2) {
    throw std::invalid_argument("sgm params: need 0 < p1 <= p2");
  }
  if (params.path_directions.empty()) {
    throw std::invalid_argument("sgm params: no path directions");
  }
  for (size_t i = 0; i < params.path_directions.size(); ++i) {
    const auto& dir = params.path_directions[i];
    if (dir[0] == 0 && dir[1] == 0) {
      throw std::invalid_argument("sgm params: zero path direction");
    }
    for (size_t j = i + 1; j < params.path_directions.size(); ++j) {
      if (dir == params.path_directions[j]) {
        throw std::invalid_argument("sgm params: duplicate path direction");
      }
    }
  }
}

CostVolume aggregate_paths(const CostVolume& volume, const SgmParams& params) {
  validate(params);
  const int h = volume.height;
  const int w = volume.width;
  const int levels = volume.levels();
  const double p1 = params.p1;
  const double p2 = params.p2;

  CostVolume total;
  total.width = w;
  total.height = h;
  total.d_min = volume.d_min;
  total.d_max = volume.d_max;
  total.costs.assign(volume.costs.size(), 0.0);

  // Rolling rows of L_r; directions with a row component only ever look at
  // the previous row, in-row directions only at the previous column.
  std::vector<double> prev_row(static_cast<size_t>(w) * levels);
  std::vector<double> cur_row(static_cast<size_t>(w) * levels);

  for (const auto& dir : params.path_directions) {
    const int dr = dir[0];
    const int dc = dir[1];
    const int r0 = dr >= 0 ? 0 : h - 1;
    const int r1 = dr >= 0 ? h : -1;
    const int rstep = dr >= 0 ? 1 : -1;
    const int c0 = dc >= 0 ? 0 : w - 1;
    const int c1 = dc >= 0 ? w : -1;
    const int cstep = dc >= 0 ? 1 : -1;

    for (int r = r0; r != r1; r += rstep) {
      for (int c = c0; c != c1; c += cstep) {
        const int pr = r - dr;
        const int pc = c - dc;
        const double* cost = &volume.at(r, c, volume.d_min);
        double* out = &cur_row[static_cast<size_t>(c) * levels];
        if (pr < 0 || pr >= h || pc < 0 || pc >= w) {
          for (int k = 0; k < levels; ++k) out[k] = cost[k];
        } else {
          const double* prev = dr == 0
                                   ? &cur_row[static_cast<size_t>(pc) * levels]
                                   : &prev_row[static_cast<size_t>(pc) * levels];
          double min_prev = prev[0];
          for (int k = 1; k < levels; ++k) min_prev = std::min(min_prev, prev[k]);
          for (int k = 0; k < levels; ++k) {
            double best = prev[k];
            const double lo = k > 0 ? prev[k - 1] : kInf;
            const double hi = k + 1 < levels ? prev[k + 1] : kInf;
            best = std::min(best, std::min(lo, hi) + p1);
            best = std::min(best, min_prev + p2);
            out[k] = cost[k] + best - min_prev;
          }
        }
      }
      double* acc = &total.costs[static_cast<size_t>(r) * w * levels];
      for (size_t k = 0; k < static_cast<size_t>(w) * levels; ++k) {
        acc[k] += cur_row[k];
      }
      if (dr != 0) std::swap(prev_row, cur_row);
    }
  }
  return total;
}

DisparityMap select_disparity(const CostVolume& aggregated) {
  DisparityMap map;
  map.d_min = aggregated.d_min;
  map.d_max = aggregated.d_max;
  map.d.setConstant(aggregated.height, aggregated.width,
                    std::numeric_limits<double>::quiet_NaN());
  map.tag.setConstant(aggregated.height, aggregated.width,
                      static_cast<std::uint8_t>(MatchTag::Unmatched));
  const int levels = aggregated.levels();
  for (int r = 0; r < aggregated.height; ++r) {
    for (int c = 0; c < aggregated.width; ++c) {
      const double* cell = &aggregated.at(r, c, aggregated.d_min);
      int best_k = 0;
      double best = cell[0];
      for (int k = 1; k < levels; ++k) {
        if (cell[k] < best) {
          best = cell[k];
          best_k = k;
        }
      }
      if (best < kInvalidCost) {
        map.d(r, c) = aggregated.d_min + best_k;
        map.tag(r, c) = static_cast<std::uint8_t>(MatchTag::Candidate);
      }
    }
  }
  return map;
}

BaseColorResult remove_base_color(const Rgb& captured, const Rgb& reference,
                                  double min_reference) {
  if (!captured.same_size(reference)) {
    throw std::invalid_argument("remove_base_color: dimension mismatch");
  }
  const Eigen::Index h = captured.rows();
  const Eigen::Index w = captured.cols();
  BaseColorResult out;
  out.image = Rgb(h, w);
  out.correctable.setConstant(h, w, true);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double rr = reference.r(r, c);
      const double rg = reference.g(r, c);
      const double rb = reference.b(r, c);
      if (rr < min_reference || rg < min_reference || rb < min_reference) {
        out.correctable(r, c) = false;
        continue;
      }
      out.image.r(r, c) = std::clamp(captured.r(r, c) / rr, 0.0, 1.0);
      out.image.g(r, c) = std::clamp(captured.g(r, c) / rg, 0.0, 1.0);
      out.image.b(r, c) = std::clamp(captured.b(r, c) / rb, 0.0, 1.0);
    }
  }
  return out;
}

DisparityMap verify_matches(const DisparityMap& disparity,
                            const Eigen::ArrayXXi& left_ids,
                            const Eigen::ArrayXXi& right_ids, int radius,
                            const CostVolume* aggregated) {
  if (left_ids.rows() != disparity.d.rows() ||
      left_ids.cols() != disparity.d.cols() ||
      right_ids.rows() != disparity.d.rows() ||
      right_ids.cols() != disparity.d.cols()) {
    throw std::invalid_argument("verify_matches: id map size mismatch");
  }
  DisparityMap out = disparity;
  const int h = out.height();
  const int w = out.width();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (out.tag_at(r, c) == MatchTag::Unmatched) continue;
      const int id = left_ids(r, c);
      const int rc = c - static_cast<int>(std::lround(out.d(r, c)));
      if (id != pattern::kUndecodable && rc >= 0 && rc < w &&
          right_ids(r, rc) == id) {
        out.tag(r, c) = static_cast<std::uint8_t>(MatchTag::Verified);
        continue;
      }
      bool relocated = false;
      if (id != pattern::kUndecodable) {
        int best_rc = -1;
        double best_cost = kInf;
        for (int k = 1; k <= radius; ++k) {
          for (const int cand : {rc - k, rc + k}) {
            if (cand < 0 || cand >= w) continue;
            if (right_ids(r, cand) != id) continue;
            const int nd = c - cand;
            if (nd < out.d_min || nd > out.d_max) continue;
            if (aggregated != nullptr) {
              const double s = aggregated->at(r, c, nd);
              if (s < best_cost) {
                best_cost = s;
                best_rc = cand;
              }
            } else if (best_rc < 0) {
              best_rc = cand;  // nearest wins; left candidate on ties
            }
          }
          if (best_rc >= 0 && aggregated == nullptr) break;
        }
        if (best_rc >= 0) {
          out.d(r, c) = c - best_rc;
          out.tag(r, c) = static_cast<std::uint8_t>(MatchTag::Relocated);
          relocated = true;
        }
      }
      if (!relocated) {
        out.d(r, c) = std::numeric_limits<double>::quiet_NaN();
        out.tag(r, c) = static_cast<std::uint8_t>(MatchTag::Rejected);
      }
    }
  }
  return out;
}

DisparityMap match(const StereoPair& pair, const pattern::PatternSpec& spec,
                   const MatchParams& params, const Rgb* left_reference,
                   const Rgb* right_reference) {
  if (!pair.rectified) {
    throw std::invalid_argument("match: pair must be rectified");
  }
  if (!pair.left.same_size(pair.right)) {
    throw std::invalid_argument("match: image size mismatch");
  }
  Rgb left = pair.left;
  Rgb right = pair.right;
  if (left_reference != nullptr) {
    left = remove_base_color(pair.left, *left_reference).image;
  }
  if (right_reference != nullptr) {
    right = remove_base_color(pair.right, *right_reference).image;
  }
  const Eigen::ArrayXXi left_ids = pattern::decode_fringes(left, spec, params.decode);
  const Eigen::ArrayXXi right_ids =
      pattern::decode_fringes(right, spec, params.decode);
  const CostVolume cost =
      build_cost_volume(to_grey255(left), to_grey255(right), params.d_min,
                        params.d_max);
  const CostVolume aggregated = aggregate_paths(cost, params.sgm);
  const DisparityMap wta = select_disparity(aggregated);
  return verify_matches(wta, left_ids, right_ids, params.relocation_radius,
                        &aggregated);
}

}  // namespace slforce::stereo
