#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace slforce {

// Greyscale image plane, (rows, cols). Values in [0,1] unless a function
// documents another range.
using Grey = Eigen::ArrayXXd;

// Planar RGB image. Channels always share dimensions.
struct Rgb {
  Grey r, g, b;

  Rgb() = default;
  Rgb(Eigen::Index rows, Eigen::Index cols)
      : r(Grey::Zero(rows, cols)),
        g(Grey::Zero(rows, cols)),
        b(Grey::Zero(rows, cols)) {}

  Eigen::Index rows() const { return r.rows(); }
  Eigen::Index cols() const { return r.cols(); }
  bool same_size(const Rgb& o) const {
    return rows() == o.rows() && cols() == o.cols();
  }
};

struct Hsv {
  double h_deg = 0.0;  // [0, 360)
  double s = 0.0;      // [0, 1]
  double v = 0.0;      // [0, 1]
};

Hsv rgb_to_hsv(double r, double g, double b);
void hsv_to_rgb(double h_deg, double s, double v, double& r, double& g,
                double& b);

// Smallest angular distance between two hues, in degrees ([0, 180]).
double hue_distance_deg(double a_deg, double b_deg);

// Mean-channel luminance scaled to [0, 255]; the intensity domain used by
// the matching costs.
Grey to_grey255(const Rgb& img);

// Error taxonomy; the CLI maps these to exit codes 2/3/4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64; used to derive independent seeds for sub-streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t s = base;
  std::uint64_t x = splitmix64(s);
  s ^= a * 0xff51afd7ed558ccdULL;
  x ^= splitmix64(s);
  s ^= b * 0xc4ceb9fe1a85ec53ULL;
  return x ^ splitmix64(s);
}

// Canonical uniform [0,1) draw; 53 mantissa bits of one engine output.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Bounded integer draw. Modulo on the raw 64-bit stream; bias is
// negligible for the bounds used here and the stream stays portable.
inline std::uint64_t draw_index(std::mt19937_64& g, std::uint64_t bound) {
  return g() % bound;
}

double gaussian(std::mt19937_64& g, double sigma);

}  // namespace slforce
