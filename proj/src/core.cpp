#include "slforce/core.hpp"

#include <algorithm>
#include <cmath>

namespace slforce {

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;

  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) {
    out.h_deg = 0.0;  // hue undefined on greys; callers gate on saturation
    return out;
  }
  double h;
  if (mx == r) {
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  out.h_deg = h;
  return out;
}

void hsv_to_rgb(double h_deg, double s, double v, double& r, double& g,
                double& b) {
  const double h = std::fmod(h_deg < 0.0 ? h_deg + 360.0 : h_deg, 360.0) / 60.0;
  const int i = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

double hue_distance_deg(double a_deg, double b_deg) {
  double d = std::fabs(std::fmod(a_deg - b_deg, 360.0));
  if (d > 180.0) d = 360.0 - d;
  return d;
}

Grey to_grey255(const Rgb& img) {
  return (img.r + img.g + img.b) * (255.0 / 3.0);
}

double gaussian(std::mt19937_64& g, double sigma) {
  // Box-Muller on the canonical uniform stream; deterministic and portable.
  double u1 = uniform01(g);
  double u2 = uniform01(g);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return sigma * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * M_PI * u2);
}

}  // namespace slforce
