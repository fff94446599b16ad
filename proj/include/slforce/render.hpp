#pragma once

#include "slforce/core.hpp"
#include "slforce/mesh.hpp"

#include <array>
#include <optional>

namespace slforce::sim {

// Pinhole device. `rot` maps camera coordinates to world coordinates;
// camera looks along its +z, image y runs down. Pixel (row v, col u)
// samples the ray through continuous image coordinates (u, v).
struct Pinhole {
  int width = 0, height = 0;
  double f = 0.0;
  double cx = 0.0, cy = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
};

Eigen::Vector3d pixel_ray(const Pinhole& cam, double u, double v);

// Projects a world point; false when the point lies at or behind the
// device plane.
bool project(const Pinhole& cam, const Eigen::Vector3d& point, double& u,
             double& v);

struct HitBuffer {
  Eigen::ArrayXXd depth;                                    // z in cam frame
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> hit;
  std::vector<Eigen::Vector3d> points;                      // row-major
};

HitBuffer cast_camera(const Pinhole& cam, const Bvh& bvh);

// Surface color = albedo (x) projected texel, nearest-texel lookup; black
// where the surface is unlit or nothing is hit. A null pattern projects
// uniform white.
Rgb shade(const HitBuffer& hits, const Pinhole& cam, const Pinhole& projector,
          const Rgb* pattern, const std::array<double, 3>& albedo);

void add_pixel_noise(Rgb& image, double sigma, std::mt19937_64& rng);

}  // namespace slforce::sim
