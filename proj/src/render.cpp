#include "slforce/render.hpp"

#include <cmath>

namespace slforce::sim {

Eigen::Vector3d pixel_ray(const Pinhole& cam, double u, double v) {
  const Eigen::Vector3d dir_cam((u - cam.cx) / cam.f, (v - cam.cy) / cam.f,
                                1.0);
  return cam.rot * dir_cam;
}

bool project(const Pinhole& cam, const Eigen::Vector3d& point, double& u,
             double& v) {
  const Eigen::Vector3d local = cam.rot.transpose() * (point - cam.position);
  if (local.z() <= 1e-12) return false;
  u = cam.f * local.x() / local.z() + cam.cx;
  v = cam.f * local.y() / local.z() + cam.cy;
  return true;
}

HitBuffer cast_camera(const Pinhole& cam, const Bvh& bvh) {
  HitBuffer buf;
  buf.depth.setConstant(cam.height, cam.width, 0.0);
  buf.hit.setConstant(cam.height, cam.width, false);
  buf.points.assign(static_cast<size_t>(cam.height) * cam.width,
                    Eigen::Vector3d::Zero());
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Eigen::Vector3d dir = pixel_ray(cam, u, v);
      Bvh::Hit hit;
      if (!bvh.raycast(cam.position, dir, hit)) continue;
      buf.hit(v, u) = true;
      buf.points[static_cast<size_t>(v) * cam.width + u] = hit.point;
      buf.depth(v, u) =
          (cam.rot.transpose() * (hit.point - cam.position)).z();
    }
  }
  return buf;
}

Rgb shade(const HitBuffer& hits, const Pinhole& cam, const Pinhole& projector,
          const Rgb* pattern, const std::array<double, 3>& albedo) {
  Rgb img(cam.height, cam.width);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      if (!hits.hit(v, u)) continue;
      const Eigen::Vector3d& point =
          hits.points[static_cast<size_t>(v) * cam.width + u];
      double pu, pv;
      if (!project(projector, point, pu, pv)) continue;
      double tr = 1.0, tg = 1.0, tb = 1.0;
      if (pattern != nullptr) {
        const auto iu = static_cast<Eigen::Index>(std::lround(pu));
        const auto iv = static_cast<Eigen::Index>(std::lround(pv));
        if (iu < 0 || iu >= pattern->cols() || iv < 0 || iv >= pattern->rows()) {
          continue;  // outside the projected pattern: unlit
        }
        tr = pattern->r(iv, iu);
        tg = pattern->g(iv, iu);
        tb = pattern->b(iv, iu);
      } else {
        // Uniform white projection, still bounded by the device frustum.
        if (pu < 0.0 || pu >= projector.width || pv < 0.0 ||
            pv >= projector.height) {
          continue;
        }
      }
      img.r(v, u) = albedo[0] * tr;
      img.g(v, u) = albedo[1] * tg;
      img.b(v, u) = albedo[2] * tb;
    }
  }
  return img;
}

void add_pixel_noise(Rgb& image, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return;
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      image.r(r, c) = std::clamp(image.r(r, c) + gaussian(rng, sigma), 0.0, 1.0);
      image.g(r, c) = std::clamp(image.g(r, c) + gaussian(rng, sigma), 0.0, 1.0);
      image.b(r, c) = std::clamp(image.b(r, c) + gaussian(rng, sigma), 0.0, 1.0);
    }
  }
}

}  // namespace slforce::sim
