#include "slforce/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slforce::sim {

double mesh_volume(const TriMesh& mesh) {
  double six_v = 0.0;
  for (const auto& t : mesh.tris) {
    const Eigen::Vector3d& a = mesh.vertices[static_cast<size_t>(t[0])];
    const Eigen::Vector3d& b = mesh.vertices[static_cast<size_t>(t[1])];
    const Eigen::Vector3d& c = mesh.vertices[static_cast<size_t>(t[2])];
    six_v += a.dot(b.cross(c));
  }
  return six_v / 6.0;
}

void transform_mesh(TriMesh& mesh, const Eigen::Matrix3d& rot,
                    const Eigen::Vector3d& translation) {
  for (auto& v : mesh.vertices) v = rot * v + translation;
}

void validate(const TubeModel& tube) {
  if (!(tube.rest_length_m > 0.0) || !(tube.radius_m > 0.0)) {
    throw std::invalid_argument("tube: non-positive dimensions");
  }
  if (tube.rings < 1 || tube.segments < 2) {
    throw std::invalid_argument("tube: too coarse a tessellation");
  }
  if (std::fabs(tube.axis.norm() - 1.0) > 1e-9 ||
      std::fabs(tube.facing.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("tube: axis and facing must be unit vectors");
  }
  if (std::fabs(tube.axis.dot(tube.facing)) > 1e-9) {
    throw std::invalid_argument("tube: axis and facing must be orthogonal");
  }
}

TriMesh tube_mesh(const TubeModel& tube) {
  validate(tube);
  const Eigen::Vector3d a = tube.axis;
  const Eigen::Vector3d n2 = tube.facing;           // opening direction
  const Eigen::Vector3d n1 = n2.cross(a).normalized();
  const double half = tube.rest_length_m / 2.0;
  const double r = tube.radius_m;
  const int nr = tube.rings;
  const int ns = tube.segments;

  TriMesh mesh;
  // Curved shell vertices: (nr + 1) x (ns + 1) grid; theta sweeps the half
  // turn whose midpoint faces `facing`.
  const auto ring_point = [&](int i, int j) {
    const double t = -half + tube.rest_length_m * i / nr;
    const double theta = M_PI * j / ns;  // 0..pi
    const Eigen::Vector3d radial =
        r * (std::cos(theta) * n1 + std::sin(theta) * n2);
    return tube.center + t * a + radial;
  };
  for (int i = 0; i <= nr; ++i) {
    for (int j = 0; j <= ns; ++j) mesh.vertices.push_back(ring_point(i, j));
  }
  const auto vid = [&](int i, int j) { return i * (ns + 1) + j; };
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < ns; ++j) {
      mesh.tris.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.tris.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }

  // Flat closing face through the axis plane.
  const int base_flat = static_cast<int>(mesh.vertices.size());
  for (int i = 0; i <= nr; ++i) {
    const double t = -half + tube.rest_length_m * i / nr;
    mesh.vertices.push_back(tube.center + t * a + r * n1);
    mesh.vertices.push_back(tube.center + t * a - r * n1);
  }
  for (int i = 0; i < nr; ++i) {
    const int p0 = base_flat + 2 * i;
    const int m0 = base_flat + 2 * i + 1;
    const int p1 = base_flat + 2 * (i + 1);
    const int m1 = base_flat + 2 * (i + 1) + 1;
    mesh.tris.push_back({p0, p1, m1});
    mesh.tris.push_back({p0, m1, m0});
  }

  // End caps: fans around the axis points.
  for (int side = 0; side < 2; ++side) {
    const int i = side == 0 ? 0 : nr;
    const double t = side == 0 ? -half : half;
    const int center_id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(tube.center + t * a);
    for (int j = 0; j < ns; ++j) {
      if (side == 0) {
        mesh.tris.push_back({center_id, vid(i, j), vid(i, j + 1)});
      } else {
        mesh.tris.push_back({center_id, vid(i, j + 1), vid(i, j)});
      }
    }
  }

  // Orient every face outward; the solid is star-shaped around its
  // centroid, which keeps the signed volume equal to the enclosed volume.
  const Eigen::Vector3d interior =
      tube.center + (4.0 / (3.0 * M_PI)) * r * n2;
  for (auto& tri : mesh.tris) {
    const Eigen::Vector3d& va = mesh.vertices[static_cast<size_t>(tri[0])];
    const Eigen::Vector3d& vb = mesh.vertices[static_cast<size_t>(tri[1])];
    const Eigen::Vector3d& vc = mesh.vertices[static_cast<size_t>(tri[2])];
    const Eigen::Vector3d normal = (vb - va).cross(vc - va);
    const Eigen::Vector3d centroid = (va + vb + vc) / 3.0;
    if (normal.dot(centroid - interior) < 0.0) std::swap(tri[1], tri[2]);
  }
  return mesh;
}

TriMesh deform_tube(const TubeModel& tube, double elongation_m) {
  validate(tube);
  if (elongation_m < 0.0 || elongation_m >= tube.rest_length_m) {
    throw std::invalid_argument(
        "deform_tube: elongation must lie in [0, rest_length)");
  }
  TriMesh mesh = tube_mesh(tube);
  if (elongation_m == 0.0) return mesh;
  const double s = (tube.rest_length_m + elongation_m) / tube.rest_length_m;
  const double radial_scale = 1.0 / std::sqrt(s);
  for (auto& v : mesh.vertices) {
    const Eigen::Vector3d rel = v - tube.center;
    const double along = rel.dot(tube.axis);
    const Eigen::Vector3d radial = rel - along * tube.axis;
    v = tube.center + s * along * tube.axis + radial_scale * radial;
  }
  return mesh;
}

TriMesh plane_mesh(const Eigen::Vector3d& center, double half_x,
                   double half_y) {
  TriMesh mesh;
  const Eigen::Vector3d dx(half_x, 0, 0), dy(0, half_y, 0);
  mesh.vertices = {center - dx - dy, center + dx - dy, center + dx + dy,
                   center - dx + dy};
  mesh.tris = {{0, 1, 2}, {0, 2, 3}};
  return mesh;
}

Bvh::Bvh(const TriMesh& mesh) : mesh_(mesh) {
  const int n = static_cast<int>(mesh.tris.size());
  order_.resize(static_cast<size_t>(n));
  std::iota(order_.begin(), order_.end(), 0);
  std::vector<Eigen::Vector3d> centroids(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& t = mesh.tris[static_cast<size_t>(i)];
    centroids[static_cast<size_t>(i)] =
        (mesh.vertices[static_cast<size_t>(t[0])] +
         mesh.vertices[static_cast<size_t>(t[1])] +
         mesh.vertices[static_cast<size_t>(t[2])]) /
        3.0;
  }
  if (n > 0) build(0, n, centroids);
}

int Bvh::build(int first, int count, std::vector<Eigen::Vector3d>& centroids) {
  Node node;
  node.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = first; i < first + count; ++i) {
    const auto& t = mesh_.tris[static_cast<size_t>(order_[static_cast<size_t>(i)])];
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d& v = mesh_.vertices[static_cast<size_t>(t[k])];
      node.lo = node.lo.cwiseMin(v);
      node.hi = node.hi.cwiseMax(v);
    }
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (count <= 4) {
    nodes_[static_cast<size_t>(id)].first = first;
    nodes_[static_cast<size_t>(id)].count = count;
    return id;
  }
  const Eigen::Vector3d extent = node.hi - node.lo;
  int axis = 0;
  extent.maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid,
                   order_.begin() + first + count, [&](int lhs, int rhs) {
                     return centroids[static_cast<size_t>(lhs)][axis] <
                            centroids[static_cast<size_t>(rhs)][axis];
                   });
  const int left = build(first, mid - first, centroids);
  const int right = build(mid, first + count - mid, centroids);
  nodes_[static_cast<size_t>(id)].left = left;
  nodes_[static_cast<size_t>(id)].right = right;
  return id;
}

namespace {

inline bool ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& inv_dir,
                    const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                    double t_max) {
  double t0 = 1e-9, t1 = t_max;
  for (int k = 0; k < 3; ++k) {
    const double a = (lo[k] - origin[k]) * inv_dir[k];
    const double b = (hi[k] - origin[k]) * inv_dir[k];
    t0 = std::max(t0, std::min(a, b));
    t1 = std::min(t1, std::max(a, b));
  }
  return t0 <= t1;
}

// Moller-Trumbore.
inline bool ray_tri(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                    const Eigen::Vector3d& v0, const Eigen::Vector3d& v1,
                    const Eigen::Vector3d& v2, double& t_out) {
  const Eigen::Vector3d e1 = v1 - v0;
  const Eigen::Vector3d e2 = v2 - v0;
  const Eigen::Vector3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::fabs(det) < 1e-14) return false;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = origin - v0;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  const double t = e2.dot(q) * inv;
  if (t <= 1e-9) return false;
  t_out = t;
  return true;
}

}  // namespace

bool Bvh::raycast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                  Hit& hit) const {
  if (nodes_.empty()) return false;
  const Eigen::Vector3d inv_dir = dir.cwiseInverse();
  double best = std::numeric_limits<double>::infinity();
  int best_tri = -1;

  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[static_cast<size_t>(stack[--top])];
    if (!ray_box(origin, inv_dir, node.lo, node.hi, best)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const auto& t = mesh_.tris[static_cast<size_t>(order_[static_cast<size_t>(i)])];
        double tt;
        if (ray_tri(origin, dir, mesh_.vertices[static_cast<size_t>(t[0])],
                    mesh_.vertices[static_cast<size_t>(t[1])],
                    mesh_.vertices[static_cast<size_t>(t[2])], tt) &&
            tt < best) {
          best = tt;
          best_tri = order_[static_cast<size_t>(i)];
        }
      }
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  if (best_tri < 0) return false;
  hit.t = best;
  hit.tri = best_tri;
  hit.point = origin + best * dir;
  return true;
}

}  // namespace slforce::sim
