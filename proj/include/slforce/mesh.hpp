#pragma once

#include "slforce/core.hpp"

#include <array>
#include <vector>

namespace slforce::sim {

struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> tris;
};

// Signed volume via the divergence theorem; meaningful for closed meshes.
double mesh_volume(const TriMesh& mesh);

void transform_mesh(TriMesh& mesh, const Eigen::Matrix3d& rot,
                    const Eigen::Vector3d& translation);

// Deformable half-cylinder test object. The mesh is the camera-facing half
// of the tube closed by the diametral plane and two end caps, so it bounds
// a solid of volume (pi r^2 / 2) L.
struct TubeModel {
  double rest_length_m = 0.12;
  double radius_m = 0.012;
  Eigen::Vector3d center{0.0, 0.0, 0.25};
  Eigen::Vector3d axis{1.0, 0.0, 0.0};      // unit; tube runs along this
  Eigen::Vector3d facing{0.0, 0.0, -1.0};   // open half faces this way
  std::array<double, 3> albedo{0.75, 0.55, 0.45};
  int rings = 48;     // axial subdivisions
  int segments = 24;  // angular subdivisions over the half turn
};

void validate(const TubeModel& tube);

TriMesh tube_mesh(const TubeModel& tube);

// Axial stretch by (L0 + x) / L0 with volume-preserving radial
// contraction by 1/sqrt of the same factor. Rejects x outside [0, L0).
TriMesh deform_tube(const TubeModel& tube, double elongation_m);

// Two-triangle rectangle centered at `center`, normal along -facing of the
// cameras; spans 2*half_x by 2*half_y. The fronto-parallel test fixture.
TriMesh plane_mesh(const Eigen::Vector3d& center, double half_x, double half_y);

// Median-split AABB tree over triangle centroids.
class Bvh {
 public:
  explicit Bvh(const TriMesh& mesh);

  struct Hit {
    double t = 0.0;
    int tri = -1;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
  };

  // Nearest intersection along origin + t * dir, t > eps.
  bool raycast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
               Hit& hit) const;

 private:
  struct Node {
    Eigen::Vector3d lo, hi;
    int left = -1, right = -1;
    int first = 0, count = 0;  // leaf range into order_
  };

  int build(int first, int count, std::vector<Eigen::Vector3d>& centroids);

  const TriMesh& mesh_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
};

}  // namespace slforce::sim
