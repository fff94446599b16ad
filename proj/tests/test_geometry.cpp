#include "slforce/geometry.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace slforce;
using namespace slforce::geom;

namespace {

stereo::DisparityMap map_of(const Eigen::ArrayXXd& d) {
  stereo::DisparityMap m;
  m.d = d;
  m.tag.setConstant(d.rows(), d.cols(),
                    static_cast<std::uint8_t>(stereo::MatchTag::Verified));
  m.d_min = 0;
  m.d_max = 1024;
  return m;
}

}  // namespace

TEST_CASE("triangulate direct substitution") {
  StereoRig rig{500.0, 320.0, 240.0, 0.05};
  Eigen::ArrayXXd d(1, 2);
  d << 25.0, 25.0;
  stereo::DisparityMap m = map_of(d);
  // principal point lands on pixel (240, 320); place our two pixels there.
  rig.cx = 0.0;
  rig.cy = 0.0;
  const auto res = triangulate(m, rig);
  REQUIRE(res.cloud.pts.rows() == 2);
  CHECK(res.cloud.pts(0, 2) == doctest::Approx(1.0));
  CHECK(res.cloud.pts(0, 0) == doctest::Approx(0.0));
  CHECK(res.cloud.pts(0, 1) == doctest::Approx(0.0));
  // One pixel to the right: x = (u - cx) z / f.
  CHECK(res.cloud.pts(1, 0) == doctest::Approx(1.0 / 500.0));

  StereoRig wide = rig;
  wide.cx = -100.0;  // u - cx = 100 for the first pixel
  const auto res2 = triangulate(m, wide);
  CHECK(res2.cloud.pts(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("triangulate skips invalid and non-positive disparities") {
  StereoRig rig{500.0, 2.0, 2.0, 0.05};
  Eigen::ArrayXXd d(2, 2);
  d << 10.0, 0.0, -3.0, std::numeric_limits<double>::quiet_NaN();
  stereo::DisparityMap m = map_of(d);
  m.tag(1, 1) = static_cast<std::uint8_t>(stereo::MatchTag::Rejected);
  const auto res = triangulate(m, rig);
  CHECK(res.cloud.pts.rows() == 1);
  CHECK(res.skipped_nonpositive == 2);
  CHECK(res.cloud.source_px[0] == std::array<int, 2>{0, 0});
}

TEST_CASE("triangulation round trip for integer disparities") {
  StereoRig rig{800.0, 320.0, 240.0, 0.004};
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int u = static_cast<int>(rng() % 640);
    const int v = static_cast<int>(rng() % 480);
    const int disp = 1 + static_cast<int>(rng() % 63);
    const double z = rig.focal_px * rig.baseline_m / disp;
    const Eigen::Vector3d p((u - rig.cx) * z / rig.focal_px,
                            (v - rig.cy) * z / rig.focal_px, z);
    // Project back: u = f x / z + cx, d = f B / z.
    const double u_back = rig.focal_px * p.x() / p.z() + rig.cx;
    const double d_back = rig.focal_px * rig.baseline_m / p.z();
    CHECK(u_back == doctest::Approx(u).epsilon(1e-12));
    Eigen::ArrayXXd d(1, 1);
    d(0, 0) = d_back;
    StereoRig shifted = rig;
    shifted.cx -= u;  // move the pixel to column 0
    shifted.cy -= v;
    const auto res = triangulate(map_of(d), shifted);
    CHECK((res.cloud.pts.row(0).transpose() - p).norm() < 1e-9);
  }
}

TEST_CASE("normalize_cloud symmetric pair") {
  Cloud pts(2, 3);
  pts << 1, 0, 0, -1, 0, 0;
  const auto n = normalize_cloud(pts);
  CHECK(n.centroid_m.norm() == doctest::Approx(0.0));
  CHECK(n.scale_m == doctest::Approx(2.0));
  CHECK(n.pts(0, 0) == doctest::Approx(0.5));
  CHECK(n.pts(1, 0) == doctest::Approx(-0.5));
}

TEST_CASE("normalize_cloud hand-computed triangle") {
  Cloud pts(3, 3);
  pts << 0, 0, 0, 2, 0, 0, 0, 2, 0;
  const auto n = normalize_cloud(pts);
  CHECK(n.centroid_m.x() == doctest::Approx(2.0 / 3.0));
  CHECK(n.centroid_m.y() == doctest::Approx(2.0 / 3.0));
  CHECK(n.scale_m == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(n.pts(0, 0) == doctest::Approx(-0.2357022603955158).epsilon(1e-9));
  CHECK(n.pts(0, 1) == doctest::Approx(-0.2357022603955158).epsilon(1e-9));
  CHECK(n.pts(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("normalize_cloud invariants") {
  std::mt19937_64 rng(17);
  Cloud pts(40, 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) {
    pts.data()[i] = uniform01(rng) * 4.0 - 2.0;
  }

  const auto base = normalize_cloud(pts);
  CHECK(base.pts.colwise().mean().norm() < 1e-12);
  CHECK(max_pairwise_distance(base.pts) == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("idempotence") {
    const auto again = normalize_cloud(base.pts);
    CHECK((again.pts - base.pts).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("translation invariance") {
    Cloud moved = pts.rowwise() + Eigen::RowVector3d(3.7, -1.2, 9.9);
    const auto n2 = normalize_cloud(moved);
    CHECK((n2.pts - base.pts).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("scale invariance") {
    Cloud scaled = pts * 137.0;
    const auto n3 = normalize_cloud(scaled);
    CHECK((n3.pts - base.pts).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("weights shift the centroid") {
    Eigen::VectorXd w = Eigen::VectorXd::Ones(40);
    w(0) = 10.0;
    const auto nw = normalize_cloud(pts, &w);
    Eigen::Vector3d expect = (pts.transpose() * w) / w.sum();
    CHECK((nw.centroid_m - expect).norm() < 1e-12);
  }
}

TEST_CASE("normalize_cloud degenerate inputs") {
  Cloud one(1, 3);
  one << 1, 2, 3;
  CHECK_THROWS_AS(normalize_cloud(one), DataError);
  Cloud same(3, 3);
  same << 1, 1, 1, 1, 1, 1, 1, 1, 1;
  CHECK_THROWS_AS(normalize_cloud(same), DataError);
}

TEST_CASE("max_pairwise_distance candidate path stays close to exact") {
  std::mt19937_64 rng(29);
  Cloud big(5000, 3);
  for (Eigen::Index i = 0; i < big.size(); ++i) {
    big.data()[i] = uniform01(rng) * 2.0 - 1.0;
  }
  const double approx = max_pairwise_distance(big);
  // Exact answer on the same data via the quadratic pass.
  double exact = 0.0;
  for (Eigen::Index i = 0; i < big.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < big.rows(); ++j) {
      exact = std::max(exact, (big.row(i) - big.row(j)).norm());
    }
  }
  CHECK(approx <= exact + 1e-12);
  CHECK(approx >= 0.98 * exact);
}

TEST_CASE("sample_points") {
  std::mt19937_64 rng(5);
  Cloud pts(10, 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = uniform01(rng);

  SUBCASE("same size gives a permutation") {
    const Cloud s = sample_points(pts, 10, 42);
    std::vector<int> used(10, 0);
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        if ((s.row(i) - pts.row(j)).norm() == 0.0) ++used[j];
      }
    }
    CHECK(std::all_of(used.begin(), used.end(), [](int u) { return u == 1; }));
  }
  SUBCASE("deterministic in the seed") {
    CHECK(sample_points(pts, 4, 9) == sample_points(pts, 4, 9));
    CHECK(sample_points(pts, 20, 9) == sample_points(pts, 20, 9));
  }
  SUBCASE("upsampling repeats rows from the input") {
    const Cloud s = sample_points(pts, 25, 7);
    REQUIRE(s.rows() == 25);
    for (int i = 0; i < 25; ++i) {
      bool found = false;
      for (int j = 0; j < 10; ++j) {
        found = found || (s.row(i) - pts.row(j)).norm() == 0.0;
      }
      CHECK(found);
    }
  }
  SUBCASE("golden subset for a pinned seed") {
    // Frozen from the documented PRNG stream (mt19937_64(1234) modulo
    // draws) on first implementation.
    const Cloud s = sample_points(pts, 4, 1234);
    std::vector<int> got;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 10; ++j) {
        if ((s.row(i) - pts.row(j)).norm() == 0.0) got.push_back(j);
      }
    }
    REQUIRE(got.size() == 4);
    CHECK(got == std::vector<int>{2, 0, 8, 1});
  }
  CHECK_THROWS_AS(sample_points(pts, 0, 1), std::invalid_argument);
}
