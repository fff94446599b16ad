#include "slforce/pattern.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

using namespace slforce;
using namespace slforce::pattern;

namespace {

// Independent window check: enumerate all cyclic m-windows and demand each
// word over the alphabet appears exactly once.
bool covers_all_windows(const DeBruijnSeq& seq) {
  const int n = seq.alphabet_size;
  const int m = seq.window_len;
  const int len = static_cast<int>(seq.symbols.size());
  std::set<std::vector<int>> seen;
  for (int p = 0; p < len; ++p) {
    std::vector<int> w(m);
    for (int k = 0; k < m; ++k) w[k] = seq.symbols[(p + k) % len];
    if (!seen.insert(w).second) return false;
  }
  std::int64_t expect = 1;
  for (int k = 0; k < m; ++k) expect *= n;
  return static_cast<std::int64_t>(seen.size()) == expect;
}

}  // namespace

TEST_CASE("de_bruijn base cases") {
  const auto s = de_bruijn(2, 1);
  CHECK(s.symbols == std::vector<int>{0, 1});

  const auto s22 = de_bruijn(2, 2);
  REQUIRE(s22.symbols.size() == 4);
  CHECK(covers_all_windows(s22));
}

TEST_CASE("de_bruijn window uniqueness across orders") {
  for (auto [n, m] : std::vector<std::pair<int, int>>{{2, 2}, {2, 3}, {3, 4}, {4, 2}}) {
    const auto s = de_bruijn(n, m);
    std::int64_t expect = 1;
    for (int k = 0; k < m; ++k) expect *= n;
    CHECK(static_cast<std::int64_t>(s.symbols.size()) == expect);
    CHECK(covers_all_windows(s));
  }
  CHECK(de_bruijn(3, 4).symbols.size() == 81);
}

TEST_CASE("de_bruijn rejects bad arguments and is deterministic") {
  CHECK_THROWS_AS(de_bruijn(1, 2), std::invalid_argument);
  CHECK_THROWS_AS(de_bruijn(2, 0), std::invalid_argument);
  CHECK(de_bruijn(3, 3).symbols == de_bruijn(3, 3).symbols);
}

TEST_CASE("generate_pattern channel structure") {
  const auto spec = make_spec(3, 4, 12, 8, 4);
  const Rgb img = generate_pattern(spec);
  REQUIRE(img.cols() == 96);
  REQUIRE(img.rows() == 4);

  // Fringe hue follows the symbol sequence; saturation 1 wherever the
  // intensity is nonzero; V in [0,1] with 1.0 at each fringe start.
  for (int j = 0; j < spec.fringe_count; ++j) {
    const double want_hue = spec.symbol_hues_deg[spec.sequence.symbols[j]];
    for (int k = 0; k < spec.fringe_width_px; ++k) {
      const int c = j * spec.fringe_width_px + k;
      const Hsv hsv = rgb_to_hsv(img.r(0, c), img.g(0, c), img.b(0, c));
      CHECK(hsv.v >= 0.0);
      CHECK(hsv.v <= 1.0);
      if (hsv.v > 0.0) {
        CHECK(hsv.s == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(hue_distance_deg(hsv.h_deg, want_hue) < 1e-6);
      }
      if (k == 0) CHECK(hsv.v == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("generate_pattern V attains 1 exactly once per fringe") {
  const auto spec = make_spec(2, 3, 6, 10, 2);
  const Rgb img = generate_pattern(spec);
  for (int j = 0; j < spec.fringe_count; ++j) {
    int count_ones = 0;
    for (int k = 0; k < spec.fringe_width_px; ++k) {
      const int c = j * spec.fringe_width_px + k;
      const double v = std::max({img.r(0, c), img.g(0, c), img.b(0, c)});
      if (v == doctest::Approx(1.0).epsilon(1e-12)) ++count_ones;
    }
    CHECK(count_ones == 1);
  }
}

TEST_CASE("classify_hue") {
  const auto spec = make_spec(3, 4, 8, 8, 2);
  CHECK(classify_hue(0.0, spec) == 0);
  CHECK(classify_hue(125.0, spec) == 1);
  CHECK(classify_hue(60.0, spec) == kUnknownSymbol);
  CHECK(classify_hue(250.0, spec) == 2);
  CHECK(classify_hue(359.0, spec) == 0);
  CHECK(classify_hue(90.0, spec, 30.0) == 1);
  CHECK(classify_hue(89.9, spec, 30.0) == kUnknownSymbol);
}

TEST_CASE("decode recovers the constructed ids on a clean pattern") {
  const auto spec = make_spec(3, 4, 16, 12, 3);
  const Rgb img = generate_pattern(spec);
  const Eigen::ArrayXXi ids = decode_fringes(img, spec);
  for (int row = 0; row < img.rows(); ++row) {
    for (int col = 0; col < img.cols(); ++col) {
      CHECK(ids(row, col) == col / spec.fringe_width_px);
    }
  }
}

TEST_CASE("decode round trip over randomized specs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int fringe_count = 8 + static_cast<int>(rng() % 57);  // [8, 64]
    const int fw = 6 + static_cast<int>(rng() % 11);            // [6, 16]
    const auto spec = make_spec(3, 4, fringe_count, fw, 2);
    const Rgb img = generate_pattern(spec);
    const Eigen::ArrayXXi ids = decode_fringes(img, spec);
    bool all_ok = true;
    for (int col = 0; col < img.cols(); ++col) {
      all_ok = all_ok && ids(0, col) == col / fw;
    }
    CHECK(all_ok);
  }
}

TEST_CASE("decode marks a grey image undecodable") {
  const auto spec = make_spec(3, 4, 8, 8, 2);
  Rgb grey(2, 64);
  grey.r.setConstant(0.5);
  grey.g.setConstant(0.5);
  grey.b.setConstant(0.5);
  const Eigen::ArrayXXi ids = decode_fringes(grey, spec);
  CHECK((ids == kUndecodable).all());
}

TEST_CASE("decode isolates a corrupted fringe") {
  const auto spec = make_spec(3, 4, 20, 10, 2);
  Rgb img = generate_pattern(spec);
  const int bad = 9;  // interior fringe, window length 4
  for (int k = 0; k < spec.fringe_width_px; ++k) {
    const int c = bad * spec.fringe_width_px + k;
    const double v = 0.5 + 0.5 * std::cos(2.0 * M_PI * k / spec.fringe_width_px);
    double r, g, b;
    hsv_to_rgb(60.0, 1.0, v, r, g, b);  // equidistant from all canonical hues
    img.r.col(c).setConstant(r);
    img.g.col(c).setConstant(g);
    img.b.col(c).setConstant(b);
  }
  const Eigen::ArrayXXi ids = decode_fringes(img, spec);
  for (int col = 0; col < img.cols(); ++col) {
    const int true_id = col / spec.fringe_width_px;
    if (true_id >= bad - 3 && true_id <= bad) {
      CHECK(ids(0, col) == kUndecodable);
    } else {
      CHECK(ids(0, col) == true_id);
    }
  }
}

TEST_CASE("decode rejects images narrower than one window") {
  const auto spec = make_spec(3, 4, 8, 8, 2);
  Rgb img(2, 24);  // 3 fringes worth of columns < m * fringe_width
  CHECK_THROWS_AS(decode_fringes(img, spec), std::invalid_argument);
}

TEST_CASE("spec sidecar round trip") {
  const auto spec = make_spec(3, 4, 24, 9, 33);
  write_spec_sidecar("/tmp/slforce_spec_test.txt", spec);
  const auto back = read_spec_sidecar("/tmp/slforce_spec_test.txt");
  CHECK(back.fringe_count == spec.fringe_count);
  CHECK(back.fringe_width_px == spec.fringe_width_px);
  CHECK(back.height_px == spec.height_px);
  CHECK(back.sequence.symbols == spec.sequence.symbols);
  CHECK(back.symbol_hues_deg == spec.symbol_hues_deg);
}

TEST_CASE("pattern spec validation") {
  auto spec = make_spec(3, 4, 8, 8, 2);
  spec.symbol_hues_deg = {0.0, 30.0, 240.0};
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = make_spec(3, 4, 8, 8, 2);
  spec.fringe_count = 100;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}
