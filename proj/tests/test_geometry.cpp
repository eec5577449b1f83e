#include <doctest.h>

#include "sweepnet/common.hpp"
#include "sweepnet/geometry.hpp"

using namespace sweepnet;

namespace {
const AreaSquare kArea{{0.5, 0.5}, 0.02};  // side 0.04
}

TEST_CASE("scan_path: single lane covers one sweep and flips the sweep axis") {
  CostConfig cfg{0.04, 2};
  for (int corner = 0; corner < 4; ++corner) {
    const ScanPath p0 = scan_path(kArea, corner, 0, cfg);
    CHECK(p0.length == doctest::Approx(0.04).epsilon(1e-12));
    // Horizontally opposite corner, same y.
    const Point2 start = kArea.corner(corner);
    CHECK(p0.end.y == doctest::Approx(start.y));
    CHECK(p0.end.x == doctest::Approx(2.0 * kArea.center.x - start.x));

    const ScanPath p1 = scan_path(kArea, corner, 1, cfg);
    CHECK(p1.length == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(p1.end.x == doctest::Approx(start.x));
    CHECK(p1.end.y == doctest::Approx(2.0 * kArea.center.y - start.y));
  }
}

TEST_CASE("scan_path: two lanes") {
  CostConfig cfg{0.02, 2};
  const ScanPath p = scan_path(kArea, 0, 0, cfg);
  // Lc = 2, gap = 0.04, length = 2*0.04 + 0.04.
  CHECK(p.length == doctest::Approx(0.12).epsilon(1e-12));
  // Even lane count: same x side, far y side.
  CHECK(p.end.x == doctest::Approx(0.48));
  CHECK(p.end.y == doctest::Approx(0.52));
}

TEST_CASE("scan_path: three lanes") {
  CostConfig cfg{0.015, 2};
  const ScanPath p = scan_path(kArea, 0, 0, cfg);
  // Lc = 3, gap = 0.02, length = 3*0.04 + 2*0.02.
  CHECK(p.length == doctest::Approx(0.16).epsilon(1e-12));
  // Odd lane count: opposite x, far y.
  CHECK(p.end.x == doctest::Approx(0.52));
  CHECK(p.end.y == doctest::Approx(0.52));
}

TEST_CASE("scan_path: end point is always a corner and length >= side") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    AreaSquare area{{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)}, rng.uniform(0.01, 0.03)};
    CostConfig cfg{rng.uniform(0.005, 0.05), 2};
    const int corner = rng.uniform_int(4);
    const int pattern = rng.uniform_int(2);
    const ScanPath p = scan_path(area, corner, pattern, cfg);
    CHECK(p.length >= area.side() - 1e-12);
    bool is_corner = false;
    for (int k = 0; k < 4; ++k) {
      const Point2 c = area.corner(k);
      if (std::abs(c.x - p.end.x) < 1e-12 && std::abs(c.y - p.end.y) < 1e-12) is_corner = true;
    }
    CHECK(is_corner);
  }
}

TEST_CASE("scan_path: invalid indices are rejected") {
  CostConfig cfg{0.02, 2};
  CHECK_THROWS_AS(scan_path(kArea, 4, 0, cfg), ValidationError);
  CHECK_THROWS_AS(scan_path(kArea, -1, 0, cfg), ValidationError);
  CHECK_THROWS_AS(scan_path(kArea, 0, 2, cfg), ValidationError);
}

TEST_CASE("overlap tests: strict for squares, closed for points") {
  AreaSquare a{{0.5, 0.5}, 0.02};
  AreaSquare touching{{0.54, 0.5}, 0.02};  // shares an edge
  AreaSquare inside{{0.53, 0.5}, 0.02};
  CHECK_FALSE(areas_overlap(a, touching));
  CHECK(areas_overlap(a, inside));
  CHECK(point_in_area({0.52, 0.5}, a));   // on the boundary
  CHECK(point_in_area({0.5, 0.5}, a));
  CHECK_FALSE(point_in_area({0.5201, 0.5}, a));
}

TEST_CASE("corners are ordered counterclockwise from (-,-)") {
  const auto c = kArea.corners();
  CHECK(c[0] == Point2{0.48, 0.48});
  CHECK(c[1] == Point2{0.52, 0.48});
  CHECK(c[2] == Point2{0.52, 0.52});
  CHECK(c[3] == Point2{0.48, 0.52});
}
