#pragma once

#include <array>
#include <cmath>

namespace sweepnet {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Axis-aligned square area. Corners are ordered counterclockwise from the
// (-,-) corner: (-,-), (+,-), (+,+), (-,+).
struct AreaSquare {
  Point2 center;
  double radius = 0.0;  // half side length

  Point2 corner(int k) const {
    const double sx = (k == 1 || k == 2) ? 1.0 : -1.0;
    const double sy = (k == 2 || k == 3) ? 1.0 : -1.0;
    return {center.x + sx * radius, center.y + sy * radius};
  }
  std::array<Point2, 4> corners() const { return {corner(0), corner(1), corner(2), corner(3)}; }
  double side() const { return 2.0 * radius; }

  friend bool operator==(const AreaSquare&, const AreaSquare&) = default;
};

// Cost model for scanning an area: lane width of the sensor sweep and the
// number of available scan patterns.
struct CostConfig {
  double sweep_width = 0.02;
  int pattern_count = 2;
};

struct ScanPath {
  double length = 0.0;
  Point2 end;
};

// Boustrophedon coverage path over the square, starting at the given corner.
// Even patterns sweep lanes parallel to the x axis (stacking along y), odd
// patterns sweep parallel to y. The end point is always one of the corners:
// the sweep-axis end flips side when the lane count is odd, and the stacking
// axis ends on the far side whenever there is more than one lane.
ScanPath scan_path(const AreaSquare& area, int corner, int pattern, const CostConfig& cfg);

// True if the squares' interiors intersect (shared boundaries do not count).
bool areas_overlap(const AreaSquare& a, const AreaSquare& b);
// True if the point lies inside or on the boundary of the square.
bool point_in_area(const Point2& p, const AreaSquare& a);

}  // namespace sweepnet
