#include "sweepnet/geometry.hpp"

#include "sweepnet/common.hpp"

namespace sweepnet {

ScanPath scan_path(const AreaSquare& area, int corner, int pattern, const CostConfig& cfg) {
  if (corner < 0 || corner > 3) throw ValidationError("scan_path: corner index out of range");
  if (pattern < 0 || pattern >= cfg.pattern_count)
    throw ValidationError("scan_path: pattern index out of range");
  if (cfg.sweep_width <= 0.0) throw ValidationError("scan_path: sweep_width must be positive");

  const double s = area.side();
  // Small slack so exact multiples of the sweep width do not round up.
  const int lanes = std::max(1, static_cast<int>(std::ceil(s / cfg.sweep_width - 1e-9)));
  const double gap = lanes > 1 ? s / (lanes - 1) : 0.0;

  ScanPath out;
  out.length = lanes * s + (lanes - 1) * gap;

  const Point2 start = area.corner(corner);
  const bool sweep_x = pattern % 2 == 0;  // lanes parallel to x, stacked along y
  const bool flip_sweep = lanes % 2 == 1;
  const bool flip_stack = lanes > 1;
  auto mirror = [&](double v, double c) { return 2.0 * c - v; };
  if (sweep_x) {
    out.end.x = flip_sweep ? mirror(start.x, area.center.x) : start.x;
    out.end.y = flip_stack ? mirror(start.y, area.center.y) : start.y;
  } else {
    out.end.y = flip_sweep ? mirror(start.y, area.center.y) : start.y;
    out.end.x = flip_stack ? mirror(start.x, area.center.x) : start.x;
  }
  return out;
}

bool areas_overlap(const AreaSquare& a, const AreaSquare& b) {
  return std::abs(a.center.x - b.center.x) < a.radius + b.radius &&
         std::abs(a.center.y - b.center.y) < a.radius + b.radius;
}

bool point_in_area(const Point2& p, const AreaSquare& a) {
  return std::abs(p.x - a.center.x) <= a.radius && std::abs(p.y - a.center.y) <= a.radius;
}

}  // namespace sweepnet
