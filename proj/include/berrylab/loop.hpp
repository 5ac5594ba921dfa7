#pragma once

#include "berrylab/grid.hpp"

#include <variant>
#include <vector>

namespace berrylab {

struct PolygonLoop {
  std::vector<Vec2> vertices;  // counter-clockwise for orientation +1
};

struct CircleLoop {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
};

struct RectangleLoop {
  Vec2 corner = Vec2(-1.0, -1.0);  // lower-left
  Vec2 widths = Vec2(2.0, 2.0);
};

using LoopShape = std::variant<PolygonLoop, CircleLoop, RectangleLoop>;

/// A closed loop in parameter space. Samples are spread over the perimeter;
/// polygon vertices are always sampled and the remaining budget is split
/// between edges by length.
struct LoopSpec {
  LoopShape shape = RectangleLoop{};
  int orientation = +1;  // +1 counter-clockwise, -1 clockwise
  int samples = 32;      // M, per traversal
  int repeat = 1;        // number of traversals

  void validate() const;

  /// Closed sample list: M * repeat + 1 points, last equal to first.
  std::vector<Vec2> points() const;

  /// All samples are integer multiples of h.
  bool commensurate(double h) const;
};

/// Shoelace area of a closed sample list; throws when not closed.
double oriented_area(const std::vector<Vec2>& closed_points);
double oriented_area(const LoopSpec& loop);

/// Unwrap the closing duplicate: M * repeat distinct-in-sequence samples.
std::vector<Vec2> open_points(const LoopSpec& loop);

}  // namespace berrylab
