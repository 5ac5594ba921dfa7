#include "berrylab/loop.hpp"

#include "berrylab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace berrylab {

namespace {

std::vector<Vec2> polygon_samples(const std::vector<Vec2>& vertices, int samples) {
  const std::size_t nv = vertices.size();
  std::vector<double> lengths(nv);
  for (std::size_t e = 0; e < nv; ++e) lengths[e] = (vertices[(e + 1) % nv] - vertices[e]).norm();
  const double perimeter = std::accumulate(lengths.begin(), lengths.end(), 0.0);

  // Largest-remainder split of the sample budget; every edge gets >= 1.
  std::vector<int> counts(nv, 1);
  int left = samples - static_cast<int>(nv);
  if (left > 0 && perimeter > 0.0) {
    std::vector<double> ideal(nv), rem(nv);
    int assigned = 0;
    for (std::size_t e = 0; e < nv; ++e) {
      ideal[e] = samples * lengths[e] / perimeter;
      const int extra = std::max(0, static_cast<int>(std::floor(ideal[e])) - 1);
      counts[e] += extra;
      assigned += extra;
      rem[e] = ideal[e] - counts[e];
    }
    left -= assigned;
    std::vector<std::size_t> order(nv);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return rem[i] > rem[j]; });
    for (std::size_t q = 0; left > 0; q = (q + 1) % nv, --left) ++counts[order[q]];
  }

  std::vector<Vec2> pts;
  for (std::size_t e = 0; e < nv; ++e) {
    const Vec2& p = vertices[e];
    const Vec2& q = vertices[(e + 1) % nv];
    for (int s = 0; s < counts[e]; ++s) pts.push_back(p + (q - p) * (double(s) / counts[e]));
  }
  return pts;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void LoopSpec::validate() const {
  if (orientation != 1 && orientation != -1) throw ValidationError("loop orientation must be +1 or -1");
  if (samples < 4) throw ValidationError("loop needs at least 4 samples");
  if (repeat < 1) throw ValidationError("loop repeat must be >= 1");
  std::visit(overloaded{
                 [&](const PolygonLoop& p) {
                   if (p.vertices.size() < 2)
                     throw ValidationError("polygon loop needs at least 2 vertices");
                   if (static_cast<int>(p.vertices.size()) > samples)
                     throw ValidationError("polygon loop has more vertices than samples");
                   for (const auto& v : p.vertices)
                     if (!v.allFinite()) throw ValidationError("polygon vertex is not finite");
                 },
                 [](const CircleLoop& c) {
                   if (!(c.radius >= 0.0) || !c.center.allFinite() || !std::isfinite(c.radius))
                     throw ValidationError("circle loop needs a finite centre and radius >= 0");
                 },
                 [&](const RectangleLoop& r) {
                   if (!r.corner.allFinite() || !r.widths.allFinite() || (r.widths.array() < 0).any())
                     throw ValidationError("rectangle loop needs finite corner and widths >= 0");
                 },
             },
             shape);
}

std::vector<Vec2> LoopSpec::points() const {
  validate();
  std::vector<Vec2> one = std::visit(
      overloaded{
          [&](const PolygonLoop& p) { return polygon_samples(p.vertices, samples); },
          [&](const CircleLoop& c) {
            std::vector<Vec2> pts;
            for (int k = 0; k < samples; ++k) {
              const double phi = 2.0 * kPi * k / samples;
              pts.push_back(c.center + c.radius * Vec2(std::cos(phi), std::sin(phi)));
            }
            return pts;
          },
          [&](const RectangleLoop& r) {
            const Vec2 c = r.corner;
            const std::vector<Vec2> v = {c, c + Vec2(r.widths.x(), 0.0), c + r.widths,
                                         c + Vec2(0.0, r.widths.y())};
            return polygon_samples(v, samples);
          },
      },
      shape);
  if (orientation < 0) std::reverse(one.begin() + 1, one.end());

  std::vector<Vec2> pts;
  pts.reserve(one.size() * repeat + 1);
  for (int r = 0; r < repeat; ++r) pts.insert(pts.end(), one.begin(), one.end());
  pts.push_back(one.front());
  return pts;
}

std::vector<Vec2> open_points(const LoopSpec& loop) {
  auto pts = loop.points();
  pts.pop_back();
  return pts;
}

bool LoopSpec::commensurate(double h) const {
  for (const auto& p : points())
    if (!Offset(p).commensurate(h)) return false;
  return true;
}

double oriented_area(const std::vector<Vec2>& pts) {
  if (pts.size() < 2 || (pts.front() - pts.back()).norm() > 1e-12 * (1.0 + pts.front().norm()))
    throw ValidationError("oriented area needs a closed loop (first sample equal to last)");
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
    s += pts[k].x() * pts[k + 1].y() - pts[k].y() * pts[k + 1].x();
  return 0.5 * s;
}

double oriented_area(const LoopSpec& loop) { return oriented_area(loop.points()); }

}  // namespace berrylab
