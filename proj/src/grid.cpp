#include "berrylab/grid.hpp"

#include "berrylab/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace berrylab {

double GridSpec::distance_to_boundary(const Vec2& p) const {
  return std::min(half_width_x() - std::abs(p.x()), half_width_y() - std::abs(p.y()));
}

void GridSpec::validate() const {
  if (nx < 8 || ny < 8) {
    std::ostringstream os;
    os << "grid must have at least 8 points per axis (got " << nx << "x" << ny << ")";
    throw ValidationError(os.str());
  }
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("grid spacing h must be positive");
}

void FluxDensity::validate() const {
  if (!std::isfinite(xi)) throw ValidationError("flux density xi must be finite");
}

namespace {
bool near_integer(double q) {
  return std::abs(q - std::round(q)) <= 1e-12 * std::max(1.0, std::abs(q));
}
}  // namespace

bool Offset::commensurate(double h) const {
  return near_integer(a.x() / h) && near_integer(a.y() / h);
}

std::array<int, 2> Offset::lattice_shift(double h) const {
  if (!commensurate(h)) {
    std::ostringstream os;
    os << "offset (" << a.x() << ", " << a.y() << ") is not a multiple of h = " << h
       << "; use eigensolver-based (resolved) transport for arbitrary offsets";
    throw ValidationError(os.str());
  }
  return {static_cast<int>(std::lround(a.x() / h)), static_cast<int>(std::lround(a.y() / h))};
}

WaveFunction::WaveFunction(const GridSpec& g, Field v) : grid(g), values(std::move(v)) {
  if (values.size() != g.size()) throw ValidationError("wavefunction size does not match grid");
}

Complex inner(const WaveFunction& f, const WaveFunction& g) {
  if (!(f.grid == g.grid)) throw ValidationError("inner product of functions on different grids");
  return f.grid.h * f.grid.h * f.values.dot(g.values);
}

double norm(const WaveFunction& f) { return f.grid.h * f.values.norm(); }

void normalize(WaveFunction& f) {
  const double n = norm(f);
  if (n == 0.0) throw NumericalError("cannot normalize the zero function");
  f.values /= n;
}

double boundary_tail_norm(const WaveFunction& f, int cells) {
  const GridSpec& g = f.grid;
  double acc = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int ring = std::min({i, j, g.nx - 1 - i, g.ny - 1 - j});
      if (ring < cells) acc += std::norm(f(i, j));
    }
  return g.h * std::sqrt(acc);
}

void fix_phase(WaveFunction& f) {
  Eigen::Index imax = 0;
  f.values.cwiseAbs2().maxCoeff(&imax);
  const Complex c = f.values[imax];
  if (std::abs(c) == 0.0) return;
  f.values *= std::conj(c) / std::abs(c);
  f.values[imax] = std::abs(c);
}

WaveFunction random_state(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  WaveFunction f(g);
  for (Eigen::Index k = 0; k < f.values.size(); ++k) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    f.values[k] = {re, im};
  }
  normalize(f);
  return f;
}

WaveFunction localized_random_state(const GridSpec& g, const Vec2& center, double width,
                                    std::uint64_t seed) {
  WaveFunction f = random_state(g, seed);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double r2 = (g.point(i, j) - center).squaredNorm();
      f(i, j) *= std::exp(-r2 / (2.0 * width * width));
    }
  normalize(f);
  return f;
}

}  // namespace berrylab
