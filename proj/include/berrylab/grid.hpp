#pragma once

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>

namespace berrylab {

using Complex = std::complex<double>;
using Field = Eigen::VectorXcd;
using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;

/// Square-cell grid centred on the origin: x_i = (i - (nx-1)/2) h.
/// Storage is row-major in y: index(i, j) = j * nx + i.
struct GridSpec {
  int nx = 96;
  int ny = 96;
  double h = 0.25;

  double x(int i) const { return (i - 0.5 * (nx - 1)) * h; }
  double y(int j) const { return (j - 0.5 * (ny - 1)) * h; }
  Vec2 point(int i, int j) const { return {x(i), y(j)}; }
  Eigen::Index size() const { return Eigen::Index(nx) * ny; }
  Eigen::Index index(int i, int j) const { return Eigen::Index(j) * nx + i; }
  double half_width_x() const { return 0.5 * nx * h; }
  double half_width_y() const { return 0.5 * ny * h; }

  /// Distance from p to the nearest edge of the box (negative outside).
  double distance_to_boundary(const Vec2& p) const;

  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Signed flux quanta per unit area, charge sign included.
struct FluxDensity {
  double xi = 0.0;

  /// Effective field strength 2*pi*xi (the flux quantum is 2*pi).
  double field() const { return 2.0 * kPi * xi; }
  /// Cyclotron frequency 4*pi*|xi| for mass 1/2.
  double cyclotron_frequency() const { return 4.0 * kPi * std::abs(xi); }
  /// 1/sqrt(2*pi*|xi|); infinite when there is no field.
  double magnetic_length() const {
    return is_zero() ? std::numeric_limits<double>::infinity()
                     : 1.0 / std::sqrt(2.0 * kPi * std::abs(xi));
  }
  /// Lowest Landau level 2*pi*|xi|.
  double landau_level(int n) const { return 2.0 * kPi * std::abs(xi) * (2 * n + 1); }
  bool is_zero() const { return xi == 0.0; }

  void validate() const;
};

/// Well position a = (a1, a2) in the plane.
struct Offset {
  Vec2 a = Vec2::Zero();

  Offset() = default;
  Offset(double a1, double a2) : a(a1, a2) {}
  explicit Offset(const Vec2& v) : a(v) {}

  /// True iff a1/h and a2/h are integers to 1e-12.
  bool commensurate(double h) const;
  /// Integer lattice shift; throws ValidationError when not commensurate.
  std::array<int, 2> lattice_shift(double h) const;
};

/// Complex grid function with the h^2-weighted inner product.
struct WaveFunction {
  GridSpec grid;
  Field values;

  WaveFunction() = default;
  explicit WaveFunction(const GridSpec& g) : grid(g), values(Field::Zero(g.size())) {}
  WaveFunction(const GridSpec& g, Field v);

  Complex& operator()(int i, int j) { return values[grid.index(i, j)]; }
  const Complex& operator()(int i, int j) const { return values[grid.index(i, j)]; }
};

/// <f, g> = h^2 sum conj(f) g
Complex inner(const WaveFunction& f, const WaveFunction& g);
double norm(const WaveFunction& f);
void normalize(WaveFunction& f);

/// Weighted norm of f restricted to the `cells` outermost rings of the grid.
double boundary_tail_norm(const WaveFunction& f, int cells);

/// Rotate f so its largest-magnitude component is real positive.
void fix_phase(WaveFunction& f);

/// Deterministic complex Gaussian noise, normalized.
WaveFunction random_state(const GridSpec& g, std::uint64_t seed);

/// Random state multiplied by a Gaussian envelope of width `width` at `center`.
WaveFunction localized_random_state(const GridSpec& g, const Vec2& center, double width,
                                    std::uint64_t seed);

}  // namespace berrylab
