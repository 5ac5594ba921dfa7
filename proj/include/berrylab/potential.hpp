#pragma once

#include "berrylab/grid.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace berrylab {

/// V = 0.
struct FreeSpace {};

/// -depth * exp(-|r|^2 / (2 sigma^2))
struct GaussianWell {
  double depth = 2.0;
  double sigma = 0.8;
};

/// -depth inside |r| <= radius, zero outside.
struct CircularWell {
  double depth = 1.0;
  double radius = 1.0;
};

/// omega0^2 |r|^2
struct HarmonicWell {
  double omega0 = 1.0;
};

/// Samples on a rectilinear grid, bilinear in between, zero outside support.
/// values(iy, ix) is the sample at (xs[ix], ys[iy]).
struct TabulatedPotential {
  std::vector<double> xs;
  std::vector<double> ys;
  Eigen::MatrixXd values;
};

using PotentialSpec =
    std::variant<FreeSpace, GaussianWell, CircularWell, HarmonicWell, TabulatedPotential>;

double potential_value(const PotentialSpec& spec, const Vec2& r);

/// Throws ValidationError on non-positive parameters or non-finite samples.
void validate(const PotentialSpec& spec);

/// Length scale of the well used by the containment rule.
double well_width(const PotentialSpec& spec);

/// Short human-readable name ("gaussian", "circular", ...).
std::string potential_name(const PotentialSpec& spec);

/// Reads a CSV with header `x,y,v`. The (x, y) pairs must form a full
/// rectilinear product grid, in any row order.
TabulatedPotential load_tabulated_csv(const std::filesystem::path& path);
void save_tabulated_csv(const TabulatedPotential& table, const std::filesystem::path& path);

/// Samples `spec` on the nodes of `grid`.
TabulatedPotential tabulate(const PotentialSpec& spec, const GridSpec& grid);

}  // namespace berrylab
