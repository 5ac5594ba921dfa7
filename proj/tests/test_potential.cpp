#include <doctest.h>

#include "berrylab/error.hpp"
#include "berrylab/potential.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace berrylab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "berrylab_test_potential";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("closed-form potential values") {
  CHECK(potential_value(GaussianWell{2.0, 0.8}, Vec2::Zero()) == doctest::Approx(-2.0));
  CHECK(potential_value(CircularWell{1.0, 1.0}, Vec2(2.0, 0.0)) == 0.0);
  CHECK(potential_value(CircularWell{1.0, 1.0}, Vec2(0.5, 0.5)) == -1.0);
  CHECK(potential_value(HarmonicWell{1.0}, Vec2(1.0, 0.0)) == doctest::Approx(1.0));
  CHECK(potential_value(HarmonicWell{2.0}, Vec2(0.0, 1.5)) == doctest::Approx(9.0));
  CHECK(potential_value(FreeSpace{}, Vec2(3.0, -1.0)) == 0.0);
  CHECK(potential_value(GaussianWell{2.0, 0.8}, Vec2(0.8, 0.0)) ==
        doctest::Approx(-2.0 * std::exp(-0.5)));
}

TEST_CASE("attractive wells are non-positive and vanish far away") {
  for (double r : {0.0, 0.3, 1.0, 2.5, 10.0, 40.0}) {
    CHECK(potential_value(GaussianWell{2.0, 0.8}, Vec2(r, 0.0)) <= 0.0);
    CHECK(potential_value(CircularWell{1.0, 1.0}, Vec2(0.0, r)) <= 0.0);
  }
  CHECK(std::abs(potential_value(GaussianWell{2.0, 0.8}, Vec2(40.0, 0.0))) < 1e-300);
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(validate(GaussianWell{2.0, 0.8}));
  CHECK_THROWS_AS(validate(GaussianWell{-1.0, 0.8}), ValidationError);
  CHECK_THROWS_AS(validate(GaussianWell{1.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(validate(CircularWell{1.0, -1.0}), ValidationError);
  CHECK_THROWS_AS(validate(HarmonicWell{0.0}), ValidationError);
  TabulatedPotential bad{{0.0, 1.0}, {0.0, 1.0}, Eigen::MatrixXd::Zero(2, 2)};
  bad.values(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("well widths") {
  CHECK(well_width(GaussianWell{2.0, 0.8}) == doctest::Approx(0.8));
  CHECK(well_width(CircularWell{1.0, 1.3}) == doctest::Approx(1.3));
  CHECK(well_width(HarmonicWell{4.0}) == doctest::Approx(0.5));
  CHECK(well_width(FreeSpace{}) == 0.0);
}

TEST_CASE("tabulated potentials interpolate bilinearly and vanish outside") {
  TabulatedPotential t;
  t.xs = {0.0, 1.0, 2.0};
  t.ys = {-1.0, 1.0};
  t.values.resize(2, 3);
  t.values << 0.0, 1.0, 2.0,
              4.0, 5.0, 6.0;
  CHECK(potential_value(t, Vec2(1.0, -1.0)) == 1.0);
  CHECK(potential_value(t, Vec2(2.0, 1.0)) == 6.0);
  CHECK(potential_value(t, Vec2(0.5, 0.0)) == doctest::Approx(0.25 * (0 + 1 + 4 + 5)));
  // bilinear is exact for linear data v = x + 2 (y + 1)
  for (double x : {0.1, 0.7, 1.3, 1.9})
    for (double y : {-0.9, 0.0, 0.6})
      CHECK(potential_value(t, Vec2(x, y)) == doctest::Approx(x + 2.0 * (y + 1.0)));
  CHECK(potential_value(t, Vec2(-0.5, 0.0)) == 0.0);
  CHECK(potential_value(t, Vec2(1.0, 1.5)) == 0.0);
}

TEST_CASE("tabulating a closed form reproduces it on the nodes") {
  const GridSpec g{16, 12, 0.3};
  const PotentialSpec gw = GaussianWell{2.0, 0.8};
  const TabulatedPotential t = tabulate(gw, g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      CHECK(potential_value(t, g.point(i, j)) == potential_value(gw, g.point(i, j)));
}

TEST_CASE("CSV round trip and rejection of malformed tables") {
  const fs::path dir = scratch_dir();
  const GridSpec g{10, 8, 0.5};
  const TabulatedPotential t = tabulate(GaussianWell{1.5, 0.7}, g);
  save_tabulated_csv(t, dir / "well.csv");
  const TabulatedPotential r = load_tabulated_csv(dir / "well.csv");
  CHECK(r.xs.size() == t.xs.size());
  CHECK(r.ys.size() == t.ys.size());
  CHECK((r.values - t.values).cwiseAbs().maxCoeff() == 0.0);

  {
    std::ofstream out(dir / "holes.csv");
    out << "x,y,v\n0,0,1\n1,0,2\n0,1,3\n";
  }
  CHECK_THROWS_AS(load_tabulated_csv(dir / "holes.csv"), ValidationError);
  {
    std::ofstream out(dir / "nan.csv");
    out << "x,y,v\n0,0,1\n1,0,nan\n0,1,3\n1,1,4\n";
  }
  CHECK_THROWS_AS(load_tabulated_csv(dir / "nan.csv"), ValidationError);
  {
    std::ofstream out(dir / "header.csv");
    out << "a,b,c\n0,0,1\n";
  }
  CHECK_THROWS_AS(load_tabulated_csv(dir / "header.csv"), ValidationError);
  CHECK_THROWS_AS(load_tabulated_csv(dir / "missing.csv"), ValidationError);
}
