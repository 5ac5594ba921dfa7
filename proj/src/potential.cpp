#include "berrylab/potential.hpp"

#include "berrylab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace berrylab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Index of the cell [v[k], v[k+1]] containing t, or -1 outside the table.
int locate(const std::vector<double>& v, double& t) {
  if (v.size() < 2) return -1;
  const double slack = 1e-9 * (v[1] - v[0]);
  if (t < v.front() && t > v.front() - slack) t = v.front();
  if (t > v.back() && t < v.back() + slack) t = v.back();
  if (t < v.front() || t > v.back()) return -1;
  auto it = std::upper_bound(v.begin(), v.end(), t);
  int k = static_cast<int>(it - v.begin()) - 1;
  return std::min(k, static_cast<int>(v.size()) - 2);
}

double interpolate(const TabulatedPotential& t, const Vec2& r) {
  double px = r.x(), py = r.y();
  const int ix = locate(t.xs, px);
  const int iy = locate(t.ys, py);
  if (ix < 0 || iy < 0) return 0.0;
  const double u = (px - t.xs[ix]) / (t.xs[ix + 1] - t.xs[ix]);
  const double w = (py - t.ys[iy]) / (t.ys[iy + 1] - t.ys[iy]);
  // Snap to nodes so on-grid lookups reproduce samples exactly.
  const double us = std::abs(u) < 1e-9 ? 0.0 : (std::abs(u - 1.0) < 1e-9 ? 1.0 : u);
  const double ws = std::abs(w) < 1e-9 ? 0.0 : (std::abs(w - 1.0) < 1e-9 ? 1.0 : w);
  const auto& v = t.values;
  double acc = 0.0;
  if (us < 1.0 && ws < 1.0) acc += (1 - us) * (1 - ws) * v(iy, ix);
  if (us > 0.0 && ws < 1.0) acc += us * (1 - ws) * v(iy, ix + 1);
  if (us < 1.0 && ws > 0.0) acc += (1 - us) * ws * v(iy + 1, ix);
  if (us > 0.0 && ws > 0.0) acc += us * ws * v(iy + 1, ix + 1);
  return acc;
}

}  // namespace

double potential_value(const PotentialSpec& spec, const Vec2& r) {
  if (!r.allFinite()) throw ValidationError("potential evaluated at a non-finite point");
  return std::visit(
      overloaded{
          [](const FreeSpace&) { return 0.0; },
          [&](const GaussianWell& g) {
            return -g.depth * std::exp(-r.squaredNorm() / (2.0 * g.sigma * g.sigma));
          },
          [&](const CircularWell& c) { return r.norm() <= c.radius ? -c.depth : 0.0; },
          [&](const HarmonicWell& w) { return w.omega0 * w.omega0 * r.squaredNorm(); },
          [&](const TabulatedPotential& t) { return interpolate(t, r); },
      },
      spec);
}

void validate(const PotentialSpec& spec) {
  std::visit(overloaded{
                 [](const FreeSpace&) {},
                 [](const GaussianWell& g) {
                   if (!(g.depth > 0.0) || !(g.sigma > 0.0) || !std::isfinite(g.depth) ||
                       !std::isfinite(g.sigma))
                     throw ValidationError("gaussian well needs depth > 0 and sigma > 0");
                 },
                 [](const CircularWell& c) {
                   if (!(c.depth > 0.0) || !(c.radius > 0.0) || !std::isfinite(c.depth) ||
                       !std::isfinite(c.radius))
                     throw ValidationError("circular well needs depth > 0 and radius > 0");
                 },
                 [](const HarmonicWell& w) {
                   if (!(w.omega0 > 0.0) || !std::isfinite(w.omega0))
                     throw ValidationError("harmonic well needs omega0 > 0");
                 },
                 [](const TabulatedPotential& t) {
                   if (t.xs.size() < 2 || t.ys.size() < 2)
                     throw ValidationError("tabulated potential needs at least 2x2 samples");
                   if (t.values.rows() != static_cast<Eigen::Index>(t.ys.size()) ||
                       t.values.cols() != static_cast<Eigen::Index>(t.xs.size()))
                     throw ValidationError("tabulated potential sample shape mismatch");
                   if (!std::is_sorted(t.xs.begin(), t.xs.end()) ||
                       !std::is_sorted(t.ys.begin(), t.ys.end()) ||
                       std::adjacent_find(t.xs.begin(), t.xs.end()) != t.xs.end() ||
                       std::adjacent_find(t.ys.begin(), t.ys.end()) != t.ys.end())
                     throw ValidationError("tabulated coordinates must be strictly increasing");
                   if (!t.values.allFinite())
                     throw ValidationError("tabulated potential contains non-finite samples");
                 },
             },
             spec);
}

double well_width(const PotentialSpec& spec) {
  return std::visit(overloaded{
                        [](const FreeSpace&) { return 0.0; },
                        [](const GaussianWell& g) { return g.sigma; },
                        [](const CircularWell& c) { return c.radius; },
                        [](const HarmonicWell& w) { return 1.0 / std::sqrt(w.omega0); },
                        [](const TabulatedPotential& t) {
                          // |v|-weighted rms radius of the table
                          double wsum = 0.0, r2sum = 0.0;
                          for (std::size_t iy = 0; iy < t.ys.size(); ++iy)
                            for (std::size_t ix = 0; ix < t.xs.size(); ++ix) {
                              const double w = std::abs(t.values(iy, ix));
                              wsum += w;
                              r2sum += w * (t.xs[ix] * t.xs[ix] + t.ys[iy] * t.ys[iy]);
                            }
                          return wsum > 0.0 ? std::sqrt(r2sum / wsum) : 0.0;
                        },
                    },
                    spec);
}

std::string potential_name(const PotentialSpec& spec) {
  static const char* names[] = {"free", "gaussian", "circular", "harmonic", "tabulated"};
  return names[spec.index()];
}

TabulatedPotential load_tabulated_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open potential table " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty potential table " + path.string());
  line.erase(std::remove_if(line.begin(), line.end(), ::isspace), line.end());
  if (line != "x,y,v") throw ValidationError("potential table header must be `x,y,v`");

  std::map<std::pair<double, double>, double> samples;
  std::vector<double> xs, ys;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double x, y, v;
    char c1, c2;
    if (!(ls >> x >> c1 >> y >> c2 >> v) || c1 != ',' || c2 != ',')
      throw ValidationError("malformed potential table row " + std::to_string(lineno));
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(v))
      throw ValidationError("non-finite value in potential table row " + std::to_string(lineno));
    samples[{x, y}] = v;
    xs.push_back(x);
    ys.push_back(y);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  if (samples.size() != xs.size() * ys.size())
    throw ValidationError("potential table is not a full rectilinear grid");

  TabulatedPotential t;
  t.xs = xs;
  t.ys = ys;
  t.values.resize(static_cast<Eigen::Index>(ys.size()), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t iy = 0; iy < ys.size(); ++iy)
    for (std::size_t ix = 0; ix < xs.size(); ++ix) t.values(iy, ix) = samples.at({xs[ix], ys[iy]});
  validate(t);
  return t;
}

void save_tabulated_csv(const TabulatedPotential& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "x,y,v\n" << std::setprecision(17);
  for (std::size_t iy = 0; iy < table.ys.size(); ++iy)
    for (std::size_t ix = 0; ix < table.xs.size(); ++ix)
      out << table.xs[ix] << ',' << table.ys[iy] << ',' << table.values(iy, ix) << '\n';
}

TabulatedPotential tabulate(const PotentialSpec& spec, const GridSpec& grid) {
  TabulatedPotential t;
  for (int i = 0; i < grid.nx; ++i) t.xs.push_back(grid.x(i));
  for (int j = 0; j < grid.ny; ++j) t.ys.push_back(grid.y(j));
  t.values.resize(grid.ny, grid.nx);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) t.values(j, i) = potential_value(spec, grid.point(i, j));
  return t;
}

}  // namespace berrylab
