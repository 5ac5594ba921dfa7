#include "berrylab/hamiltonian.hpp"

#include "berrylab/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace berrylab {

HamiltonianOperator::HamiltonianOperator(const GridSpec& grid, const FluxDensity& flux,
                                         PotentialSpec potential, const Offset& offset)
    : grid_(grid), flux_(flux), potential_(std::move(potential)), offset_(offset) {
  grid_.validate();
  flux_.validate();
  validate(potential_);
  if (!offset_.a.allFinite()) throw ValidationError("well offset must be finite");

  const double b = kPi * flux_.xi;
  const double h = grid_.h;
  hop_x_.resize(grid_.ny);
  hop_y_.resize(grid_.nx);
  for (int j = 0; j < grid_.ny; ++j) hop_x_[j] = std::polar(1.0, b * grid_.y(j) * h);
  for (int i = 0; i < grid_.nx; ++i) hop_y_[i] = std::polar(1.0, -b * grid_.x(i) * h);

  potential_samples_.resize(grid_.size());
  for (int j = 0; j < grid_.ny; ++j)
    for (int i = 0; i < grid_.nx; ++i) {
      const double v = potential_value(potential_, grid_.point(i, j) - offset_.a);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite potential sample at node (" << i << ", " << j << ")";
        throw ValidationError(os.str());
      }
      potential_samples_[grid_.index(i, j)] = v;
    }
  const double vmax = potential_samples_.cwiseAbs().maxCoeff();
  norm_estimate_ = 8.0 / (h * h) + vmax;
}

void HamiltonianOperator::apply(const Field& in, Field& out) const {
  if (in.size() != size()) throw ValidationError("wavefunction size does not match operator");
  out.resize(size());
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  const double inv_h2 = 1.0 / (grid_.h * grid_.h);
  const Complex* psi = in.data();
  Complex* res = out.data();
  for (int j = 0; j < ny; ++j) {
    const Complex hx = hop_x_[j];
    const Complex hx_back = std::conj(hx);
    for (int i = 0; i < nx; ++i) {
      const Eigen::Index k = Eigen::Index(j) * nx + i;
      Complex hop = 0.0;
      if (i + 1 < nx) hop += hx * psi[k + 1];
      if (i > 0) hop += hx_back * psi[k - 1];
      if (j + 1 < ny) hop += hop_y_[i] * psi[k + nx];
      if (j > 0) hop += std::conj(hop_y_[i]) * psi[k - nx];
      res[k] = (4.0 * inv_h2 + potential_samples_[k]) * psi[k] - inv_h2 * hop;
    }
  }
}

double HamiltonianOperator::link_phase_x(int, int j) const {
  return -kPi * flux_.xi * grid_.y(j) * grid_.h;
}

double HamiltonianOperator::link_phase_y(int i, int) const {
  return kPi * flux_.xi * grid_.x(i) * grid_.h;
}

double HamiltonianOperator::plaquette_phase(int i, int j) const {
  return link_phase_x(i, j) + link_phase_y(i + 1, j) - link_phase_x(i, j + 1) -
         link_phase_y(i, j);
}

Eigen::MatrixXcd HamiltonianOperator::dense() const {
  const Eigen::Index n = size();
  Eigen::MatrixXcd m(n, n);
  Field e = Field::Zero(n), col(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    e[c] = 1.0;
    apply(e, col);
    m.col(c) = col;
    e[c] = 0.0;
  }
  return m;
}

HamiltonianOperator build_hamiltonian(const GridSpec& grid, const FluxDensity& flux,
                                      const PotentialSpec& potential, const Offset& offset,
                                      double containment_radius) {
  grid.validate();
  if (containment_radius > 0.0) {
    const double d = grid.distance_to_boundary(offset.a);
    if (d < containment_radius) {
      std::ostringstream os;
      os << "grid too small: well centre is " << d << " from the boundary, need "
         << containment_radius;
      throw ValidationError(os.str());
    }
  }
  return HamiltonianOperator(grid, flux, potential, offset);
}

WaveFunction apply(const HamiltonianOperator& H, const WaveFunction& psi) {
  if (!(psi.grid == H.grid())) throw ValidationError("wavefunction grid does not match operator");
  WaveFunction out(H.grid());
  H.apply(psi.values, out.values);
  return out;
}

double rayleigh_quotient(const HamiltonianOperator& H, const WaveFunction& psi) {
  const WaveFunction hpsi = apply(H, psi);
  return inner(psi, hpsi).real() / inner(psi, psi).real();
}

double containment_requirement(const FluxDensity& flux, const PotentialSpec& potential) {
  const double width = well_width(potential);
  if (flux.is_zero()) return 6.0 * width;
  return 6.0 * std::max(flux.magnetic_length(), width);
}

void check_containment(const GridSpec& grid, const FluxDensity& flux,
                       const PotentialSpec& potential, std::span<const Vec2> centres) {
  const double need = containment_requirement(flux, potential);
  double worst = std::numeric_limits<double>::infinity();
  int worst_index = -1;
  for (std::size_t k = 0; k < centres.size(); ++k) {
    const double d = grid.distance_to_boundary(centres[k]);
    if (d < worst) {
      worst = d;
      worst_index = static_cast<int>(k);
    }
  }
  if (worst_index >= 0 && worst < need) {
    std::ostringstream os;
    os << "containment violated: well centre #" << worst_index << " at ("
       << centres[worst_index].x() << ", " << centres[worst_index].y() << ") is " << worst
       << " from the boundary; required margin " << need << " (6 x max(magnetic length "
       << flux.magnetic_length() << ", well width " << well_width(potential)
       << ")); half-widths " << grid.half_width_x() << " x " << grid.half_width_y();
    throw ValidationError(os.str());
  }
}

int grid_points_for_containment(double h, const FluxDensity& flux, const PotentialSpec& potential,
                                std::span<const Vec2> centres) {
  double reach = 0.0;
  for (const auto& c : centres) reach = std::max({reach, std::abs(c.x()), std::abs(c.y())});
  const double half = reach + containment_requirement(flux, potential);
  int n = static_cast<int>(std::ceil(2.0 * half / h - 1e-9));
  n = std::max(n, 8);
  if (n % 2) ++n;
  return n;
}

}  // namespace berrylab
