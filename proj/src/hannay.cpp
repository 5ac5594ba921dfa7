#include "berrylab/hannay.hpp"

#include "berrylab/error.hpp"
#include "berrylab/parallel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace berrylab {

namespace {

Eigen::Matrix4d symplectic_unit() {
  Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
  J.topRightCorner<2, 2>() = Eigen::Matrix2d::Identity();
  J.bottomLeftCorner<2, 2>() = -Eigen::Matrix2d::Identity();
  return J;
}

}  // namespace

void ClassicalSystem::validate() const {
  flux.validate();
  if (!std::isfinite(omega0) || omega0 < 0.0) throw ValidationError("omega0 must be finite and >= 0");
  if (!offset.allFinite()) throw ValidationError("offset must be finite");
  if (omega0 == 0.0 && flux.is_zero())
    throw ValidationError("omega0 = 0 and xi = 0: free particle, no invariant tori");
}

Eigen::Matrix4d ClassicalSystem::flow_matrix() const {
  const double b = kPi * flux.xi;
  const double k = 0.5 * omega0 * omega0;
  Eigen::Matrix4d M;
  M << 0.0, 2.0 * b, 2.0, 0.0,
       -2.0 * b, 0.0, 0.0, 2.0,
       -2.0 * b * b - k, 0.0, 0.0, 2.0 * b,
       0.0, -2.0 * b * b - k, -2.0 * b, 0.0;
  return M;
}

PhasePoint ClassicalSystem::equilibrium(const Vec2& a) const {
  const double b = kPi * flux.xi;
  return PhasePoint(a.x(), a.y(), -b * a.y(), b * a.x());
}

Eigen::Matrix<double, 4, 2> ClassicalSystem::equilibrium_jacobian() const {
  const double b = kPi * flux.xi;
  Eigen::Matrix<double, 4, 2> Z;
  Z << 1.0, 0.0,
       0.0, 1.0,
       0.0, -b,
       b, 0.0;
  return Z;
}

double ClassicalSystem::energy(const PhasePoint& z) const {
  const double b = kPi * flux.xi;
  const double px = z[2] + b * z[1];
  const double py = z[3] - b * z[0];
  const Vec2 d = Vec2(z[0], z[1]) - offset;
  return px * px + py * py + 0.25 * omega0 * omega0 * d.squaredNorm();
}

FlowFrequencies flow_frequencies(const ClassicalSystem& system) {
  system.validate();
  Eigen::EigenSolver<Eigen::Matrix4d> es(system.flow_matrix(), false);
  if (es.info() != Eigen::Success) throw NumericalError("flow matrix eigenvalues did not converge");
  std::array<double, 4> w{};
  for (int i = 0; i < 4; ++i) w[i] = std::abs(es.eigenvalues()[i].imag());
  std::sort(w.begin(), w.end(), std::greater<>());
  return {w[0], w[2]};
}

Eigen::Matrix4d flow_map(const ClassicalSystem& system, double t) {
  system.validate();
  const Eigen::Matrix4d Mt = system.flow_matrix() * t;
  return Mt.exp();
}

double symplectic_defect(const Eigen::Matrix4d& phi) {
  const Eigen::Matrix4d J = symplectic_unit();
  return (phi.transpose() * J * phi - J).cwiseAbs().maxCoeff();
}

Trajectory integrate(const ClassicalSystem& system, const PhasePoint& start, double t_final,
                     double dt) {
  system.validate();
  const FlowFrequencies f = flow_frequencies(system);
  if (!(dt > 0.0) || !(t_final >= 0.0) || !std::isfinite(t_final))
    throw ValidationError("integrate needs dt > 0 and a finite t_final >= 0");
  if (dt * f.max() > 0.05 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "step too large: dt * omega_plus = " << dt * f.max() << " > 0.05";
    throw ValidationError(os.str());
  }
  const auto n = static_cast<long>(std::ceil(t_final / dt - 1e-9));
  const double step = n > 0 ? t_final / n : dt;
  const Eigen::Matrix4d phi = flow_map(system, step);
  const PhasePoint eq = system.equilibrium(system.offset);
  Trajectory tr;
  tr.t.reserve(n + 1);
  tr.z.reserve(n + 1);
  PhasePoint d = start - eq;
  tr.t.push_back(0.0);
  tr.z.push_back(start);
  for (long k = 1; k <= n; ++k) {
    d = phi * d;
    tr.t.push_back(k * step);
    tr.z.push_back(eq + d);
  }
  return tr;
}

double spectral_peak(const std::vector<double>& signal, double dt, double omega_lo,
                     double omega_hi) {
  if (signal.size() < 8) throw ValidationError("spectral_peak needs at least 8 samples");
  if (!(omega_hi > omega_lo) || omega_lo < 0.0) throw ValidationError("bad frequency window");
  const double mean = [&] {
    double s = 0.0;
    for (double v : signal) s += v;
    return s / signal.size();
  }();
  // Hann window keeps leakage from the other mode out of the search window.
  const std::size_t n = signal.size();
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = (signal[k] - mean) * std::pow(std::sin(kPi * k / (n - 1)), 2);
  auto power = [&](double omega) {
    Complex acc = 0.0;
    const Complex step = std::polar(1.0, -omega * dt);
    Complex ph = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += w[k] * ph;
      ph *= step;
      if ((k & 1023) == 1023) ph = std::polar(1.0, -omega * dt * (k + 1));
    }
    return std::norm(acc);
  };
  const double duration = dt * n;
  const double coarse = kPi / duration / 4.0;
  double best = omega_lo, best_p = -1.0;
  for (double om = omega_lo; om <= omega_hi; om += coarse) {
    const double p = power(om);
    if (p > best_p) best_p = p, best = om;
  }
  // golden-section refinement on the bracketing cell
  double lo = std::max(omega_lo, best - coarse), hi = std::min(omega_hi, best + coarse);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double pc = power(c), pd = power(d);
  for (int it = 0; it < 80 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    if (pc > pd) {
      hi = d, d = c, pd = pc;
      c = hi - g * (hi - lo), pc = power(c);
    } else {
      lo = c, c = d, pc = pd;
      d = lo + g * (hi - lo), pd = power(d);
    }
  }
  return 0.5 * (lo + hi);
}

NormalModes::NormalModes(const ClassicalSystem& system) {
  system.validate();
  freq_ = flow_frequencies(system);
  if (!(freq_.min() > 0.0)) throw ValidationError("a zero-frequency mode has no angle variable");
  Eigen::EigenSolver<Eigen::Matrix4d> es(system.flow_matrix(), true);
  if (es.info() != Eigen::Success) throw NumericalError("flow matrix eigenvectors did not converge");

  std::vector<int> neg;
  for (int i = 0; i < 4; ++i)
    if (es.eigenvalues()[i].imag() < 0.0) neg.push_back(i);
  if (neg.size() != 2) throw NumericalError("flow matrix does not have two oscillating modes");
  if (-es.eigenvalues()[neg[0]].imag() < -es.eigenvalues()[neg[1]].imag()) std::swap(neg[0], neg[1]);

  Eigen::Matrix4cd V;
  for (int k = 0; k < 2; ++k) {
    vec_.col(k) = es.eigenvectors().col(neg[k]);
    V.col(k) = vec_.col(k);
    V.col(k + 2) = vec_.col(k).conjugate();
  }
  const Eigen::Matrix4cd Vinv = V.inverse();
  proj_ = Vinv.topRows<2>();
  for (int k = 0; k < 2; ++k) {
    Complex s = 0.0;
    for (int i = 0; i < 2; ++i) s += vec_(i, k) * std::conj(vec_(i + 2, k));
    symplectic_norm_[k] = 2.0 * std::abs(s.imag());
  }
}

Eigen::Vector2cd NormalModes::amplitudes(const PhasePoint& deviation) const {
  return proj_ * deviation.cast<Complex>();
}

PhasePoint NormalModes::deviation(const Eigen::Vector2cd& amplitudes) const {
  return 2.0 * (vec_ * amplitudes).real();
}

Eigen::Vector2d NormalModes::actions(const PhasePoint& deviation) const {
  const Eigen::Vector2cd a = amplitudes(deviation);
  return Eigen::Vector2d(symplectic_norm_[0] * std::norm(a[0]), symplectic_norm_[1] * std::norm(a[1]));
}

Eigen::Vector2d NormalModes::angles(const PhasePoint& deviation) const {
  const Eigen::Vector2cd a = amplitudes(deviation);
  return Eigen::Vector2d(-std::arg(a[0]), -std::arg(a[1]));
}

void Ensemble::validate(const ClassicalSystem& system) const {
  if (points.size() < 64) throw ValidationError("ensemble needs at least 64 members");
  const NormalModes modes(system);
  const PhasePoint eq = system.equilibrium(system.offset);
  for (const auto& z : points) {
    if (!z.allFinite()) throw ValidationError("ensemble point is not finite");
    const Eigen::Vector2d I = modes.actions(z - eq);
    for (int k = 0; k < 2; ++k)
      if (std::abs(I[k] - actions[k]) > 1e-10 * std::max(1.0, std::abs(actions[k])))
        throw ValidationError("ensemble members do not share their actions");
  }
}

Ensemble make_ensemble(const ClassicalSystem& system, double action_plus, double action_minus,
                       int side) {
  if (side * side < 64) throw ValidationError("ensemble needs at least 64 members");
  if (!(action_plus > 0.0) || !(action_minus > 0.0)) throw ValidationError("actions must be positive");
  const NormalModes modes(system);
  const PhasePoint eq = system.equilibrium(system.offset);
  // unit-amplitude actions fix the scale per mode
  const Eigen::Vector2d unit = modes.actions(modes.deviation(Eigen::Vector2cd(1.0, 0.0))) +
                               modes.actions(modes.deviation(Eigen::Vector2cd(0.0, 1.0)));
  const double r_plus = std::sqrt(action_plus / unit[0]);
  const double r_minus = std::sqrt(action_minus / unit[1]);
  Ensemble e;
  e.actions = Eigen::Vector2d(action_plus, action_minus);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const double tp = 2.0 * kPi * i / side, tm = 2.0 * kPi * j / side;
      const Eigen::Vector2cd amp(std::polar(r_plus, -tp), std::polar(r_minus, -tm));
      e.points.push_back(eq + modes.deviation(amp));
    }
  return e;
}

HannayResult hannay_angle(const ClassicalSystem& system, const LoopSpec& loop, double T,
                          const Ensemble& ensemble, const HannayOptions& options) {
  system.validate();
  const NormalModes modes(system);
  const FlowFrequencies f = modes.frequencies();
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("T must be positive");
  if (T * f.min() < 1e3) {
    std::ostringstream os;
    os << "not adiabatic: T * omega_minus = " << T * f.min() << " < 1e3";
    throw ValidationError(os.str());
  }
  if (!(options.max_phase_step > 0.0) || options.max_phase_step > 0.05)
    throw ValidationError("max_phase_step must be in (0, 0.05]");

  Schedule schedule;
  schedule.loop = loop;
  schedule.T = T;
  schedule.ramp = options.ramp;
  const SchedulePath path(schedule);
  ClassicalSystem start = system;
  start.offset = path.position(0.0);
  ensemble.validate(start);

  const long n = static_cast<long>(std::ceil(T * f.max() / options.max_phase_step));
  const double dt = T / n;
  const Eigen::Matrix<Complex, 2, 2> PZ = modes.projector() * system.equilibrium_jacobian().cast<Complex>();
  const std::array<Complex, 2> lambda{Complex(0.0, -f.plus), Complex(0.0, -f.minus)};

  // Rotating-frame amplitudes beta = alpha exp(-lambda t) obey
  // d beta / dt = -exp(-lambda t) PZ da/dt, integrated exactly for piecewise-linear a(t).
  Eigen::Vector2cd drive = Eigen::Vector2cd::Zero();
  Vec2 a_prev = path.position(0.0);
  for (long s = 0; s < n; ++s) {
    const double t0 = s * dt, t1 = (s + 1) * dt;
    const Vec2 a_next = path.position(t1);
    const Vec2 du = a_next - a_prev;
    if (du.squaredNorm() > 0.0) {
      const Eigen::Vector2cd w = PZ * (du / dt).cast<Complex>();
      for (int k = 0; k < 2; ++k)
        drive[k] += w[k] * (std::exp(-lambda[k] * t0) - std::exp(-lambda[k] * t1)) / lambda[k];
    }
    a_prev = a_next;
  }

  const PhasePoint eq = start.equilibrium(start.offset);
  struct Member {
    Eigen::Vector2d dtheta;
    double action_change;
  };
  const auto members = parallel_map(ensemble.points.size(), options.workers, [&](std::size_t m) {
    const Eigen::Vector2cd b0 = modes.amplitudes(ensemble.points[m] - eq);
    const Eigen::Vector2cd b1 = b0 - drive;
    Member r;
    r.action_change = 0.0;
    for (int k = 0; k < 2; ++k) {
      r.dtheta[k] = -std::arg(b1[k] * std::conj(b0[k]));
      r.action_change = std::max(r.action_change, std::abs(std::norm(b1[k]) / std::norm(b0[k]) - 1.0));
    }
    return r;
  });

  HannayResult out;
  out.steps = static_cast<int>(n);
  out.T = T;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (const auto& m : members) {
    sum += m.dtheta;
    out.action_drift = std::max(out.action_drift, m.action_change);
  }
  sum /= static_cast<double>(members.size());
  out.delta_theta_plus = sum[0];
  out.delta_theta_minus = sum[1];
  return out;
}

double correspondence_check(const std::vector<double>& phases) {
  if (phases.size() < 2) throw ValidationError("correspondence check needs at least 2 levels");
  double worst = 0.0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (!std::isfinite(phases[i])) throw ValidationError("berry phase is not finite");
    for (std::size_t j = 0; j < i; ++j) worst = std::max(worst, std::abs(phases[i] - phases[j]));
  }
  return worst;
}

}  // namespace berrylab
