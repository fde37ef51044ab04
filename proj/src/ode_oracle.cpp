#include "tumorctl/ode_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

namespace tumorctl {

namespace {

double spread(const Eigen::VectorXd& v) { return v.maxCoeff() - v.minCoeff(); }

}  // namespace

HomogeneousOracle::State homogeneous_initial_state(const ModelSpec& spec, double* iota) {
  constexpr double tol = 1e-14;
  if (spread(spec.phi0.v) > tol || spread(spec.sigma0.v) > tol || spread(spec.z0.v) > tol ||
      spread(spec.iota.v) > tol)
    throw std::invalid_argument("ODE oracle: initial data and iota must be constant in space");
  if (spec.force.u1.cwiseAbs().maxCoeff() > 0.0 || spec.force.u2.cwiseAbs().maxCoeff() > 0.0 ||
      spec.u0.u1.cwiseAbs().maxCoeff() > 0.0 || spec.u0.u2.cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("ODE oracle: needs f = 0 and u0 = 0");
  if (iota) *iota = spec.iota.v[0];
  return {spec.phi0.v[0], spec.sigma0.v[0], spec.z0.v[0]};
}

HomogeneousOracle::HomogeneousOracle(const ModelSpec& spec, State y0, double iota, double chi1,
                                     double chi2, int samples)
    : spec_(&spec), iota_(iota), chi1_(chi1), chi2_(chi2), t_final_(spec.t_final) {
  namespace ode = boost::numeric::odeint;
  if (samples < 2) throw std::invalid_argument("ODE oracle: need at least two samples");
  dt_ = t_final_ / samples;
  auto system = [this](const State& y, State& dydt, double) { dydt = rhs(y); };
  auto stepper = ode::make_dense_output(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
  State y = y0;
  y_.reserve(static_cast<std::size_t>(samples) + 1);
  ode::integrate_const(stepper, system, y, 0.0, t_final_ + 0.5 * dt_, dt_,
                       [this](const State& s, double) { y_.push_back(s); });
  y_.resize(static_cast<std::size_t>(samples) + 1);
  dy_.reserve(y_.size());
  for (const State& s : y_) dy_.push_back(rhs(s));

  for (std::size_t i = 1; i + 1 < y_.size(); ++i)
    for (int c = 0; c < 3; ++c) m2_ = std::max(m2_, std::abs(dy_[i + 1][c] - dy_[i - 1][c]) / (2.0 * dt_));
  for (const State& s : y_) {
    double row[3] = {0.0, 0.0, 0.0};
    for (int c = 0; c < 3; ++c) {
      const double h = 1e-6 * std::max(1.0, std::abs(s[c]));
      State up = s, dn = s;
      up[c] += h;
      dn[c] -= h;
      const State fu = rhs(up), fd = rhs(dn);
      for (int r = 0; r < 3; ++r) row[r] += std::abs(fu[r] - fd[r]) / (2.0 * h);
    }
    lipschitz_ = std::max(lipschitz_, *std::max_element(row, row + 3));
  }
}

HomogeneousOracle::State HomogeneousOracle::rhs(const State& y) const {
  const ModelSpec& s = *spec_;
  const double phi = y[0], sigma = y[1], z = y[2];
  return {eval_U(phi, sigma, z, chi1_, s),
          chi2_ * s.fn->source(phi, z).v - eval_K(phi, sigma, z, s),
          -s.potential.beta(z) - s.potential.pi(z) + iota_ - s.fn->psi(phi, Sym2{}).v};
}

HomogeneousOracle::State HomogeneousOracle::at(double t) const {
  const double u = std::clamp(t / dt_, 0.0, static_cast<double>(y_.size() - 1));
  const std::size_t i = std::min(static_cast<std::size_t>(u), y_.size() - 2);
  const double s = u - static_cast<double>(i);
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  State out{};
  for (int c = 0; c < 3; ++c)
    out[c] = h00 * y_[i][c] + h10 * dt_ * dy_[i][c] + h01 * y_[i + 1][c] + h11 * dt_ * dy_[i + 1][c];
  return out;
}

double HomogeneousOracle::error_constant() const {
  if (lipschitz_ == 0.0) return 0.5 * m2_ * t_final_;
  return m2_ / (2.0 * lipschitz_) * std::expm1(lipschitz_ * t_final_);
}

}  // namespace tumorctl
