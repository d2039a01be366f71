#pragma once

// Brute-force reference integrators used to cross-check the main pipeline:
//   * a truncated Fock-space Lindblad integrator for the two RS modes, and
//   * an adaptive ODE integrator for the classical coupled-mode amplitudes.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "ccs/errors.hpp"
#include "ccs/generation.hpp"
#include "ccs/quasimode.hpp"
#include "ccs/structure.hpp"

namespace ccs {

struct FockState2M {
  int cutoff = 0;
  Eigen::MatrixXcd rho;  // basis index n_S * (cutoff + 1) + n_I

  int dim() const { return (cutoff + 1) * (cutoff + 1); }
};

struct FockSample {
  double t_tilde = 0.0;
  double r = 0.0, theta = 0.0, n_th_s = 0.0, n_th_i = 0.0;
  double n_s = 0.0, n_i = 0.0;  // <d^dagger d>
  cplx m = 0.0;                 // <d_S d_I>
  double trace = 1.0;
  double purity = 1.0;
  double edge_population = 0.0;  // population with n_S or n_I at the cutoff
};

struct FockOptions {
  int cutoff = 12;
  double step = 1e-3;        // RK4 step in t-tilde
  double drive_phase = 0.0;  // phase of the d_S^dagger d_I^dagger term
  bool lossless = false;
  double edge_limit = 1e-6;
};

// Inverts the Gaussian relations n_S, n_I, m -> (r, theta, n_S^th, n_I^th).
inline GenerationState gaussian_parameters(double n_s, double n_i, cplx m) {
  GenerationState st;
  const double tot = n_s + n_i + 1.0;
  const double th2r = std::min(2.0 * std::abs(m) / tot, 1.0 - 1e-16);
  st.r = 0.5 * std::atanh(th2r);
  const double big_n = tot / std::cosh(2.0 * st.r) - 1.0;
  st.n_th_s = 0.5 * (big_n + n_s - n_i);
  st.n_th_i = 0.5 * (big_n - n_s + n_i);
  st.theta = std::abs(m) > 0.0 ? std::arg(-m) : 0.0;
  return st;
}

class FockLindblad {
 public:
  explicit FockLindblad(const FockOptions& opt, double zeta) : opt_(opt), zeta_(zeta) {
    if (opt.cutoff < 8) throw InputError("Fock oracle: cutoff must be at least 8");
    const int c1 = opt.cutoff + 1;
    dim_ = c1 * c1;
    using Sp = Eigen::SparseMatrix<cplx>;
    std::vector<Eigen::Triplet<cplx>> ts, ti;
    for (int a = 0; a < c1; ++a)
      for (int b = 0; b < c1; ++b) {
        if (a > 0) ts.emplace_back(idx(a - 1, b), idx(a, b), std::sqrt(static_cast<double>(a)));
        if (b > 0) ti.emplace_back(idx(a, b - 1), idx(a, b), std::sqrt(static_cast<double>(b)));
      }
    ds_ = Sp(dim_, dim_);
    di_ = Sp(dim_, dim_);
    ds_.setFromTriplets(ts.begin(), ts.end());
    di_.setFromTriplets(ti.begin(), ti.end());
    dsd_ = Sp(ds_.adjoint());
    did_ = Sp(di_.adjoint());
    const Sp pair = ds_ * di_;
    hs_ = Sp(std::polar(1.0, opt.drive_phase) * Sp(pair.adjoint()) + std::polar(1.0, -opt.drive_phase) * pair);
    const double gs = opt.lossless ? 0.0 : 1.0 + zeta;
    const double gi = opt.lossless ? 0.0 : 1.0 - zeta;
    gs_ = gs;
    gi_ = gi;
    nloss_ = Eigen::VectorXcd::Zero(dim_);
    for (int a = 0; a < c1; ++a)
      for (int b = 0; b < c1; ++b) nloss_(idx(a, b)) = 0.5 * (gs * a + gi * b);
  }

  int idx(int ns, int ni) const { return ns * (opt_.cutoff + 1) + ni; }

  Eigen::MatrixXcd rhs(double g, const Eigen::MatrixXcd& rho) const {
    const cplx ih(0.0, 0.5 * g);
    Eigen::MatrixXcd out = -ih * (hs_ * rho) + ih * (rho * hs_);
    out -= nloss_.asDiagonal() * rho;
    out -= rho * nloss_.asDiagonal();
    if (gs_ != 0.0) out += gs_ * (ds_ * rho * dsd_);
    if (gi_ != 0.0) out += gi_ * (di_ * rho * did_);
    return out;
  }

  FockSample measure(double t, const Eigen::MatrixXcd& rho) const {
    FockSample s;
    s.t_tilde = t;
    s.trace = rho.trace().real();
    s.purity = (rho * rho).trace().real();
    s.n_s = (dsd_ * ds_ * rho).trace().real();
    s.n_i = (did_ * di_ * rho).trace().real();
    s.m = (ds_ * di_ * rho).trace();
    const int c1 = opt_.cutoff + 1;
    for (int a = 0; a < c1; ++a)
      for (int b = 0; b < c1; ++b)
        if (a == opt_.cutoff || b == opt_.cutoff) s.edge_population += rho(idx(a, b), idx(a, b)).real();
    const auto gp = gaussian_parameters(s.n_s, s.n_i, s.m);
    s.r = gp.r;
    s.theta = gp.theta;
    s.n_th_s = gp.n_th_s;
    s.n_th_i = gp.n_th_i;
    return s;
  }

  int dim() const { return dim_; }

 private:
  FockOptions opt_;
  double zeta_;
  int dim_ = 0;
  double gs_ = 0.0, gi_ = 0.0;
  Eigen::SparseMatrix<cplx> ds_, di_, dsd_, did_, hs_;
  Eigen::VectorXcd nloss_;
};

// RK4 integration of the two-mode Lindblad equation from the vacuum, in
// t-tilde units, with H = (g/2)(e^{i phi} d_S^dagger d_I^dagger + h.c.) and loss
// rates (1 + zeta), (1 - zeta) for the signal and idler modes.
inline std::vector<FockSample> lindblad_fock(const std::vector<double>& g_t, const std::vector<double>& g_values,
                                             double zeta, const std::vector<double>& t_grid,
                                             const FockOptions& opt = {}, FockState2M* final_state = nullptr) {
  if (g_t.empty() || g_t.size() != g_values.size()) throw InputError("lindblad_fock: bad g samples");
  if (t_grid.empty()) throw InputError("lindblad_fock: empty time grid");
  FockLindblad L(opt, zeta);
  detail::LinearSampler gs(g_t, g_values);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(L.dim(), L.dim());
  rho(0, 0) = 1.0;
  std::vector<FockSample> out;
  double t = t_grid.front();
  auto check = [&](const FockSample& s) {
    if (s.edge_population > opt.edge_limit)
      throw CutoffError("Fock oracle: population " + std::to_string(s.edge_population) +
                        " at the cutoff; increase the cutoff beyond " + std::to_string(opt.cutoff));
  };
  out.push_back(L.measure(t, rho));
  check(out.back());
  for (std::size_t n = 1; n < t_grid.size(); ++n) {
    const double span = t_grid[n] - t_grid[n - 1];
    const int steps = std::max(1, static_cast<int>(std::ceil(span / opt.step - 1e-9)));
    const double h = span / steps;
    for (int k = 0; k < steps; ++k) {
      const double g0 = gs(t), g1 = gs(t + 0.5 * h), g2 = gs(t + h);
      const Eigen::MatrixXcd k1 = L.rhs(g0, rho);
      const Eigen::MatrixXcd k2 = L.rhs(g1, rho + 0.5 * h * k1);
      const Eigen::MatrixXcd k3 = L.rhs(g1, rho + 0.5 * h * k2);
      const Eigen::MatrixXcd k4 = L.rhs(g2, rho + h * k3);
      rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
    }
    t = t_grid[n];
    out.push_back(L.measure(t, rho));
    check(out.back());
  }
  if (final_state) {
    final_state->cutoff = opt.cutoff;
    final_state->rho = rho;
  }
  return out;
}

struct OdeOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  long max_steps = 10000000;
};

// Adaptive Dormand-Prince integration of dy/dt = -i G y for a dense generator G.
inline Eigen::VectorXcd dense_ode_integrate(const Eigen::MatrixXcd& G, const Eigen::VectorXcd& x0, double t,
                                            const OdeOptions& opt = {}) {
  namespace ode = boost::numeric::odeint;
  const Eigen::Index n = G.rows();
  if (x0.size() != n || G.cols() != n) throw DimensionError("dense_ode_integrate: dimension mismatch");
  if (t < 0.0) throw InputError("dense_ode_integrate: t must be non-negative");

  using state = std::vector<double>;
  state y(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(2 * i)] = x0(i).real();
    y[static_cast<std::size_t>(2 * i + 1)] = x0(i).imag();
  }
  auto sys = [&](const state& s, state& dsdt, double) {
    Eigen::VectorXcd z(n);
    for (Eigen::Index i = 0; i < n; ++i)
      z(i) = {s[static_cast<std::size_t>(2 * i)], s[static_cast<std::size_t>(2 * i + 1)]};
    const Eigen::VectorXcd d = cplx(0.0, -1.0) * (G * z);
    for (Eigen::Index i = 0; i < n; ++i) {
      dsdt[static_cast<std::size_t>(2 * i)] = d(i).real();
      dsdt[static_cast<std::size_t>(2 * i + 1)] = d(i).imag();
    }
  };
  auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<state>>(opt.abs_tol, opt.rel_tol);
  double tc = 0.0;
  double dt = std::min(0.1, t > 0.0 ? t : 0.1);
  long count = 0;
  while (tc < t) {
    if (tc + dt > t) dt = t - tc;
    const double before = dt;
    if (stepper.try_step(sys, y, tc, dt) == ode::fail && before < 1e-14 * std::max(1.0, t))
      throw StiffnessError("dense_ode_integrate: step size underflow at t = " + std::to_string(tc));
    if (++count > opt.max_steps) throw StiffnessError("dense_ode_integrate: step limit exceeded");
  }
  Eigen::VectorXcd out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out(i) = {y[static_cast<std::size_t>(2 * i)], y[static_cast<std::size_t>(2 * i + 1)]};
  return out;
}

// Generator rebuilt from a quasi-mode basis, G = V diag(omega) W.
inline Eigen::VectorXcd dense_ode_propagator(const QuasiModeBasis& basis, const Eigen::VectorXcd& x0, double t,
                                             const OdeOptions& opt = {}) {
  return dense_ode_integrate(basis.V * basis.omega().asDiagonal() * basis.W, x0, t, opt);
}

// Generator taken directly from the matrices as the principal square root of
// B^-1 A Omega (Schur method), without going through the eigendecomposition.
inline Eigen::MatrixXcd tight_binding_generator(const TightBindingMatrices& m) {
  const Eigen::MatrixXcd M = m.B.partialPivLu().solve(m.A * m.omega_diag());
  return M.sqrt();
}

inline Eigen::VectorXcd dense_ode_propagator(const TightBindingMatrices& m, const Eigen::VectorXcd& x0, double t,
                                             const OdeOptions& opt = {}) {
  return dense_ode_integrate(tight_binding_generator(m), x0, t, opt);
}

}  // namespace ccs
