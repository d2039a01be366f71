#pragma once

// Classical propagation of a Gaussian pump pulse launched in the pump CROW and
// its projection onto the pump quasi-mode of the resonant structure.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccs/errors.hpp"
#include "ccs/quasimode.hpp"
#include "ccs/structure.hpp"
#include "ccs/units.hpp"

namespace ccs {

struct PumpPulse {
  double n_p = 0.0;
  double kappa_d = 2.0 * pi / 20.0;  // kappa times the CROW period d
  double k0_d = -pi / 2.0;
  int q0 = 0;

  void validate() const {
    if (!(n_p >= 0.0)) throw InputError("pump pulse: n_p must be non-negative");
    if (!(kappa_d > 0.0 && kappa_d < pi)) throw InputError("pump pulse: need 0 < kappa d < pi");
  }
};

struct PumpCoefficients {
  Eigen::VectorXcd x;  // over the rows of the matrix subset
  double norm = 0.0;   // sum |x_q|^2
  bool truncated = false;
  std::string warning;
};

// Gaussian wavepacket in the pump CROW; q is the cavity id.
inline PumpCoefficients initial_coefficients(const PumpPulse& pulse,
                                             const std::vector<int>& pump_crow_ids,
                                             const std::vector<int>& row_ids) {
  pulse.validate();
  if (std::find(pump_crow_ids.begin(), pump_crow_ids.end(), pulse.q0) == pump_crow_ids.end())
    throw InputError("pump pulse: q0 = " + std::to_string(pulse.q0) + " is not a pump-CROW cavity");
  PumpCoefficients out;
  out.x = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(row_ids.size()));
  const double amp = std::sqrt(pulse.kappa_d * pulse.n_p / std::sqrt(2.0 * pi));
  const double kd2 = pulse.kappa_d * pulse.kappa_d;
  for (int q : pump_crow_ids) {
    auto it = std::lower_bound(row_ids.begin(), row_ids.end(), q);
    if (it == row_ids.end() || *it != q) continue;
    const double dq = q - pulse.q0;
    const cplx v = amp * std::exp(-kd2 * dq * dq / 4.0) * std::polar(1.0, dq * pulse.k0_d);
    out.x(it - row_ids.begin()) = v;
  }
  out.norm = out.x.squaredNorm();
  if (pulse.n_p > 0.0 && out.norm < 0.999 * pulse.n_p) {
    out.truncated = true;
    out.warning = "pump pulse truncated by CROW length: sum |x_q|^2 = " + std::to_string(out.norm / pulse.n_p) +
                  " n_p";
  }
  return out;
}

// Pump-CROW cavity id at which the pulse is centred by default: far enough
// from the RS end that the pulse starts outside the RS.
inline int default_q0(const SystemLayout& layout, double kappa_d) {
  const auto pump = layout.ids_with_role(Role::pump_crow);
  if (pump.empty()) throw LayoutError("layout has no pump_crow cavities");
  const auto rs = layout.ids_with_role(Role::rs_left);
  if (rs.empty()) throw LayoutError("layout has no rs_left cavity");
  const auto& target = layout.cavity(rs.front());
  auto dist = [&](int id) {
    const auto& c = layout.cavity(id);
    return std::hypot(c.x - target.x, c.y - target.y);
  };
  const bool end_is_last = dist(pump.back()) <= dist(pump.front());
  const int offset = std::max(15, static_cast<int>(std::ceil(4.0 / kappa_d)));
  const int n = static_cast<int>(pump.size());
  const int k = end_is_last ? std::max(0, n - 1 - offset) : std::min(n - 1, offset);
  return pump[static_cast<std::size_t>(k)];
}

// y(t) = V F(t) W x with F = diag(exp(-i omega_mu t)).
inline Eigen::VectorXcd evolve_pump(const Eigen::VectorXcd& x, const QuasiModeBasis& basis, double t) {
  if (t < 0.0) throw InputError("evolve_pump: t must be non-negative");
  const Eigen::VectorXcd w = basis.omega();
  const Eigen::VectorXcd f = (cplx(0.0, -t) * w).array().exp();
  return basis.V * (f.asDiagonal() * (basis.W * x));
}

// Row h with h * y = sum_{q in RS} sum_q' conj(u_qj) B_qq' y_q'.
inline Eigen::RowVectorXcd rs_projection_row(const RSBasis& rs, const TightBindingMatrices& tb, int j) {
  Eigen::RowVectorXcd h = Eigen::RowVectorXcd::Zero(tb.size());
  for (int q = 0; q < 3; ++q)
    h += std::conj(rs.U(q, j)) * tb.B.row(tb.index_of(rs.ids[static_cast<std::size_t>(q)]));
  return h;
}

inline cplx project_to_rs(const Eigen::VectorXcd& y, const RSBasis& rs, const TightBindingMatrices& tb) {
  return (rs_projection_row(rs, tb, mode_p) * y)(0, 0);
}

struct PumpStrength {
  std::vector<double> g;
  double beta = 0.0;
  double beta_std = 0.0;
  bool beta_is_constant = true;
  std::size_t window_lo = 0, window_hi = 0;
};

// g = 2 |alpha^2 chi| / Gamma_+ (chi in s^-1, Gamma_+ in 2 pi c/a).  The
// driving phase beta is read off alpha^2 chi = |alpha^2 chi| e^{-2 i omega_P t} e^{i beta}
// over the contiguous window around the peak where g > window_frac * max(g).
inline PumpStrength pump_strength(const std::vector<cplx>& alpha, const std::vector<double>& t, cplx chi_eff,
                                  double gamma_plus, double omega_p, double a_nm = default_lattice_nm,
                                  double window_frac = 0.1, double beta_tol = 0.01) {
  if (!(gamma_plus > 0.0)) throw InputError("pump_strength: Gamma_+ must be positive");
  if (alpha.size() != t.size()) throw DimensionError("pump_strength: alpha and t differ in length");
  PumpStrength ps;
  const double scale = 2.0 / (gamma_plus * rate_unit(a_nm));
  ps.g.resize(alpha.size());
  for (std::size_t n = 0; n < alpha.size(); ++n) ps.g[n] = scale * std::abs(alpha[n] * alpha[n] * chi_eff);
  if (alpha.empty()) return ps;
  const auto kmax = static_cast<std::size_t>(std::max_element(ps.g.begin(), ps.g.end()) - ps.g.begin());
  const double gmax = ps.g[kmax];
  if (gmax == 0.0) return ps;
  std::size_t lo = kmax, hi = kmax;
  while (lo > 0 && ps.g[lo - 1] > window_frac * gmax) --lo;
  while (hi + 1 < ps.g.size() && ps.g[hi + 1] > window_frac * gmax) ++hi;
  ps.window_lo = lo;
  ps.window_hi = hi;

  std::vector<double> phase;
  phase.reserve(hi - lo + 1);
  double prev = 0.0, offset = 0.0;
  for (std::size_t n = lo; n <= hi; ++n) {
    const double raw = std::remainder(std::arg(alpha[n] * alpha[n] * chi_eff) + 2.0 * omega_p * t[n], 2.0 * pi);
    if (n > lo) {
      const double d = raw + offset - prev;
      offset -= 2.0 * pi * std::round(d / (2.0 * pi));
    }
    prev = raw + offset;
    phase.push_back(prev);
  }
  const double mean = std::accumulate(phase.begin(), phase.end(), 0.0) / static_cast<double>(phase.size());
  double var = 0.0;
  for (double p : phase) var += (p - mean) * (p - mean);
  ps.beta_std = std::sqrt(var / static_cast<double>(phase.size()));
  ps.beta = std::remainder(mean, 2.0 * pi);
  ps.beta_is_constant = ps.beta_std < beta_tol;
  return ps;
}

struct PumpTrace {
  std::vector<double> t;      // a/(2 pi c)
  std::vector<cplx> alpha;    // coherent amplitude in the RS pump mode
  std::vector<double> g;      // dimensionless pump strength
  double beta = 0.0;          // driving phase referenced to t = 0
  double beta_std = 0.0;
  bool beta_is_constant = true;
  double n_p = 0.0;
  double gamma_plus = 0.0;
  double omega_p = 0.0;
  std::vector<std::string> warnings;

  std::size_t peak_index() const {
    return g.empty() ? 0 : static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
  }
  double g_max() const { return g.empty() ? 0.0 : g[peak_index()]; }
  double peak_photons() const { return alpha.empty() ? 0.0 : std::norm(alpha[peak_index()]); }

  // The trace for a pulse with factor times as many photons (same shape).
  PumpTrace scaled(double factor) const {
    PumpTrace s = *this;
    const double a = std::sqrt(factor);
    for (auto& v : s.alpha) v *= a;
    for (auto& v : s.g) v *= factor;
    s.n_p *= factor;
    return s;
  }
};

struct PumpTraceOptions {
  double dt = 0.05;
  std::optional<double> t_max;
  double g_floor = 1e-3;
  double t_cap = 1.0e6;
  int resync_every = 512;
  double a_nm = default_lattice_nm;
  double beta_window = 0.1;
  double beta_tol = 0.01;
};

// Samples alpha_P(t) = sum_mu h_mu c_mu e^{-i omega_mu t} on a uniform grid,
// using a multiplicative recurrence re-synchronised to the exact phase
// every resync_every steps.  Without an explicit t_max, sampling stops once g
// has passed its peak and fallen below g_floor * max(g).
inline PumpTrace pump_trace(const QuasiModeBasis& basis, const RSBasis& rs, const TightBindingMatrices& tb,
                            const PumpCoefficients& x, double n_p, cplx chi_eff, double gamma_plus,
                            const PumpTraceOptions& opt = {}) {
  if (!(opt.dt > 0.0)) throw InputError("pump_trace: dt must be positive");
  PumpTrace tr;
  tr.n_p = n_p;
  tr.gamma_plus = gamma_plus;
  tr.omega_p = rs.freqs[mode_p].omega;
  const Eigen::VectorXcd w = basis.omega();
  const Eigen::RowVectorXcd h = rs_projection_row(rs, tb, mode_p) * basis.V;
  const Eigen::VectorXcd k = h.transpose().cwiseProduct(basis.W * x.x);
  const Eigen::VectorXcd z = (cplx(0.0, -opt.dt) * w).array().exp();
  const double scale = 2.0 * std::abs(chi_eff) / (gamma_plus * rate_unit(opt.a_nm));

  Eigen::VectorXcd cur = k;
  double gmax = 0.0, g0 = 0.0;
  std::size_t kmax = 0;
  for (std::size_t n = 0;; ++n) {
    const double t = static_cast<double>(n) * opt.dt;
    if (n > 0) {
      if (n % static_cast<std::size_t>(opt.resync_every) == 0)
        cur = k.cwiseProduct((cplx(0.0, -t) * w).array().exp().matrix());
      else
        cur = cur.cwiseProduct(z);
    }
    const cplx a = cur.sum();
    const double g = scale * std::norm(a);
    tr.t.push_back(t);
    tr.alpha.push_back(a);
    tr.g.push_back(g);
    if (n == 0) g0 = g;
    if (g > gmax) {
      gmax = g;
      kmax = n;
    }
    if (opt.t_max) {
      if (t >= *opt.t_max) break;
      continue;
    }
    if (gmax == 0.0) break;
    if (n > kmax && g < opt.g_floor * gmax && (gmax >= g0 / opt.g_floor || g < opt.g_floor * g0)) break;
    if (t >= opt.t_cap) {
      tr.warnings.push_back("pump trace stopped at t_cap before g fell below the floor");
      break;
    }
  }

  const auto ps = pump_strength(tr.alpha, tr.t, chi_eff, gamma_plus, tr.omega_p, opt.a_nm, opt.beta_window,
                                opt.beta_tol);
  tr.beta = ps.beta;
  tr.beta_std = ps.beta_std;
  tr.beta_is_constant = ps.beta_is_constant;
  if (!ps.beta_is_constant)
    tr.warnings.push_back("driving phase beta is not constant (std " + std::to_string(ps.beta_std) + " rad)");
  if (tr.peak_photons() > n_p * (1.0 + 1e-9) && n_p > 0.0)
    tr.warnings.push_back("|alpha_P|^2 exceeds n_p");
  return tr;
}

}  // namespace ccs
