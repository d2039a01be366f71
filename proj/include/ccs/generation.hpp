#pragma once

// Two-mode squeezed thermal state generated in the resonant structure by
// spontaneous four-wave mixing of the pump.  The state is carried by the
// squeezing amplitude r, phase theta and thermal populations n_S, n_I.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ccs/errors.hpp"
#include "ccs/units.hpp"

namespace ccs {

struct GenerationState {
  double t_tilde = 0.0;
  double r = 0.0;
  double theta = 0.0;
  double n_th_s = 0.0;
  double n_th_i = 0.0;
};

struct LossRates {
  double gamma_s = 0.0;  // loaded power decay rates, 2 pi c/a
  double gamma_i = 0.0;
  double gamma_p = 0.0;

  double plus() const { return 0.5 * (gamma_s + gamma_i); }
  double zeta() const { return (gamma_s - gamma_i) / (gamma_s + gamma_i); }
  void validate() const {
    if (!(gamma_s > 0.0 && gamma_i > 0.0 && gamma_p > 0.0))
      throw InputError("loss rates must be positive");
  }
};

// Discretised RS mode fields for the overlap integral defining chi_eff.
struct FieldGrid {
  std::vector<std::array<std::complex<double>, 3>> c_p, c_s, c_i;
  std::vector<double> eps_rs;
  double cell_volume = 1.0;  // m^3
};

// chi3[((i*3 + j)*3 + k)*3 + l]; applied only where eps_rs exceeds substrate_threshold.
using Chi3Tensor = std::array<double, 81>;

// omegas in rad/s.  Returns chi_eff in s^-1 for fields in SI units.
inline std::complex<double> compute_chi_eff(const FieldGrid& f, const Chi3Tensor& chi3, double omega_p,
                                            double omega_s, double omega_i,
                                            double substrate_threshold = 1.0 + 1e-12) {
  const std::size_t n = f.eps_rs.size();
  if (f.c_p.size() != n || f.c_s.size() != n || f.c_i.size() != n)
    throw DimensionError("compute_chi_eff: field grids are not congruent");
  std::complex<double> sum = 0.0;
  for (std::size_t pt = 0; pt < n; ++pt) {
    if (!(f.eps_rs[pt] > substrate_threshold)) continue;
    std::complex<double> local = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            const double c = chi3[static_cast<std::size_t>(((i * 3 + j) * 3 + k) * 3 + l)];
            if (c == 0.0) continue;
            local += c * f.c_p[pt][static_cast<std::size_t>(i)] * f.c_p[pt][static_cast<std::size_t>(j)] *
                     std::conj(f.c_s[pt][static_cast<std::size_t>(k)]) *
                     std::conj(f.c_i[pt][static_cast<std::size_t>(l)]);
          }
    sum += local * f.eps_rs[pt];
  }
  const double pref = -9.0 * hbar / (16.0 * epsilon0) * std::sqrt(omega_p * omega_p * omega_s * omega_i);
  return pref * sum * f.cell_volume;
}

struct GenerationOptions {
  double max_step = 1e-3;   // RK4 step in t-tilde
  bool check_accuracy = true;
  double accuracy_tol = 1e-6;
  GenerationState initial;  // r, n_th_s, n_th_i at the first grid time; vacuum by default
};

struct GenerationTrajectory {
  std::vector<GenerationState> states;
  std::vector<double> g;  // pump strength at each output time
  std::vector<std::string> warnings;
};

namespace detail {

// Piecewise-linear sampler with a monotone search hint.
class LinearSampler {
 public:
  LinearSampler(const std::vector<double>& x, const std::vector<double>& y) : x_(x), y_(y) {}
  double operator()(double t) {
    if (x_.size() == 1) return y_[0];
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    if (t < x_[hint_]) hint_ = 0;
    while (hint_ + 2 < x_.size() && x_[hint_ + 1] <= t) ++hint_;
    const double f = (t - x_[hint_]) / (x_[hint_ + 1] - x_[hint_]);
    return y_[hint_] + f * (y_[hint_ + 1] - y_[hint_]);
  }

 private:
  const std::vector<double>& x_;
  const std::vector<double>& y_;
  std::size_t hint_ = 0;
};

struct GenRhs {
  double zeta;
  std::array<double, 3> operator()(double g, const std::array<double, 3>& s) const {
    const double r = s[0], ns = s[1], ni = s[2];
    const double sh = std::sinh(r), ch = std::cosh(r);
    const double sh2 = sh * sh, ch2 = ch * ch;
    return {g / 2.0 - std::sinh(2.0 * r) / (2.0 * (ns + ni + 1.0)) * (1.0 + zeta * (ni - ns)),
            ns * ((1.0 - zeta) * sh2 - (1.0 + zeta) * ch2) + (1.0 - zeta) * sh2,
            ni * ((1.0 + zeta) * sh2 - (1.0 - zeta) * ch2) + (1.0 + zeta) * sh2};
  }
};

inline std::vector<std::array<double, 3>> rk4_generation(const std::vector<double>& gt,
                                                         const std::vector<double>& gv, double zeta,
                                                         const std::vector<double>& grid, double max_step,
                                                         const std::array<double, 3>& initial) {
  LinearSampler gs(gt, gv);
  GenRhs f{zeta};
  std::vector<std::array<double, 3>> out;
  out.reserve(grid.size());
  std::array<double, 3> s = initial;
  out.push_back(s);
  for (std::size_t n = 1; n < grid.size(); ++n) {
    const double span = grid[n] - grid[n - 1];
    const int steps = std::max(1, static_cast<int>(std::ceil(span / max_step - 1e-9)));
    const double h = span / steps;
    for (int k = 0; k < steps; ++k) {
      const double t = grid[n - 1] + k * h;
      const double g0 = gs(t), g1 = gs(t + 0.5 * h), g2 = gs(t + h);
      auto add = [](const std::array<double, 3>& a, const std::array<double, 3>& b, double c) {
        return std::array<double, 3>{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]};
      };
      const auto k1 = f(g0, s);
      const auto k2 = f(g1, add(s, k1, 0.5 * h));
      const auto k3 = f(g1, add(s, k2, 0.5 * h));
      const auto k4 = f(g2, add(s, k3, h));
      for (int i = 0; i < 3; ++i)
        s[static_cast<std::size_t>(i)] += h / 6.0 *
            (k1[static_cast<std::size_t>(i)] + 2.0 * k2[static_cast<std::size_t>(i)] +
             2.0 * k3[static_cast<std::size_t>(i)] + k4[static_cast<std::size_t>(i)]);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace detail

// Fixed-step RK4 integration of (r, n_S^th, n_I^th), from the vacuum unless
// another initial state is given.  g is
// given as samples (g_t, g_values) and interpolated linearly.
inline GenerationTrajectory integrate_generation(const std::vector<double>& g_t, const std::vector<double>& g_values,
                                                 double zeta, const std::vector<double>& t_grid,
                                                 const GenerationOptions& opt = {}) {
  if (g_t.empty() || g_t.size() != g_values.size())
    throw InputError("integrate_generation: g samples and times must be non-empty and equal in length");
  if (t_grid.empty()) throw InputError("integrate_generation: empty time grid");
  if (!(std::abs(zeta) < 1.0)) throw InputError("integrate_generation: |zeta| must be < 1");
  for (double g : g_values)
    if (g < 0.0) throw InputError("integrate_generation: negative g sample");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw InputError("integrate_generation: time grid must increase");
  const double tol = 1e-9 * std::max(1.0, std::abs(t_grid.back()));
  if (t_grid.front() < g_t.front() - tol || t_grid.back() > g_t.back() + tol)
    throw InputError("integrate_generation: g samples do not cover the time grid");

  const std::array<double, 3> init{opt.initial.r, opt.initial.n_th_s, opt.initial.n_th_i};
  if (init[0] < 0.0 || init[1] < 0.0 || init[2] < 0.0)
    throw InputError("integrate_generation: initial r and n_th must be non-negative");
  GenerationTrajectory tr;
  const auto s = detail::rk4_generation(g_t, g_values, zeta, t_grid, opt.max_step, init);
  detail::LinearSampler gs(g_t, g_values);
  tr.states.resize(t_grid.size());
  tr.g.resize(t_grid.size());
  for (std::size_t n = 0; n < t_grid.size(); ++n) {
    tr.states[n] = {t_grid[n], s[n][0], 0.0, s[n][1], s[n][2]};
    tr.g[n] = gs(t_grid[n]);
  }
  if (opt.check_accuracy && t_grid.size() > 1) {
    const auto half = detail::rk4_generation(g_t, g_values, zeta, t_grid, 0.5 * opt.max_step, init);
    double worst = 0.0;
    for (std::size_t n = 0; n < t_grid.size(); ++n)
      for (int i = 0; i < 3; ++i)
        worst = std::max(worst, std::abs(half[n][static_cast<std::size_t>(i)] - s[n][static_cast<std::size_t>(i)]));
    if (worst > opt.accuracy_tol)
      tr.warnings.push_back("RK4 step too large: halving changes the state by " + std::to_string(worst));
  }
  return tr;
}

// Squeezing phase for a constant driving phase beta; omega_P in 2 pi c/a,
// t-tilde converted to lattice time through Gamma_+.
inline double squeezing_phase(double t_tilde, double omega_p, double beta, double t_tilde0_ref,
                              double gamma_plus, bool beta_is_constant = true) {
  if (!beta_is_constant) throw ContractError("squeezing_phase: driving phase beta is not constant");
  if (!(gamma_plus > 0.0)) throw InputError("squeezing_phase: Gamma_+ must be positive");
  return -2.0 * omega_p * (t_tilde - t_tilde0_ref) / gamma_plus - pi / 2.0 + beta;
}

inline std::pair<double, double> rs_cv_extrema(const GenerationState& s) {
  const double base = s.n_th_s + s.n_th_i + 1.0;
  return {base * std::exp(-2.0 * s.r), base * std::exp(2.0 * s.r)};
}

// Total photon numbers (n_S, n_I) in the RS signal and idler modes.
inline std::pair<double, double> total_photons(const GenerationState& s) {
  const double ch2 = std::cosh(s.r) * std::cosh(s.r), sh2 = std::sinh(s.r) * std::sinh(s.r);
  return {s.n_th_s * ch2 + (1.0 + s.n_th_i) * sh2, s.n_th_i * ch2 + (1.0 + s.n_th_s) * sh2};
}

struct Handoff {
  std::size_t index = 0;
  double t_tilde0 = 0.0;
  GenerationState state;
  double n_s = 0.0;
  double n_i = 0.0;
  double cv_min = 1.0;
  double cv_max = 1.0;
};

inline Handoff select_handoff(const GenerationTrajectory& tr) {
  if (tr.states.empty()) throw InputError("select_handoff: empty trajectory");
  std::size_t best = 0;
  double best_cv = rs_cv_extrema(tr.states[0]).first;
  for (std::size_t n = 1; n < tr.states.size(); ++n) {
    const double cv = rs_cv_extrema(tr.states[n]).first;
    if (cv < best_cv) {
      best_cv = cv;
      best = n;
    }
  }
  if (!(best_cv < 1.0)) throw WindowError("select_handoff: no minimum of cv_min below 1 in the trajectory");
  if (best + 1 == tr.states.size() && best > 0)
    throw WindowError("select_handoff: cv_min still decreasing at the end of the window; extend the window");
  Handoff h;
  h.index = best;
  h.state = tr.states[best];
  h.t_tilde0 = h.state.t_tilde;
  std::tie(h.n_s, h.n_i) = total_photons(h.state);
  std::tie(h.cv_min, h.cv_max) = rs_cv_extrema(h.state);
  return h;
}

}  // namespace ccs
