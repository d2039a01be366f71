#pragma once

// Free evolution of the generated state over the full structure.
//
// Single-cavity operators evolve as a(t) = Phi(t) a(t0), with
// Phi = W^dagger O F P V^dagger and F = diag(exp(-i omega_mu t)).  Times passed
// to the propagator are lattice times a/(2 pi c); callers working in t-tilde
// divide by Gamma_+.

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ccs/errors.hpp"
#include "ccs/generation.hpp"
#include "ccs/pump.hpp"
#include "ccs/quasimode.hpp"
#include "ccs/structure.hpp"

namespace ccs {

// Second moments at the handoff time, supported on the three RS rows.
struct MomentMatrices {
  Eigen::Index n = 0;
  std::array<Eigen::Index, 3> support{};
  Eigen::Matrix3cd aa = Eigen::Matrix3cd::Zero();   // <a_p a_q>
  Eigen::Matrix3cd ada = Eigen::Matrix3cd::Zero();  // <a_p^dagger a_q>

  Eigen::MatrixXcd dense_aa() const { return expand(aa); }
  Eigen::MatrixXcd dense_ada() const { return expand(ada); }

 private:
  Eigen::MatrixXcd expand(const Eigen::Matrix3cd& m) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]) = m(i, j);
    return out;
  }
};

inline MomentMatrices initial_moments(const GenerationState& s, const RSBasis& rs,
                                      const std::array<Eigen::Index, 3>& support, Eigen::Index n_total) {
  MomentMatrices m;
  m.n = n_total;
  m.support = support;
  const double ch = std::cosh(s.r), sh = std::sinh(s.r);
  const double big_n = s.n_th_s + s.n_th_i + 1.0;
  const auto [ns, ni] = total_photons(s);
  const cplx squeeze = big_n * std::polar(1.0, s.theta) * ch * sh;
  // sigma_pj = Sigma(j, p)
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) {
      const cplx sps = rs.Sigma(mode_s, p), spi = rs.Sigma(mode_i, p);
      const cplx sqs = rs.Sigma(mode_s, q), sqi = rs.Sigma(mode_i, q);
      m.aa(p, q) = -(std::conj(sps) * std::conj(sqi) + std::conj(spi) * std::conj(sqs)) * squeeze;
      m.ada(p, q) = sps * std::conj(sqs) * ns + spi * std::conj(sqi) * ni;
    }
  return m;
}

inline MomentMatrices initial_moments(const GenerationState& s, const RSBasis& rs, const TightBindingMatrices& tb) {
  std::array<Eigen::Index, 3> support{};
  for (int q = 0; q < 3; ++q) support[static_cast<std::size_t>(q)] = tb.index_of(rs.ids[static_cast<std::size_t>(q)]);
  return initial_moments(s, rs, support, tb.size());
}

struct Propagator {
  Eigen::MatrixXcd phi;
  double elapsed = 0.0;
};

// Precomputes the time-independent factors of Phi so that single rows can be
// evaluated in O(3N) per time point.
class PropagatorFactory {
 public:
  PropagatorFactory(const QuasiModeBasis& basis, bool orthogonal_approx) : w_(basis.omega()) {
    if (orthogonal_approx) {
      left_ = basis.W.adjoint();
      right_ = basis.V.adjoint();
    } else {
      left_ = basis.W.adjoint() * basis.O;
      right_ = basis.P * basis.V.adjoint();
    }
  }

  Eigen::VectorXcd phases(double elapsed) const {
    if (elapsed < 0.0) throw InputError("propagator: elapsed time must be non-negative");
    return (cplx(0.0, -elapsed) * w_).array().exp();
  }

  Propagator full(double elapsed) const {
    return {left_ * phases(elapsed).asDiagonal() * right_, elapsed};
  }

  // Row p of Phi restricted to the given columns.
  template <std::size_t K>
  Eigen::Matrix<cplx, 1, static_cast<int>(K)> row(Eigen::Index p, double elapsed,
                                                  const std::array<Eigen::Index, K>& cols) const {
    const Eigen::VectorXcd f = phases(elapsed);
    Eigen::Matrix<cplx, 1, static_cast<int>(K)> out;
    for (std::size_t c = 0; c < K; ++c)
      out(0, static_cast<Eigen::Index>(c)) =
          (left_.row(p).transpose().cwiseProduct(f).cwiseProduct(right_.col(cols[c]))).sum();
    return out;
  }

 private:
  Eigen::VectorXcd w_;
  Eigen::MatrixXcd left_;
  Eigen::MatrixXcd right_;
};

inline Propagator propagator(const QuasiModeBasis& basis, double elapsed, bool orthogonal_approx = false) {
  return PropagatorFactory(basis, orthogonal_approx).full(elapsed);
}

// <a^dagger a>(t) = conj(Phi) M Phi^T, dense.
inline Eigen::MatrixXcd evolve_ada(const Propagator& phi, const Eigen::MatrixXcd& ada) {
  return phi.phi.conjugate() * ada * phi.phi.transpose();
}

inline Eigen::RowVector3cd support_row(const Propagator& phi, Eigen::Index p, const MomentMatrices& m) {
  Eigen::RowVector3cd r;
  for (int c = 0; c < 3; ++c) r(c) = phi.phi(p, m.support[static_cast<std::size_t>(c)]);
  return r;
}

inline double photon_number(const Eigen::RowVector3cd& row, const MomentMatrices& m) {
  return (row.conjugate() * m.ada * row.transpose())(0, 0).real();
}

inline double photon_number(const Propagator& phi, const MomentMatrices& m, Eigen::Index p) {
  return photon_number(support_row(phi, p, m), m);
}

struct CvTerms {
  double invariant = 0.0;  // phase-independent part
  cplx pair = 0.0;         // sum Phi_{pS q} Phi_{pI q'} <a_q a_q'>
};

inline CvTerms cv_terms(const Eigen::RowVector3cd& row_s, const Eigen::RowVector3cd& row_i, const MomentMatrices& m,
                        double b_ss, double b_ii) {
  CvTerms t;
  t.invariant = 0.5 * (b_ss + b_ii) + photon_number(row_s, m) + photon_number(row_i, m);
  t.pair = (row_s * m.aa * row_i.transpose())(0, 0);
  return t;
}

struct RolePair {
  Role s;
  Role i;
};

inline void check_cv_roles(const std::optional<RolePair>& roles) {
  if (!roles) return;
  if (roles->s != Role::signal_crow)
    throw RoleError("correlation_variance: p_S must be a signal_crow cavity, got " + std::string(role_name(roles->s)));
  if (roles->i != Role::idler_crow)
    throw RoleError("correlation_variance: p_I must be an idler_crow cavity, got " + std::string(role_name(roles->i)));
}

inline double correlation_variance(const Propagator& phi_s, const Propagator& phi_i, const MomentMatrices& m,
                                   const Eigen::MatrixXcd& B, Eigen::Index p_s, Eigen::Index p_i,
                                   double lo_phase = 0.0, std::optional<RolePair> roles = std::nullopt) {
  check_cv_roles(roles);
  const auto t = cv_terms(support_row(phi_s, p_s, m), support_row(phi_i, p_i, m), m, B(p_s, p_s).real(),
                          B(p_i, p_i).real());
  return t.invariant - 2.0 * (std::polar(1.0, lo_phase) * t.pair).real();
}

inline std::pair<double, double> cv_envelope(const Propagator& phi_s, const Propagator& phi_i,
                                             const MomentMatrices& m, const Eigen::MatrixXcd& B, Eigen::Index p_s,
                                             Eigen::Index p_i, std::optional<RolePair> roles = std::nullopt) {
  check_cv_roles(roles);
  const auto t = cv_terms(support_row(phi_s, p_s, m), support_row(phi_i, p_i, m), m, B(p_s, p_s).real(),
                          B(p_i, p_i).real());
  return {t.invariant - 2.0 * std::abs(t.pair), t.invariant + 2.0 * std::abs(t.pair)};
}

struct DecayFitOptions {
  double t_scan_step = 100.0;  // coarse step used to locate the end of the fit window
  double t_cap = 5.0e6;
  int samples = 4000;
  double lo = 0.2;
  double hi = 0.9;
  double residual_tol = 0.05;
};

struct DecayFit {
  double gamma = 0.0;
  double residual = 0.0;  // rms of ln n about the fitted line
  std::size_t points = 0;
  std::vector<double> t, n;
  std::vector<std::string> warnings;
};

// Photon number n_j(t) in RS mode j after starting with one photon in that mode.
class ModeDecay {
 public:
  ModeDecay(const QuasiModeBasis& basis, const TightBindingMatrices& tb, const RSBasis& rs, int j)
      : w_(basis.omega()) {
    Eigen::VectorXcd s = Eigen::VectorXcd::Zero(tb.size());
    for (int q = 0; q < 3; ++q)
      s(tb.index_of(rs.ids[static_cast<std::size_t>(q)])) = std::conj(rs.Sigma(j, q));
    const Eigen::VectorXcd c = basis.W * tb.B.partialPivLu().solve(s);
    const Eigen::RowVectorXcd h = rs_projection_row(rs, tb, j) * basis.V;
    k_ = h.transpose().cwiseProduct(c);
  }
  double operator()(double t) const { return std::norm(k_.cwiseProduct((cplx(0.0, -t) * w_).array().exp().matrix()).sum()); }

 private:
  Eigen::VectorXcd w_;
  Eigen::VectorXcd k_;
};

// Linear least-squares fit of ln n(t) over the first contiguous stretch where
// lo <= n <= hi.
inline DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& n, const DecayFitOptions& opt) {
  DecayFit fit;
  fit.t = t;
  fit.n = n;
  std::size_t a = 0;
  while (a < n.size() && !(n[a] >= opt.lo && n[a] <= opt.hi)) ++a;
  std::size_t b = a;
  while (b < n.size() && n[b] >= opt.lo && n[b] <= opt.hi) ++b;
  if (b - a < 3) throw WindowError("decay fit: fewer than 3 samples inside the fit window");
  double st = 0, sy = 0, stt = 0, sty = 0;
  const double cnt = static_cast<double>(b - a);
  for (std::size_t k = a; k < b; ++k) {
    const double y = std::log(n[k]);
    st += t[k];
    sy += y;
    stt += t[k] * t[k];
    sty += t[k] * y;
  }
  const double slope = (cnt * sty - st * sy) / (cnt * stt - st * st);
  const double icpt = (sy - slope * st) / cnt;
  double ss = 0;
  for (std::size_t k = a; k < b; ++k) {
    const double d = std::log(n[k]) - (icpt + slope * t[k]);
    ss += d * d;
  }
  fit.gamma = -slope;
  fit.residual = std::sqrt(ss / cnt);
  fit.points = b - a;
  if (fit.residual > opt.residual_tol)
    fit.warnings.push_back("decay is not exponential: fit residual " + std::to_string(fit.residual));
  return fit;
}

inline DecayFit loaded_decay_rate(const QuasiModeBasis& basis, const TightBindingMatrices& tb, const RSBasis& rs,
                                  int j, const DecayFitOptions& opt = {}) {
  if (j < 0 || j > 2) throw InputError("loaded_decay_rate: mode index must be I, P or S");
  const ModeDecay nd(basis, tb, rs, j);
  double t_end = 0.0;
  while (nd(t_end) >= opt.lo) {
    t_end += opt.t_scan_step;
    if (t_end > opt.t_cap) throw WindowError("loaded_decay_rate: population never fell below the fit window");
  }
  std::vector<double> t(static_cast<std::size_t>(opt.samples)), n(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k] = t_end * static_cast<double>(k) / static_cast<double>(t.size() - 1);
    n[k] = nd(t[k]);
  }
  return fit_decay(t, n, opt);
}

inline LossRates loaded_loss_rates(const QuasiModeBasis& basis, const TightBindingMatrices& tb, const RSBasis& rs,
                                   const DecayFitOptions& opt = {}) {
  LossRates lr;
  lr.gamma_i = loaded_decay_rate(basis, tb, rs, mode_i, opt).gamma;
  lr.gamma_p = loaded_decay_rate(basis, tb, rs, mode_p, opt).gamma;
  lr.gamma_s = loaded_decay_rate(basis, tb, rs, mode_s, opt).gamma;
  return lr;
}

}  // namespace ccs
