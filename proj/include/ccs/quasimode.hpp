#pragma once

// Quasi-modes of a lossy coupled-cavity system: solution of the generalized
// eigenproblem  A * Omega * V = Lambda * B * V  with omega_mu = sqrt(Lambda_mu).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "ccs/errors.hpp"
#include "ccs/structure.hpp"

namespace ccs {

struct QuasiModeBasis {
  Eigen::MatrixXcd V;  // column mu holds the expansion coefficients v_{q mu}
  Eigen::MatrixXcd W;  // V^-1
  Eigen::MatrixXcd O;  // V^dagger B V, unit diagonal
  Eigen::MatrixXcd P;  // O^-1
  std::vector<ComplexFrequency> freqs;
  double cond_b = 1.0;

  Eigen::Index size() const { return V.cols(); }

  Eigen::VectorXcd omega() const {
    Eigen::VectorXcd w(static_cast<Eigen::Index>(freqs.size()));
    for (std::size_t i = 0; i < freqs.size(); ++i) w(static_cast<Eigen::Index>(i)) = freqs[i].value();
    return w;
  }

  // FNV-1a digest of the mode frequencies and expansion matrix.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
      }
    };
    for (const auto& f : freqs) {
      mix(&f.omega, sizeof(double));
      mix(&f.gamma, sizeof(double));
    }
    mix(V.data(), sizeof(cplx) * static_cast<std::size_t>(V.size()));
    return h;
  }
};

struct SolveOptions {
  double cond_limit = 1e8;
  double branch_tol = 1e-13;     // relative size of a positive Im(omega) treated as zero
  double degeneracy_tol = 1e-10; // relative frequency spacing treated as degenerate
  double tie_tol = 1e-12;        // relative Re(omega) spacing treated as a tie when sorting
};

inline Eigen::MatrixXcd overlap_matrix(const Eigen::MatrixXcd& V, const Eigen::MatrixXcd& B) {
  if (V.rows() != B.rows() || B.rows() != B.cols())
    throw DimensionError("overlap_matrix: dimension mismatch");
  return V.adjoint() * B * V;
}

namespace detail {

inline Eigen::Index dominant_index(const Eigen::VectorXcd& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  return k;
}

// Scale so that v^dagger B v = 1 and the dominant coefficient is real positive.
inline void normalize_column(Eigen::VectorXcd& v, const Eigen::MatrixXcd& B) {
  const double norm = std::sqrt(std::abs((v.adjoint() * B * v)(0, 0).real()));
  v /= norm;
  const cplx d = v(dominant_index(v));
  v *= std::abs(d) / d;
}

}  // namespace detail

inline QuasiModeBasis solve_modes(const TightBindingMatrices& m, const SolveOptions& opt = {}) {
  const Eigen::Index n = m.size();
  if (n == 0) throw DimensionError("solve_modes: empty system");
  QuasiModeBasis out;
  out.cond_b = m.condition_number_b();
  if (!(out.cond_b <= opt.cond_limit)) throw ConditioningError(out.cond_b);

  const Eigen::MatrixXcd AO = m.A * m.omega_sq.asDiagonal();
  const Eigen::MatrixXcd M = m.B.partialPivLu().solve(AO);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, true);
  if (es.info() != Eigen::Success) throw BranchError("eigen decomposition failed to converge");

  std::vector<cplx> w(static_cast<std::size_t>(n));
  Eigen::MatrixXcd V = es.eigenvectors();
  for (Eigen::Index k = 0; k < n; ++k) {
    cplx s = std::sqrt(es.eigenvalues()(k));
    if (s.imag() > 0.0) {
      if (s.imag() <= opt.branch_tol * std::abs(s)) s = {s.real(), 0.0};
      else throw BranchError("mode " + std::to_string(k) + " has gain: Im(omega) = " +
                             std::to_string(s.imag()));
    }
    if (!(s.real() > 0.0))
      throw BranchError("mode " + std::to_string(k) + " has non-positive Re(omega)");
    w[static_cast<std::size_t>(k)] = s;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return w[static_cast<std::size_t>(a)].real() < w[static_cast<std::size_t>(b)].real();
  });

  Eigen::MatrixXcd Vs(n, n);
  std::vector<cplx> ws(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    Vs.col(k) = V.col(order[static_cast<std::size_t>(k)]);
    ws[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
  }

  // Degenerate clusters: Gram-Schmidt in the B inner product.
  for (Eigen::Index start = 0; start < n;) {
    Eigen::Index end = start + 1;
    while (end < n && std::abs(ws[static_cast<std::size_t>(end)] - ws[static_cast<std::size_t>(start)]) <=
                          opt.degeneracy_tol * std::abs(ws[static_cast<std::size_t>(start)]))
      ++end;
    for (Eigen::Index k = start; k < end; ++k) {
      Eigen::VectorXcd v = Vs.col(k);
      for (Eigen::Index j = start; j < k; ++j) {
        const Eigen::VectorXcd u = Vs.col(j);
        v -= (u.adjoint() * m.B * v)(0, 0) * u;
      }
      detail::normalize_column(v, m.B);
      Vs.col(k) = v;
    }
    start = end;
  }

  // Ties in Re(omega) are broken by the index of the dominant coefficient.
  std::vector<Eigen::Index> final_order(static_cast<std::size_t>(n));
  std::iota(final_order.begin(), final_order.end(), 0);
  for (Eigen::Index start = 0; start < n;) {
    Eigen::Index end = start + 1;
    while (end < n && std::abs(ws[static_cast<std::size_t>(end)].real() -
                               ws[static_cast<std::size_t>(start)].real()) <=
                          opt.tie_tol * ws[static_cast<std::size_t>(start)].real())
      ++end;
    std::stable_sort(final_order.begin() + start, final_order.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) {
                       return detail::dominant_index(Vs.col(a)) < detail::dominant_index(Vs.col(b));
                     });
    start = end;
  }

  out.V.resize(n, n);
  out.freqs.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = final_order[static_cast<std::size_t>(k)];
    out.V.col(k) = Vs.col(src);
    out.freqs[static_cast<std::size_t>(k)] = ComplexFrequency::from_complex(ws[static_cast<std::size_t>(src)]);
  }
  out.W = out.V.partialPivLu().inverse();
  out.O = overlap_matrix(out.V, m.B);
  out.P = out.O.partialPivLu().inverse();
  return out;
}

enum RsMode : int { mode_i = 0, mode_p = 1, mode_s = 2 };

struct RSBasis {
  Eigen::Matrix3cd U;      // U(q, j): coefficient of RS cavity q in RS mode j
  Eigen::Matrix3cd Sigma;  // U^-1
  std::array<ComplexFrequency, 3> freqs;  // idler, pump, signal
  std::array<int, 3> ids;  // cavity ids of the RS rows, ascending
  Eigen::Matrix3cd B;      // RS block of B
};

inline RSBasis rs_basis(const SystemLayout& layout, const SolveOptions& opt = {}) {
  std::vector<int> ids;
  for (Role r : {Role::rs_left, Role::rs_center, Role::rs_right}) {
    auto v = layout.ids_with_role(r);
    if (v.size() != 1)
      throw LayoutError("layout must contain exactly one " + std::string(role_name(r)) +
                        " cavity (found " + std::to_string(v.size()) + ")");
    ids.push_back(v.front());
  }
  const auto tb = assemble_matrices(layout, ids);
  const auto qb = solve_modes(tb, opt);
  RSBasis rs;
  rs.U = qb.V;
  rs.Sigma = qb.W;
  rs.B = tb.B;
  for (int j = 0; j < 3; ++j) {
    rs.freqs[static_cast<std::size_t>(j)] = qb.freqs[static_cast<std::size_t>(j)];
    rs.ids[static_cast<std::size_t>(j)] = tb.ids[static_cast<std::size_t>(j)];
  }
  return rs;
}

// Nearest-neighbour tight-binding CROW band: omega_k = Omega0 [1 + (A01 - B01) cos(kd)].
inline ComplexFrequency crow_dispersion(const ComplexFrequency& omega0, cplx a01, cplx b01, double kd) {
  if (std::abs(kd) > pi + 1e-15) throw RangeError("crow_dispersion: |kd| must not exceed pi");
  const double c = std::abs(std::abs(kd) - pi / 2.0) < 1e-15 ? 0.0 : std::cos(kd);
  return ComplexFrequency::from_complex(omega0.value() * (1.0 + (a01 - b01) * c));
}

}  // namespace ccs
