#include <gtest/gtest.h>

#include <cmath>

#include "ccs/default_layout.hpp"
#include "ccs/quasimode.hpp"
#include "ccs/units.hpp"
#include "test_support.hpp"

using namespace ccs;
using ccs_test::cavity;
using ccs_test::pair_class;
using ccs_test::small_document;
using nlohmann::json;

namespace {

TightBindingMatrices two_cavity(double w, double q, double a01, double b01) {
  TightBindingMatrices m;
  m.ids = {1, 2};
  const cplx c(w, -w / (2.0 * q));
  m.omega_sq = Eigen::VectorXcd::Constant(2, c * c);
  m.A = Eigen::MatrixXcd::Identity(2, 2);
  m.B = Eigen::MatrixXcd::Identity(2, 2);
  m.A(0, 1) = m.A(1, 0) = a01;
  m.B(0, 1) = m.B(1, 0) = b01;
  return m;
}

double max_offdiag(const Eigen::MatrixXcd& m) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j) worst = std::max(worst, std::abs(m(i, j)));
  return worst;
}

// |<a, b>| / (|a| |b|) for complex vectors.
double alignment(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

}  // namespace

TEST(Modes, SingleCavityIsExact) {
  TightBindingMatrices m;
  m.ids = {1};
  const cplx w(0.3076, -0.3076 / 38000.0);
  m.A = Eigen::MatrixXcd::Identity(1, 1);
  m.B = Eigen::MatrixXcd::Identity(1, 1);
  m.omega_sq = Eigen::VectorXcd::Constant(1, w * w);
  const auto b = solve_modes(m);
  ASSERT_EQ(b.size(), 1);
  EXPECT_NEAR(std::abs(b.freqs[0].value() - w), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b.V(0, 0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b.O(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(Modes, TwoCavityClosedForm) {
  const double w = 0.307, q = 19000.0, a = 0.013, bb = 0.010;
  const auto b = solve_modes(two_cavity(w, q, a, bb));
  const cplx c(w, -w / (2.0 * q));
  // Symmetric and antisymmetric supermodes: Lambda = Omega^2 (1 +- A01) / (1 +- B01).
  const cplx lp = c * c * (1.0 + a) / (1.0 + bb), lm = c * c * (1.0 - a) / (1.0 - bb);
  const cplx wp = std::sqrt(lp), wm = std::sqrt(lm);
  ASSERT_EQ(b.size(), 2);
  EXPECT_NEAR(std::abs(b.freqs[0].value() - wm), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(b.freqs[1].value() - wp), 0.0, 1e-14);
  // Antisymmetric mode first: components of opposite sign.
  EXPECT_LT((b.V(0, 0) / b.V(1, 0)).real(), 0.0);
  EXPECT_GT((b.V(0, 1) / b.V(1, 1)).real(), 0.0);
  // Normalisation v^dagger B v = 1: v = (1, +-1) / sqrt(2 (1 +- B01)).
  EXPECT_NEAR(std::abs(b.V(0, 1)), 1.0 / std::sqrt(2.0 * (1.0 + bb)), 1e-13);
  EXPECT_NEAR(std::abs(b.V(0, 0)), 1.0 / std::sqrt(2.0 * (1.0 - bb)), 1e-13);
}

TEST(Modes, ReconstructionOnDefaultSystem) {
  const auto lay = load_layout(default_layout_document());
  const auto tb = assemble_matrices(lay);
  const auto b = solve_modes(tb);
  ASSERT_EQ(b.size(), 184);
  const Eigen::VectorXcd w = b.omega();
  const Eigen::MatrixXcd lhs = tb.A * tb.omega_diag() * b.V;
  const Eigen::MatrixXcd rhs = tb.B * b.V * w.cwiseProduct(w).asDiagonal();
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((b.V * b.W - Eigen::MatrixXcd::Identity(184, 184)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((b.O * b.P - Eigen::MatrixXcd::Identity(184, 184)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((b.O - b.O.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index k = 0; k < 184; ++k) EXPECT_NEAR(std::abs(b.O(k, k) - 1.0), 0.0, 1e-12);
  for (std::size_t k = 0; k < b.freqs.size(); ++k) {
    EXPECT_GT(b.freqs[k].omega, 0.0);
    EXPECT_GE(b.freqs[k].gamma, 0.0);
    if (k > 0) {
      EXPECT_LE(b.freqs[k - 1].omega, b.freqs[k].omega);
    }
  }
}

TEST(Modes, DefaultSystemHasStronglyNonOrthogonalModes) {
  const auto tb = assemble_matrices(load_layout(default_layout_document()));
  const auto b = solve_modes(tb);
  // Lossless systems give O = I to 1e-10; the loaded default system does not.
  EXPECT_GT(max_offdiag(b.O), 0.02);
  EXPECT_LT(b.cond_b, 10.0);
}

TEST(Modes, LosslessHermitianSystemIsOrthonormal) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto tb = ccs_test::hermitian_lossless(8, seed);
    const auto b = solve_modes(tb);
    for (const auto& f : b.freqs) EXPECT_LT(std::abs(f.gamma), 1e-14);
    EXPECT_LT((b.O - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Modes, DegenerateClusterIsOrthogonalised) {
  TightBindingMatrices m = two_cavity(0.3, 10000.0, 0.0, 0.0);
  const auto b = solve_modes(m);
  EXPECT_LT((b.O - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
  // Ties resolved by dominant component: mode 0 lives on cavity 0.
  EXPECT_GT(std::abs(b.V(0, 0)), std::abs(b.V(1, 0)));
  EXPECT_GT(std::abs(b.V(1, 1)), std::abs(b.V(0, 1)));
}

TEST(Modes, GainIsRejectedByTheBranchRule) {
  TightBindingMatrices m = two_cavity(0.3, 10000.0, 0.01, 0.0);
  const cplx gain(0.3, 1e-4);
  m.omega_sq(0) = gain * gain;
  m.omega_sq(1) = gain * gain;
  EXPECT_THROW(solve_modes(m), BranchError);
}

TEST(Modes, IllConditionedOverlapIsRejected) {
  TightBindingMatrices m = two_cavity(0.3, 10000.0, 0.01, 1.0 - 1e-9);
  try {
    solve_modes(m);
    FAIL() << "expected ConditioningError";
  } catch (const ConditioningError& e) {
    EXPECT_GT(e.condition_number(), 1e8);
  }
}

TEST(Modes, DeterministicHash) {
  const auto tb = ccs_test::random_chain(12, 7);
  EXPECT_EQ(solve_modes(tb).hash(), solve_modes(tb).hash());
  EXPECT_NE(solve_modes(tb).hash(), solve_modes(ccs_test::random_chain(12, 8)).hash());
}

TEST(RsBasis, DefaultResonances) {
  const auto rs = rs_basis(load_layout(default_layout_document()));
  // Table I: idler 0.3061, pump 0.3076, signal 0.3092.
  EXPECT_NEAR(rs.freqs[mode_i].omega, 0.30610, 1e-3 * 0.30610);
  EXPECT_NEAR(rs.freqs[mode_p].omega, 0.30763, 1e-3 * 0.30763);
  EXPECT_NEAR(rs.freqs[mode_s].omega, 0.30916, 1e-3 * 0.30916);
  const double mismatch =
      std::abs(2.0 * rs.freqs[mode_p].omega - rs.freqs[mode_s].omega - rs.freqs[mode_i].omega);
  EXPECT_LT(mismatch, 1e-4);
  EXPECT_LT((rs.U * rs.Sigma - Eigen::Matrix3cd::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  // Table I wavelengths 1568 / 1560 / 1553 nm and frequencies 191.2 / 192.1 / 193.1 THz.
  EXPECT_NEAR(omega_to_wavelength_nm(rs.freqs[mode_i].omega), 1568.0, 1.0);
  EXPECT_NEAR(omega_to_wavelength_nm(rs.freqs[mode_p].omega), 1560.0, 1.0);
  EXPECT_NEAR(omega_to_wavelength_nm(rs.freqs[mode_s].omega), 1553.0, 1.0);
  EXPECT_NEAR(omega_to_thz(rs.freqs[mode_i].omega), 191.2, 0.1);
  EXPECT_NEAR(omega_to_thz(rs.freqs[mode_p].omega), 192.1, 0.1);
  EXPECT_NEAR(omega_to_thz(rs.freqs[mode_s].omega), 193.1, 0.1);
}

TEST(RsBasis, PumpModeHasANodeAtTheCentre) {
  const auto rs = rs_basis(load_layout(default_layout_document()));
  const double peak = rs.U.col(mode_p).cwiseAbs().maxCoeff();
  EXPECT_LT(std::abs(rs.U(1, mode_p)), 1e-10 * peak);
  for (int j : {static_cast<int>(mode_i), static_cast<int>(mode_s)}) EXPECT_GT(std::abs(rs.U(1, j)), 0.1);
}

TEST(RsBasis, SymmetricTripleClosedForm) {
  // Wings at Omega_w, centre at Omega_c, real coupling a, B = I, lossless.
  const double ww = 0.30 * 0.30, wc = 0.31 * 0.31, a = 0.02;
  TightBindingMatrices m;
  m.ids = {1, 2, 3};
  m.A = Eigen::MatrixXcd::Identity(3, 3);
  m.A(0, 1) = m.A(1, 0) = m.A(1, 2) = m.A(2, 1) = a;
  m.B = Eigen::MatrixXcd::Identity(3, 3);
  m.omega_sq = Eigen::Vector3cd(ww, wc, ww);
  const auto b = solve_modes(m);

  // Odd mode (1, 0, -1) with Lambda = Omega_w; even modes from the 2x2 block
  // [[Ow, a Oc], [2 a Ow, Oc]] acting on ((1,0,1), (0,1,0)).
  const double mean = 0.5 * (ww + wc), half = 0.5 * (ww - wc);
  const double rad = std::sqrt(half * half + 2.0 * a * a * ww * wc);
  const double lam[3] = {mean - rad, ww, mean + rad};
  Eigen::Vector3cd vec[3];
  for (int k : {0, 2}) vec[k] = Eigen::Vector3cd(a * wc, lam[k] - ww, a * wc);
  vec[1] = Eigen::Vector3cd(1.0, 0.0, -1.0);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(b.freqs[static_cast<std::size_t>(k)].omega, std::sqrt(lam[k]), 1e-14);
    EXPECT_NEAR(alignment(b.V.col(k), vec[k]), 1.0, 1e-12);
  }
}

TEST(RsBasis, DecoupledTripleIsTheIdentity) {
  const auto doc = small_document(json::array({cavity(1, -3, 0, 60.0, "rs_left"), cavity(2, 0, 0, 75.0, "rs_center"),
                                               cavity(3, 3, 0, 90.0, "rs_right")}),
                                  json::array({pair_class("rs_left", "rs_center", "x", 0.0, 0.0),
                                               pair_class("rs_center", "rs_right", "x", 0.0, 0.0)}));
  const auto lay = load_layout(doc);
  const auto rs = rs_basis(lay);
  EXPECT_LT((rs.U - Eigen::Matrix3cd::Identity()).cwiseAbs().maxCoeff(), 1e-14);
  for (int q = 0; q < 3; ++q) {
    const auto f = lay.mode_of(q + 1);
    EXPECT_NEAR(rs.freqs[static_cast<std::size_t>(q)].omega, f.omega, 1e-15);
    EXPECT_NEAR(rs.freqs[static_cast<std::size_t>(q)].gamma, f.gamma, 1e-15);
  }
}

TEST(RsBasis, MissingRoleIsALayoutError) {
  const auto doc = small_document(json::array({cavity(1, 0, 0, 75.0, "rs_center")}), json::array());
  EXPECT_THROW(rs_basis(load_layout(doc)), LayoutError);
}

TEST(Dispersion, BandCentreAndEdges) {
  const auto w0 = ComplexFrequency::from_q(0.30763, 19000.0);
  const cplx a(0.013), b(0.010);
  const auto c = crow_dispersion(w0, a, b, pi / 2.0);
  EXPECT_EQ(c.omega, w0.omega);
  EXPECT_EQ(c.gamma, w0.gamma);
  EXPECT_EQ(crow_dispersion(w0, a, b, -pi / 2.0).omega, w0.omega);
  const auto lo = crow_dispersion(w0, a, b, pi);
  const auto hi = crow_dispersion(w0, a, b, 0.0);
  EXPECT_NEAR(hi.omega, w0.omega * (1.0 + 0.003), 1e-15);
  EXPECT_NEAR(lo.omega, w0.omega * (1.0 - 0.003), 1e-15);
  EXPECT_THROW(crow_dispersion(w0, a, b, 3.2), RangeError);
}

TEST(Dispersion, LongCrowSpectrumFillsTheBand) {
  // Finite uniform chain of N cavities: Lambda_k = Omega^2 (1 + 2 A cos) / (1 + 2 B cos),
  // so all modes lie within the tight-binding band edges.
  const int n = 40;
  const double w = 0.3076, a = 0.013, bb = 0.010;
  TightBindingMatrices m;
  m.A = Eigen::MatrixXcd::Identity(n, n);
  m.B = Eigen::MatrixXcd::Identity(n, n);
  m.omega_sq = Eigen::VectorXcd::Constant(n, w * w);
  for (int i = 0; i < n; ++i) m.ids.push_back(i + 1);
  for (int i = 0; i + 1 < n; ++i) {
    m.A(i, i + 1) = m.A(i + 1, i) = a;
    m.B(i, i + 1) = m.B(i + 1, i) = bb;
  }
  const auto b = solve_modes(m);
  for (int k = 1; k <= n; ++k) {
    const double c = std::cos(pi * k / (n + 1));
    const double expect = w * std::sqrt((1.0 + 2.0 * a * c) / (1.0 + 2.0 * bb * c));
    EXPECT_NEAR(b.freqs[static_cast<std::size_t>(n - k)].omega, expect, 1e-13);
  }
}
