#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ccs/default_layout.hpp"
#include "ccs/oracle.hpp"
#include "ccs/pump.hpp"
#include "ccs/units.hpp"
#include "test_support.hpp"

using namespace ccs;

namespace {

std::vector<int> iota_ids(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 1);
  return v;
}

// sum_q exp(-kappa^2 d^2 q^2 / 2) over all integers, by Poisson summation:
// sqrt(2 pi) / (kappa d) * sum_m exp(-2 pi^2 m^2 / (kappa d)^2).
double theta_sum(double kd) {
  double s = 0.0;
  for (int m = -20; m <= 20; ++m) s += std::exp(-2.0 * pi * pi * m * m / (kd * kd));
  return std::sqrt(2.0 * pi) / kd * s;
}

}  // namespace

TEST(PumpPulse, PeakAtCentre) {
  PumpPulse p{1.0e6, 2.0 * pi / 20.0, -pi / 2.0, 50};
  const auto ids = iota_ids(100);
  const auto x = initial_coefficients(p, ids, ids);
  const double amp = std::sqrt(p.kappa_d * p.n_p / std::sqrt(2.0 * pi));
  EXPECT_NEAR(std::abs(x.x(49) - amp), 0.0, 1e-9 * amp);
  for (int q = 0; q < 100; ++q) EXPECT_LE(std::abs(x.x(q)), amp * (1.0 + 1e-15));
  // Carrier: x_{q+1} / x_q has phase k0 d.
  EXPECT_NEAR(std::arg(x.x(50) / x.x(49)), -pi / 2.0, 1e-12);
}

TEST(PumpPulse, NormalisationMatchesPhotonNumber) {
  for (double inv : {15.0, 20.0, 45.0}) {
    const double kd = 2.0 * pi / inv;
    PumpPulse p{5.26e6, kd, -pi / 2.0, 300};
    const auto ids = iota_ids(600);
    const auto x = initial_coefficients(p, ids, ids);
    // Discrete Gaussian sum equals n_p up to the Poisson-sum correction.
    const double expect = p.n_p * kd / std::sqrt(2.0 * pi) * theta_sum(kd);
    EXPECT_NEAR(x.norm, expect, 1e-12 * expect);
    EXPECT_NEAR(x.norm, p.n_p, 1e-6 * p.n_p) << "kappa^-1 = " << inv;
    EXPECT_FALSE(x.truncated);
  }
}

TEST(PumpPulse, TruncationWarning) {
  PumpPulse p{1.0e6, 2.0 * pi / 45.0, -pi / 2.0, 10};
  const auto ids = iota_ids(20);
  const auto x = initial_coefficients(p, ids, ids);
  EXPECT_TRUE(x.truncated);
  EXPECT_FALSE(x.warning.empty());
  EXPECT_LT(x.norm, 0.999 * p.n_p);
}

TEST(PumpPulse, InvalidInputs) {
  const auto ids = iota_ids(20);
  EXPECT_THROW(initial_coefficients({1.0, 0.0, 0.0, 5}, ids, ids), InputError);
  EXPECT_THROW(initial_coefficients({1.0, 4.0, 0.0, 5}, ids, ids), InputError);
  EXPECT_THROW(initial_coefficients({-1.0, 0.3, 0.0, 5}, ids, ids), InputError);
  EXPECT_THROW(initial_coefficients({1.0, 0.3, 0.0, 99}, ids, ids), InputError);
}

TEST(PumpPulse, PhotonsFrom670fJ) {
  // E / (hbar 2 pi c / lambda) at lambda = 1560 nm.
  const double lambda = 1560e-9;
  const double expect = 670e-15 * lambda / (1.054571817e-34 * 2.0 * pi * 299792458.0);
  const double got = photons_from_energy(670.0, 480.0 / 1560.0, 480.0);
  EXPECT_NEAR(got, expect, 1e-6 * expect);
  EXPECT_NEAR(got, 5.26e6, 0.01 * 5.26e6);
}

TEST(PumpPulse, DefaultCentreKeepsThePulseOutsideTheRs) {
  const auto lay = load_layout(default_layout_document());
  const int q0 = default_q0(lay, 2.0 * pi / 20.0);
  const auto pump = lay.ids_with_role(Role::pump_crow);
  EXPECT_EQ(q0, pump.back() - 15);
  const int q0_wide = default_q0(lay, 2.0 * pi / 45.0);
  EXPECT_EQ(q0_wide, pump.back() - static_cast<int>(std::ceil(4.0 * 45.0 / (2.0 * pi))));
}

TEST(PumpEvolution, IdentityAtZero) {
  const auto tb = ccs_test::random_chain(10, 3);
  const auto b = solve_modes(tb);
  Eigen::VectorXcd x = Eigen::VectorXcd::Random(10);
  EXPECT_LT((evolve_pump(x, b, 0.0) - x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(evolve_pump(x, b, -1.0), InputError);
}

TEST(PumpEvolution, SingleCavityDecay) {
  TightBindingMatrices m;
  m.ids = {1};
  const cplx w(0.3, -0.3 / 20000.0);
  m.A = m.B = Eigen::MatrixXcd::Identity(1, 1);
  m.omega_sq = Eigen::VectorXcd::Constant(1, w * w);
  const auto b = solve_modes(m);
  Eigen::VectorXcd x(1);
  x << 2.0;
  for (double t : {10.0, 1000.0, 50000.0}) {
    const auto y = evolve_pump(x, b, t);
    EXPECT_NEAR(std::abs(y(0) - 2.0 * std::exp(cplx(0.0, -1.0) * w * t)), 0.0, 1e-12);
  }
}

TEST(PumpEvolution, AgreesWithDenseOde) {
  for (unsigned seed = 11; seed < 16; ++seed) {
    const auto tb = ccs_test::random_chain(10, seed);
    const auto b = solve_modes(tb);
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(10);
    x(0) = 1.0;
    x(4) = cplx(0.0, 0.5);
    const double t = 40.0;
    const auto y = evolve_pump(x, b, t);
    const auto z = dense_ode_propagator(tb, x, t);
    EXPECT_LT((y - z).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(PumpEvolution, SemigroupAndLosslessInvariant) {
  const auto tb = ccs_test::hermitian_lossless(8, 5);
  const auto b = solve_modes(tb);
  Eigen::VectorXcd x = Eigen::VectorXcd::Random(8);
  const double e0 = (x.adjoint() * tb.B * x)(0, 0).real();
  for (double t : {1.0, 50.0, 100.0}) {
    const auto y = evolve_pump(x, b, t);
    EXPECT_NEAR((y.adjoint() * tb.B * y)(0, 0).real(), e0, 1e-10 * e0);
  }
  const auto two = evolve_pump(evolve_pump(x, b, 30.0), b, 45.0);
  EXPECT_LT((two - evolve_pump(x, b, 75.0)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PumpProjection, RsModeColumnProjectsToOne) {
  const auto lay = load_layout(default_layout_document());
  const auto tb = assemble_matrices(lay);
  const auto rs = rs_basis(lay);
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(tb.size());
  for (int q = 0; q < 3; ++q) y(tb.index_of(rs.ids[static_cast<std::size_t>(q)])) = rs.U(q, mode_p);
  // The RS block of B is the one used by the RS eigenproblem, so u^dagger B u = O_PP = 1.
  // B couples the RS rows to the pump CROW and coupling cavities too, but y vanishes there.
  EXPECT_NEAR(std::abs(project_to_rs(y, rs, tb) - 1.0), 0.0, 1e-12);
  EXPECT_EQ(project_to_rs(Eigen::VectorXcd::Zero(tb.size()), rs, tb), cplx(0.0));
}

TEST(PumpProjection, CauchySchwarzBound) {
  const auto lay = load_layout(default_layout_document());
  const auto tb = assemble_matrices(lay);
  const auto rs = rs_basis(lay);
  const double u2 = rs.U.col(mode_p).squaredNorm();
  const double bnorm = Eigen::JacobiSVD<Eigen::MatrixXcd>(tb.B).singularValues()(0);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXcd y = Eigen::VectorXcd::Random(tb.size());
    const double a2 = std::norm(project_to_rs(y, rs, tb));
    EXPECT_LE(a2, u2 * bnorm * bnorm * y.squaredNorm());
  }
}

TEST(PumpStrength, ArithmeticForThePaperPeak) {
  // |alpha|^2 = 2.3e6, chi = 1.84e5 + 0.07e5 i s^-1, Gamma_+ = 2.59e-5 (2 pi c/a) -> g ~ 8.3.
  const std::vector<cplx> alpha{std::sqrt(2.3e6)};
  const std::vector<double> t{0.0};
  const cplx chi(1.84e5, 0.07e5);
  const double gp = 0.5 * (2.58e-5 + 2.60e-5);
  const auto ps = pump_strength(alpha, t, chi, gp, 0.3076);
  const double unit = 2.0 * pi * 299792458.0 / 480e-9;
  EXPECT_NEAR(ps.g[0], 2.0 * 2.3e6 * std::abs(chi) / (gp * unit), 1e-9);
  EXPECT_NEAR(ps.g[0], 8.3, 0.1);
}

TEST(PumpStrength, QuadraticScalingAndZero) {
  const std::vector<cplx> a{cplx(100.0, 30.0), cplx(0.0)};
  const std::vector<cplx> a2{cplx(200.0, 60.0), cplx(0.0)};
  const std::vector<double> t{0.0, 1.0};
  const auto s1 = pump_strength(a, t, cplx(1e5), 2.6e-5, 0.3);
  const auto s2 = pump_strength(a2, t, cplx(1e5), 2.6e-5, 0.3);
  EXPECT_NEAR(s2.g[0], 4.0 * s1.g[0], 1e-12 * s2.g[0]);
  EXPECT_EQ(s1.g[1], 0.0);
  EXPECT_THROW(pump_strength(a, t, cplx(1e5), 0.0, 0.3), InputError);
}

TEST(PumpStrength, ConstantPhaseForASingleCarrier) {
  // alpha = A(t) exp(-i omega_P t + i phi0) -> beta = 2 phi0 + arg(chi).
  const double wp = 0.3076, phi0 = 0.3;
  const cplx chi(1.84e5, 0.07e5);
  std::vector<cplx> alpha;
  std::vector<double> t;
  for (int n = 0; n < 4000; ++n) {
    const double tt = 0.5 * n;
    t.push_back(tt);
    alpha.push_back(1e3 * std::exp(-std::pow((tt - 1000.0) / 300.0, 2)) * std::polar(1.0, -wp * tt + phi0));
  }
  const auto ps = pump_strength(alpha, t, chi, 2.6e-5, wp);
  EXPECT_TRUE(ps.beta_is_constant);
  EXPECT_LT(ps.beta_std, 1e-9);
  EXPECT_NEAR(ps.beta, std::remainder(2.0 * phi0 + std::arg(chi), 2.0 * pi), 1e-9);

  // A detuned carrier makes the phase drift across the window.
  for (std::size_t n = 0; n < alpha.size(); ++n) alpha[n] *= std::polar(1.0, -1e-3 * t[n]);
  EXPECT_FALSE(pump_strength(alpha, t, chi, 2.6e-5, wp).beta_is_constant);
}

TEST(PumpTraceTest, ScaledTraceIsQuadraticInPhotonNumber) {
  PumpTrace tr;
  tr.t = {0.0, 1.0};
  tr.alpha = {cplx(1.0, 1.0), cplx(2.0)};
  tr.g = {0.5, 1.0};
  tr.n_p = 10.0;
  const auto s = tr.scaled(4.0);
  EXPECT_NEAR(std::abs(s.alpha[1] - 4.0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.g[1], 4.0);
  EXPECT_DOUBLE_EQ(s.n_p, 40.0);
  EXPECT_EQ(s.peak_index(), 1u);
}

TEST(PumpTraceTest, RecurrenceMatchesDirectEvaluation) {
  const auto lay = load_layout(default_layout_document());
  const auto tb = assemble_matrices(lay);
  const auto rs = rs_basis(lay);
  const auto b = solve_modes(tb);
  PumpPulse p{1.0e6, 2.0 * pi / 20.0, -pi / 2.0, default_q0(lay, 2.0 * pi / 20.0)};
  const auto x = initial_coefficients(p, lay.ids_with_role(Role::pump_crow), tb.ids);
  PumpTraceOptions o;
  o.t_max = 3000.0;
  o.dt = 0.5;
  const auto tr = pump_trace(b, rs, tb, x, p.n_p, cplx(1.84e5, 0.07e5), 2.59e-5, o);
  for (std::size_t n : {std::size_t{0}, std::size_t{700}, std::size_t{4321}, tr.t.size() - 1}) {
    const auto y = evolve_pump(x.x, b, tr.t[n]);
    const cplx direct = project_to_rs(y, rs, tb);
    EXPECT_NEAR(std::abs(tr.alpha[n] - direct), 0.0, 1e-9 * std::sqrt(p.n_p)) << "t = " << tr.t[n];
  }
  for (std::size_t n = 0; n < tr.t.size(); ++n) EXPECT_LE(std::norm(tr.alpha[n]), p.n_p);
}
