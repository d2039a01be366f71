#pragma once

// Small synthetic systems shared by the unit tests.

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <json.hpp>

#include "ccs/structure.hpp"

namespace ccs_test {

using ccs::cplx;

// Open chain with nearest-neighbour couplings and moderate loss.
inline ccs::TightBindingMatrices random_chain(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ccs::TightBindingMatrices m;
  m.A = Eigen::MatrixXcd::Identity(n, n);
  m.B = Eigen::MatrixXcd::Identity(n, n);
  m.omega_sq.resize(n);
  for (int i = 0; i < n; ++i) {
    m.ids.push_back(i + 1);
    const double w = 0.29 + 0.02 * u(rng);
    const double q = 500.0 + 4500.0 * u(rng);
    const cplx c(w, -w / (2.0 * q));
    m.omega_sq(i) = c * c;
  }
  for (int i = 0; i + 1 < n; ++i) {
    const cplx a(0.005 + 0.015 * u(rng), 0.002 * (u(rng) - 0.5));
    const double b = 0.002 + 0.008 * u(rng);
    m.A(i, i + 1) = a;
    m.A(i + 1, i) = std::conj(a);
    m.B(i, i + 1) = b;
    m.B(i + 1, i) = b;
  }
  return m;
}

// Lossless system: A Omega = H with H Hermitian, diag(H) = Omega, B Hermitian
// positive definite with unit diagonal.  Then B^-1 A Omega is self-adjoint in
// the B inner product and all quasi-mode frequencies are real.
inline ccs::TightBindingMatrices hermitian_lossless(int n, unsigned seed, bool identity_b = false) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ccs::TightBindingMatrices m;
  m.omega_sq.resize(n);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
  m.B = Eigen::MatrixXcd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    m.ids.push_back(i + 1);
    const double w = 0.29 + 0.02 * u(rng);
    m.omega_sq(i) = w * w;
    H(i, i) = w * w;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (j > i + 2) continue;
      const cplx h(0.0008 * (u(rng) - 0.5), 0.0008 * (u(rng) - 0.5));
      H(i, j) = h;
      H(j, i) = std::conj(h);
      if (!identity_b) {
        const cplx b(0.02 * (u(rng) - 0.5), 0.02 * (u(rng) - 0.5));
        m.B(i, j) = b;
        m.B(j, i) = std::conj(b);
      }
    }
  m.A = H * m.omega_sq.cwiseInverse().asDiagonal();
  return m;
}

// Minimal layout document with the given cavities and one radius table.
inline nlohmann::json small_document(const nlohmann::json& cavities, const nlohmann::json& pair_classes) {
  using nlohmann::json;
  json doc;
  doc["radius_table"] = json::array({
      {{"r_nm", 50.0}, {"omega", 0.300}, {"Q", 10000.0}},
      {{"r_nm", 100.0}, {"omega", 0.310}, {"Q", 20000.0}},
  });
  doc["cavities"] = cavities;
  doc["coupling"] = {{"cutoff", 3.0}, {"pair_classes", pair_classes}};
  return doc;
}

inline nlohmann::json cavity(int id, double x, double y, double r, const char* role) {
  return {{"id", id}, {"x", x}, {"y", y}, {"r_nm", r}, {"role", role}};
}

inline nlohmann::json pair_class(const char* a, const char* b, const char* axis, nlohmann::json a01, double b01) {
  return {{"role_a", a}, {"role_b", b}, {"axis", axis}, {"A01", a01}, {"B01", b01}};
}

}  // namespace ccs_test
