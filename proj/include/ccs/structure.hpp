#pragma once

// Declarative description of a coupled-cavity photonic-crystal structure and
// assembly of its tight-binding overlap (B) and coupling (A) matrices.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ccs/errors.hpp"
#include "ccs/units.hpp"

namespace ccs {

using cplx = std::complex<double>;
using json = nlohmann::json;

// Resonance omega - i*gamma in units of 2*pi*c/a.  The power decay rate is 2*gamma.
struct ComplexFrequency {
  double omega = 0.0;
  double gamma = 0.0;

  static ComplexFrequency from_complex(cplx w) { return {w.real(), -w.imag()}; }
  static ComplexFrequency from_q(double omega, double q) {
    return {omega, omega / (2.0 * q)};
  }
  cplx value() const { return {omega, -gamma}; }
  double q() const {
    return gamma > 0.0 ? omega / (2.0 * gamma) : std::numeric_limits<double>::infinity();
  }
};

enum class Role {
  pump_crow,
  signal_crow,
  idler_crow,
  rs_left,
  rs_center,
  rs_right,
  coupling_signal,
  coupling_idler,
};

inline constexpr std::array<Role, 8> all_roles = {
    Role::pump_crow, Role::signal_crow, Role::idler_crow,      Role::rs_left,
    Role::rs_center, Role::rs_right,    Role::coupling_signal, Role::coupling_idler};

inline std::string_view role_name(Role r) {
  switch (r) {
    case Role::pump_crow: return "pump_crow";
    case Role::signal_crow: return "signal_crow";
    case Role::idler_crow: return "idler_crow";
    case Role::rs_left: return "rs_left";
    case Role::rs_center: return "rs_center";
    case Role::rs_right: return "rs_right";
    case Role::coupling_signal: return "coupling_signal";
    case Role::coupling_idler: return "coupling_idler";
  }
  return "unknown";
}

inline std::optional<Role> parse_role(std::string_view s) {
  for (Role r : all_roles)
    if (role_name(r) == s) return r;
  return std::nullopt;
}

inline bool is_rs(Role r) {
  return r == Role::rs_left || r == Role::rs_center || r == Role::rs_right;
}

struct CavitySpec {
  int id = 0;
  double x = 0.0;  // lattice units
  double y = 0.0;
  double r_nm = 0.0;
  Role role = Role::pump_crow;
};

struct RadiusSample {
  double r_nm;
  double omega;
  double q;
};

class RadiusModeTable {
 public:
  RadiusModeTable() = default;
  explicit RadiusModeTable(std::vector<RadiusSample> samples) : samples_(std::move(samples)) {
    if (samples_.size() < 2) throw ValidationError("radius_table", "needs at least 2 samples");
    int dir = 0;
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      if (!(samples_[i].r_nm > samples_[i - 1].r_nm))
        throw ValidationError("radius_table", "radii must be strictly increasing");
      const int d = samples_[i].omega > samples_[i - 1].omega   ? 1
                    : samples_[i].omega < samples_[i - 1].omega ? -1
                                                                : 0;
      if (d == 0 || (dir != 0 && d != dir))
        throw ValidationError("radius_table", "omega must be strictly monotonic in radius");
      dir = d;
    }
    for (const auto& s : samples_)
      if (!(s.omega > 0.0) || !(s.q > 0.0))
        throw ValidationError("radius_table", "omega and Q must be positive");
  }

  const std::vector<RadiusSample>& samples() const { return samples_; }
  double min_radius() const { return samples_.front().r_nm; }
  double max_radius() const { return samples_.back().r_nm; }

  // Piecewise-linear interpolation of omega and Q; gamma = omega / (2 Q).
  ComplexFrequency at(double r_nm) const {
    if (samples_.empty()) throw RangeError("empty radius table");
    if (!(r_nm >= min_radius() && r_nm <= max_radius()))
      throw RangeError("radius " + std::to_string(r_nm) + " nm outside table domain [" +
                       std::to_string(min_radius()) + ", " + std::to_string(max_radius()) + "]");
    auto hi = std::lower_bound(samples_.begin(), samples_.end(), r_nm,
                               [](const RadiusSample& s, double r) { return s.r_nm < r; });
    if (hi->r_nm == r_nm) return ComplexFrequency::from_q(hi->omega, hi->q);
    auto lo = hi - 1;
    const double f = (r_nm - lo->r_nm) / (hi->r_nm - lo->r_nm);
    const double omega = lo->omega + f * (hi->omega - lo->omega);
    const double q = lo->q + f * (hi->q - lo->q);
    return ComplexFrequency::from_q(omega, q);
  }

 private:
  std::vector<RadiusSample> samples_;
};

inline ComplexFrequency radius_to_mode(const RadiusModeTable& table, double r_nm) {
  return table.at(r_nm);
}

enum class Axis { x, y, any };

struct PairClass {
  Role role_a;
  Role role_b;
  Axis axis = Axis::any;
  cplx a01;
  cplx b01;
};

struct CouplingModel {
  std::vector<PairClass> pair_classes;
  double cutoff = 3.0;
  std::map<Role, double> b_self;  // diagonal of B per role; default 1

  double self_overlap(Role r) const {
    auto it = b_self.find(r);
    return it == b_self.end() ? 1.0 : it->second;
  }

  // Pair class for a displacement (dx, dy) between cavities of roles ra and rb.
  const PairClass* find(Role ra, Role rb, double dx, double dy) const {
    constexpr double eps = 1e-9;
    const Axis ax = std::abs(dy) < eps ? Axis::x : std::abs(dx) < eps ? Axis::y : Axis::any;
    const PairClass* fallback = nullptr;
    for (const auto& pc : pair_classes) {
      const bool roles = (pc.role_a == ra && pc.role_b == rb) || (pc.role_a == rb && pc.role_b == ra);
      if (!roles) continue;
      if (pc.axis == ax && ax != Axis::any) return &pc;
      if (pc.axis == Axis::any) fallback = &pc;
    }
    return fallback;
  }
};

struct PumpDefaults {
  double energy_fj = 670.0;
  double kappa_inv_d = 20.0;  // kappa * d = 2 pi / kappa_inv_d
  double k0_d = -pi / 2.0;
  std::optional<int> q0;      // pump-CROW cavity id of the pulse centre
  double dt = 0.05;           // a/(2 pi c)
  std::optional<double> t_max;
  double g_floor = 1e-3;
};

struct Calibration {
  double gamma_s = 0.0, gamma_i = 0.0, gamma_p = 0.0;  // loaded power decay rates
  double tolerance = 0.1;
};

struct SystemLayout {
  double a_nm = default_lattice_nm;
  double slab_thickness_nm = 0.0;
  std::vector<CavitySpec> cavities;  // sorted by id
  RadiusModeTable radius_table;
  CouplingModel coupling;
  PumpDefaults pump;
  cplx chi_eff{1.84e5, 0.07e5};  // s^-1
  std::optional<Calibration> calibration;

  std::size_t size() const { return cavities.size(); }

  const CavitySpec& cavity(int id) const {
    if (id < 1 || id > static_cast<int>(cavities.size()))
      throw LayoutError("unknown cavity id " + std::to_string(id));
    return cavities[static_cast<std::size_t>(id - 1)];
  }

  std::vector<int> ids_with_role(Role r) const {
    std::vector<int> out;
    for (const auto& c : cavities)
      if (c.role == r) out.push_back(c.id);
    return out;
  }

  std::vector<int> all_ids() const {
    std::vector<int> out;
    out.reserve(cavities.size());
    for (const auto& c : cavities) out.push_back(c.id);
    return out;
  }

  ComplexFrequency mode_of(int id) const { return radius_table.at(cavity(id).r_nm); }
};

struct TightBindingMatrices {
  Eigen::MatrixXcd A;
  Eigen::MatrixXcd B;
  Eigen::VectorXcd omega_sq;  // diagonal of Omega: squared single-cavity complex frequencies
  std::vector<int> ids;       // cavity id of each row, ascending

  Eigen::Index size() const { return A.rows(); }
  Eigen::MatrixXcd omega_diag() const { return omega_sq.asDiagonal(); }

  Eigen::Index index_of(int id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id)
      throw LayoutError("cavity id " + std::to_string(id) + " not in matrix subset");
    return it - ids.begin();
  }

  double condition_number_b() const {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B);
    const auto& s = svd.singularValues();
    return s(0) / s(s.size() - 1);
  }
};

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(path.empty() ? key : path + "." + key, "missing required key");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path, "expected a number");
  return j.get<double>();
}

inline cplx complex_value(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ValidationError(path, "expected a number or [re, im] pair");
}

inline Role role_value(const json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path, "expected a role string");
  auto r = parse_role(j.get<std::string>());
  if (!r) throw ValidationError(path, "unknown role '" + j.get<std::string>() + "'");
  return *r;
}

}  // namespace detail

inline SystemLayout load_layout(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ValidationError("<root>", "document must be an object");
  SystemLayout lay;

  if (doc.contains("lattice")) {
    const auto& lat = doc.at("lattice");
    lay.a_nm = number(require(lat, "a_nm", "lattice"), "lattice.a_nm");
    if (!(lay.a_nm > 0.0)) throw ValidationError("lattice.a_nm", "must be positive");
    if (lat.contains("slab_thickness_nm"))
      lay.slab_thickness_nm = number(lat.at("slab_thickness_nm"), "lattice.slab_thickness_nm");
  }

  const auto& table = require(doc, "radius_table", "");
  if (!table.is_array()) throw ValidationError("radius_table", "expected an array");
  std::vector<RadiusSample> samples;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string p = "radius_table[" + std::to_string(i) + "]";
    samples.push_back({number(require(table[i], "r_nm", p), p + ".r_nm"),
                       number(require(table[i], "omega", p), p + ".omega"),
                       number(require(table[i], "Q", p), p + ".Q")});
  }
  lay.radius_table = RadiusModeTable(std::move(samples));

  const auto& cavs = require(doc, "cavities", "");
  if (!cavs.is_array() || cavs.empty())
    throw ValidationError("cavities", "expected a non-empty array");
  std::set<int> seen;
  for (std::size_t i = 0; i < cavs.size(); ++i) {
    const std::string p = "cavities[" + std::to_string(i) + "]";
    const auto& c = cavs[i];
    const auto& idj = require(c, "id", p);
    if (!idj.is_number_integer()) throw ValidationError(p + ".id", "expected an integer");
    CavitySpec cs;
    cs.id = idj.get<int>();
    cs.x = number(require(c, "x", p), p + ".x");
    cs.y = number(require(c, "y", p), p + ".y");
    cs.r_nm = number(require(c, "r_nm", p), p + ".r_nm");
    cs.role = role_value(require(c, "role", p), p + ".role");
    if (!seen.insert(cs.id).second)
      throw LayoutError("duplicate cavity id " + std::to_string(cs.id));
    try {
      lay.radius_table.at(cs.r_nm);
    } catch (const RangeError& e) {
      throw ValidationError(p + ".r_nm", e.what());
    }
    lay.cavities.push_back(cs);
  }
  std::sort(lay.cavities.begin(), lay.cavities.end(),
            [](const CavitySpec& a, const CavitySpec& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < lay.cavities.size(); ++i)
    if (lay.cavities[i].id != static_cast<int>(i) + 1)
      throw LayoutError("cavity ids must be contiguous from 1 to " +
                        std::to_string(lay.cavities.size()));
  std::set<std::pair<long long, long long>> positions;
  for (const auto& c : lay.cavities) {
    const auto key = std::make_pair(std::llround(c.x * 1e6), std::llround(c.y * 1e6));
    if (!positions.insert(key).second)
      throw LayoutError("duplicate cavity position at id " + std::to_string(c.id));
  }

  if (doc.contains("coupling")) {
    const auto& cp = doc.at("coupling");
    if (cp.contains("cutoff")) lay.coupling.cutoff = number(cp.at("cutoff"), "coupling.cutoff");
    if (cp.contains("pair_classes")) {
      const auto& pcs = cp.at("pair_classes");
      if (!pcs.is_array()) throw ValidationError("coupling.pair_classes", "expected an array");
      for (std::size_t i = 0; i < pcs.size(); ++i) {
        const std::string p = "coupling.pair_classes[" + std::to_string(i) + "]";
        PairClass pc;
        pc.role_a = role_value(require(pcs[i], "role_a", p), p + ".role_a");
        pc.role_b = role_value(require(pcs[i], "role_b", p), p + ".role_b");
        const std::string ax = pcs[i].value("axis", std::string("any"));
        if (ax == "x") pc.axis = Axis::x;
        else if (ax == "y") pc.axis = Axis::y;
        else if (ax == "any") pc.axis = Axis::any;
        else throw ValidationError(p + ".axis", "expected x, y or any");
        pc.a01 = complex_value(require(pcs[i], "A01", p), p + ".A01");
        pc.b01 = complex_value(require(pcs[i], "B01", p), p + ".B01");
        if (!(std::abs(pc.a01) < 1.0)) throw ValidationError(p + ".A01", "|A01| must be < 1");
        if (!(std::abs(pc.b01) < 1.0)) throw ValidationError(p + ".B01", "|B01| must be < 1");
        lay.coupling.pair_classes.push_back(pc);
      }
    }
    if (cp.contains("b_self")) {
      for (const auto& [k, v] : cp.at("b_self").items()) {
        auto r = parse_role(k);
        if (!r) throw ValidationError("coupling.b_self." + k, "unknown role");
        lay.coupling.b_self[*r] = number(v, "coupling.b_self." + k);
      }
    }
  }

  if (doc.contains("pump")) {
    const auto& pj = doc.at("pump");
    auto& pd = lay.pump;
    if (pj.contains("energy_fJ")) pd.energy_fj = number(pj.at("energy_fJ"), "pump.energy_fJ");
    if (pj.contains("kappa_inv_d")) pd.kappa_inv_d = number(pj.at("kappa_inv_d"), "pump.kappa_inv_d");
    if (pj.contains("k0_d")) pd.k0_d = number(pj.at("k0_d"), "pump.k0_d");
    if (pj.contains("q0") && !pj.at("q0").is_null()) {
      if (!pj.at("q0").is_number_integer()) throw ValidationError("pump.q0", "expected an integer");
      pd.q0 = pj.at("q0").get<int>();
    }
    if (pj.contains("dt")) pd.dt = number(pj.at("dt"), "pump.dt");
    if (pj.contains("t_max") && !pj.at("t_max").is_null()) pd.t_max = number(pj.at("t_max"), "pump.t_max");
    if (pj.contains("g_floor")) pd.g_floor = number(pj.at("g_floor"), "pump.g_floor");
    if (!(pd.energy_fj >= 0.0)) throw ValidationError("pump.energy_fJ", "must be non-negative");
    if (!(pd.kappa_inv_d > 0.5)) throw ValidationError("pump.kappa_inv_d", "must exceed 0.5");
    if (!(pd.dt > 0.0)) throw ValidationError("pump.dt", "must be positive");
  }

  if (doc.contains("nonlinear")) {
    const auto& nl = doc.at("nonlinear");
    lay.chi_eff = {number(require(nl, "chi_eff_re", "nonlinear"), "nonlinear.chi_eff_re"),
                   nl.contains("chi_eff_im") ? number(nl.at("chi_eff_im"), "nonlinear.chi_eff_im") : 0.0};
  }

  if (doc.contains("calibration")) {
    const auto& cj = doc.at("calibration");
    const auto& lr = require(cj, "loaded_rates", "calibration");
    Calibration cal;
    cal.gamma_s = number(require(lr, "S", "calibration.loaded_rates"), "calibration.loaded_rates.S");
    cal.gamma_i = number(require(lr, "I", "calibration.loaded_rates"), "calibration.loaded_rates.I");
    cal.gamma_p = number(require(lr, "P", "calibration.loaded_rates"), "calibration.loaded_rates.P");
    if (cj.contains("tolerance")) cal.tolerance = number(cj.at("tolerance"), "calibration.tolerance");
    lay.calibration = cal;
  }

  // Every in-cutoff neighbour pair must be described by a pair class.
  const auto& cav = lay.cavities;
  for (std::size_t i = 0; i < cav.size(); ++i)
    for (std::size_t j = i + 1; j < cav.size(); ++j) {
      const double dx = cav[j].x - cav[i].x, dy = cav[j].y - cav[i].y;
      if (std::hypot(dx, dy) > lay.coupling.cutoff + 1e-9) continue;
      if (!lay.coupling.find(cav[i].role, cav[j].role, dx, dy))
        throw LayoutError("no pair class for neighbours " + std::to_string(cav[i].id) + " (" +
                          std::string(role_name(cav[i].role)) + ") and " +
                          std::to_string(cav[j].id) + " (" +
                          std::string(role_name(cav[j].role)) + ")");
    }
  return lay;
}

inline SystemLayout load_layout_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path, "cannot open layout file");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError(path, e.what());
  }
  return load_layout(doc);
}

// Assembles A, B and Omega for the given cavity ids (all cavities when empty).
// Rows are ordered by ascending cavity id.
inline TightBindingMatrices assemble_matrices(const SystemLayout& layout,
                                              std::vector<int> subset = {}) {
  if (subset.empty()) subset = layout.all_ids();
  std::sort(subset.begin(), subset.end());
  if (std::adjacent_find(subset.begin(), subset.end()) != subset.end())
    throw LayoutError("subset contains duplicate ids");
  for (int id : subset) layout.cavity(id);

  const auto n = static_cast<Eigen::Index>(subset.size());
  TightBindingMatrices m;
  m.ids = subset;
  m.A = Eigen::MatrixXcd::Identity(n, n);
  m.B = Eigen::MatrixXcd::Identity(n, n);
  m.omega_sq.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ci = layout.cavity(subset[static_cast<std::size_t>(i)]);
    const cplx w = layout.radius_table.at(ci.r_nm).value();
    m.omega_sq(i) = w * w;
    m.B(i, i) = layout.coupling.self_overlap(ci.role);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ci = layout.cavity(subset[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& cj = layout.cavity(subset[static_cast<std::size_t>(j)]);
      const double dx = cj.x - ci.x, dy = cj.y - ci.y;
      if (std::hypot(dx, dy) > layout.coupling.cutoff + 1e-9) continue;
      const PairClass* pc = layout.coupling.find(ci.role, cj.role, dx, dy);
      if (!pc) continue;
      m.A(i, j) = pc->a01;
      m.A(j, i) = std::conj(pc->a01);
      m.B(i, j) = pc->b01;
      m.B(j, i) = std::conj(pc->b01);
    }
  }
  return m;
}

}  // namespace ccs
