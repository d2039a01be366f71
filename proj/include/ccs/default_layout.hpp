#pragma once

// The shipped 184-cavity structure: a pump CROW feeding a three-cavity
// resonant structure (RS) along x, with signal and idler CROWs leaving the RS
// centre along -y and +y through one coupling cavity each.
//
// Pair-class couplings were calibrated so that the loaded decay rates of the
// RS idler, pump and signal modes are 2.60e-5, 5.30e-5 and 2.58e-5 (2 pi c/a)
// and the isolated RS resonances sit at 0.30610 / 0.30763 / 0.30916.

#include <string>

#include <json.hpp>

namespace ccs {

struct DefaultGeometry {
  int pump_len = 59;
  int signal_len = 60;
  int idler_len = 60;
};

inline nlohmann::json default_layout_document(const DefaultGeometry& geo = {}) {
  using nlohmann::json;
  json doc;
  doc["lattice"] = {{"a_nm", 480.0}, {"slab_thickness_nm", 220.0}};

  doc["radius_table"] = json::array();
  const double table[][3] = {
      {50.0, 0.30300, 14500.0},   {55.0, 0.30427, 16500.0},
      {66.0, 0.30610, 17800.0},   {74.0, 0.30745, 18827.0},
      {76.0, 0.30763, 19000.0},   {80.0, 0.307853460609719, 19100.0},
      {89.0, 0.30916, 19500.0},   {91.0, 0.30942, 19600.0},
      {100.0, 0.31100, 20000.0},  {125.0, 0.31750, 20300.0},
      {150.0, 0.32450, 20500.0},
  };
  for (const auto& row : table)
    doc["radius_table"].push_back({{"r_nm", row[0]}, {"omega", row[1]}, {"Q", row[2]}});

  json cav = json::array();
  int id = 1;
  auto add = [&](double x, double y, double r, const char* role) {
    cav.push_back({{"id", id++}, {"x", x}, {"y", y}, {"r_nm", r}, {"role", role}});
  };
  for (int i = 0; i < geo.pump_len; ++i) add(-3.0 - 3.0 * (geo.pump_len - i), 0.0, 76.0, "pump_crow");
  add(-3.0, 0.0, 74.0, "rs_left");
  add(0.0, 0.0, 80.0, "rs_center");
  add(3.0, 0.0, 74.0, "rs_right");
  add(0.0, -3.0, 91.0, "coupling_signal");
  add(0.0, 3.0, 55.0, "coupling_idler");
  for (int i = 0; i < geo.signal_len; ++i) add(0.0, -6.0 - 3.0 * i, 89.0, "signal_crow");
  for (int i = 0; i < geo.idler_len; ++i) add(0.0, 6.0 + 3.0 * i, 66.0, "idler_crow");
  doc["cavities"] = cav;

  const double a_rs = 0.05700416821793639;
  const double a_pump_rs = 0.010842767465599106;
  const double a_sig = 0.010620618820677689;
  const double a_idl = 0.011535803074611915;
  auto pc = [](const char* a, const char* b, const char* axis, double a01, double b01) {
    return json{{"role_a", a}, {"role_b", b}, {"axis", axis}, {"A01", a01}, {"B01", b01}};
  };
  doc["coupling"] = {
      {"cutoff", 3.0},
      {"b_self", {{"rs_left", 0.9988301053906561}, {"rs_right", 0.9988301053906561}}},
      {"pair_classes",
       json::array({
           pc("pump_crow", "pump_crow", "x", 0.013, 0.010),
           pc("pump_crow", "rs_left", "x", a_pump_rs, 0.010),
           pc("rs_left", "rs_center", "x", a_rs, 0.05),
           pc("rs_center", "rs_right", "x", a_rs, 0.05),
           pc("rs_center", "coupling_signal", "y", a_sig, 0.010),
           pc("coupling_signal", "signal_crow", "y", a_sig, 0.010),
           pc("signal_crow", "signal_crow", "y", 0.0106, 0.010),
           pc("rs_center", "coupling_idler", "y", a_idl, 0.010),
           pc("coupling_idler", "idler_crow", "y", a_idl, 0.010),
           pc("idler_crow", "idler_crow", "y", 0.0105, 0.010),
       })},
  };
  doc["pump"] = {{"energy_fJ", 670.0}, {"kappa_inv_d", 20.0}, {"k0_d", -1.5707963267948966},
                 {"q0", nullptr},      {"dt", 0.05},          {"t_max", nullptr},
                 {"g_floor", 1e-3}};
  doc["nonlinear"] = {{"chi_eff_re", 1.84e5}, {"chi_eff_im", 0.07e5}};
  doc["calibration"] = {{"loaded_rates", {{"S", 2.58e-5}, {"I", 2.60e-5}, {"P", 5.30e-5}}},
                        {"tolerance", 0.10}};
  return doc;
}

}  // namespace ccs
