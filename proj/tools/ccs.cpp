// Command-line front end for the coupled-cavity squeezing pipeline.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccs/default_layout.hpp"
#include "ccs/experiments.hpp"
#include "ccs/oracle.hpp"

namespace fs = std::filesystem;

namespace {

nlohmann::json load_document(const std::string& path) {
  if (path.empty()) return ccs::default_layout_document();
  std::ifstream in(path);
  if (!in) throw ccs::ValidationError(path, "cannot open config file");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ccs::ValidationError(path, e.what());
  }
  return doc;
}

std::string output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CCS_OUT_DIR")) return env;
  return "ccs_out";
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  for (long k = 0; lo + static_cast<double>(k) * step <= hi + 1e-12; ++k) v.push_back(lo + static_cast<double>(k) * step);
  return v;
}

int oracle_check() {
  const double zeta = 0.0;
  const std::vector<double> gt{0.0, 1.0}, gv{1.0, 1.0};
  const auto checkpoints = grid(0.0, 1.0, 0.1);
  const auto main = ccs::integrate_generation(gt, gv, zeta, checkpoints);
  const auto fock = ccs::lindblad_fock(gt, gv, zeta, checkpoints);
  double worst = 0.0;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    const auto& a = main.states[k];
    const auto& b = fock[k];
    worst = std::max({worst, std::abs(a.r - b.r), std::abs(a.n_th_s - b.n_th_s), std::abs(a.n_th_i - b.n_th_i)});
  }
  std::cout << "generation vs Fock oracle: max deviation " << worst << '\n';
  return worst < 1e-3 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-mode simulation of entangled photon generation in coupled-cavity structures"};
  app.require_subcommand(1);

  std::string config, out;
  double delay = 0.0;
  bool orthogonal = false;
  int workers = 1;
  std::vector<int> pairs{1, 3};
  std::vector<int> cavities;
  std::string variable = "pump_energy_fJ";
  std::vector<double> values;
  std::vector<double> delays;
  double t_max = 4.0;
  std::size_t stride = 20;

  auto common = [&](CLI::App* sc) {
    sc->add_option("--config", config, "Layout document (JSON); the built-in default when omitted");
    sc->add_option("--out", out, "Output directory (default: $CCS_OUT_DIR or ./ccs_out)");
    sc->add_flag("--orthogonal-approx", orthogonal, "Replace O and P by the identity in the propagator");
  };

  auto* modes = app.add_subcommand("modes", "Solve the full-system quasi-modes and write modes.csv");
  common(modes);
  auto* pump = app.add_subcommand("pump", "Propagate the pump pulse and write pump.csv (t, Re alpha_P, Im alpha_P, g)");
  common(pump);
  pump->add_option("--stride", stride, "Write every stride-th sample of the pump grid")->check(CLI::PositiveNumber);
  auto* generate = app.add_subcommand("generate", "Integrate the RS squeezed-state parameters and write generation.csv");
  common(generate);
  auto* evolve = app.add_subcommand("evolve", "Photon numbers in selected cavities after the handoff (photons.csv)");
  common(evolve);
  evolve->add_option("--cavities", cavities, "Cavity ids (default: RS centre and first signal/idler CROW cavities)");
  evolve->add_option("--t-max", t_max, "Final t-tilde after the handoff");
  auto* cv = app.add_subcommand("cv", "CV envelopes for signal/idler CROW pairs (cv_envelope.csv)");
  common(cv);
  cv->add_option("--delay", delay, "Measurement delay t_S - t_I in t-tilde units");
  cv->add_option("--pairs", pairs, "CROW pair indices n");
  cv->add_option("--t-max", t_max, "Final t-tilde after the handoff");
  auto* sw = app.add_subcommand("sweep", "Sweep pump energy, 1/kappa or delay and write sweep.csv");
  common(sw);
  sw->add_option("--variable", variable, "pump_energy_fJ | kappa_inv_d | delay_t_tilde")
      ->check(CLI::IsMember({"pump_energy_fJ", "kappa_inv_d", "delay_t_tilde"}));
  sw->add_option("--values", values, "Sweep values (defaults cover the standard ranges)");
  sw->add_option("--delays", delays, "Delays evaluated at each energy/kappa point");
  sw->add_option("--workers", workers, "Concurrent sweep points")->check(CLI::PositiveNumber);
  sw->add_option("--pair", pairs, "CROW pair index n")->expected(1);
  auto* oc = app.add_subcommand("oracle-check", "Cross-check generation against the Fock-space oracle");
  oc->group("");
  auto* pdc = app.add_subcommand("print-default-config", "Print the built-in default layout document");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pdc->parsed()) {
      std::cout << ccs::default_layout_document().dump(2) << '\n';
      return 0;
    }
    if (oc->parsed()) return oracle_check();

    const std::string dir = output_dir(out);
    fs::create_directories(dir);
    ccs::Pipeline p(load_document(config));
    ccs::PipelineOptions opt;
    opt.orthogonal_approx = orthogonal;
    opt.env_t_max = t_max;
    p.prepare(opt.decay);

    if (modes->parsed()) {
      ccs::write_csv((fs::path(dir) / "modes.csv").string(), ccs::modes_table(p.basis()));
      std::cout << "modes: " << p.basis().size() << ", cond(B) = " << p.basis().cond_b << '\n';
      const auto& r = p.rates();
      std::cout << "loaded rates  S " << r.gamma_s << "  I " << r.gamma_i << "  P " << r.gamma_p << '\n';
      return 0;
    }
    p.check_calibration();
    const auto pulse = p.default_pulse(opt);
    if (pump->parsed()) {
      const auto tr = p.pump(pulse);
      ccs::write_csv((fs::path(dir) / "pump.csv").string(), ccs::pump_table(tr, stride));
      std::cout << "peak |alpha_P|^2 " << tr.peak_photons() << ", g_max " << tr.g_max() << ", beta " << tr.beta
                << " (std " << tr.beta_std << ")\n";
      for (const auto& w : tr.warnings) std::cerr << "warning: " << w << '\n';
      return 0;
    }
    if (generate->parsed()) {
      const auto gen = p.generate(p.pump(pulse), opt);
      ccs::write_csv((fs::path(dir) / "generation.csv").string(), ccs::generation_table(gen.trajectory));
      const auto& h = gen.handoff;
      std::cout << "t0 " << h.t_tilde0 << "  r " << h.state.r << "  n_th_S " << h.state.n_th_s << "  n_th_I "
                << h.state.n_th_i << "  n_S " << h.n_s << "  n_I " << h.n_i << "  cv_min " << h.cv_min << '\n';
      return 0;
    }
    if (evolve->parsed()) {
      const auto gen = p.generate(p.pump(pulse), opt);
      const auto m = p.moments(gen);
      if (cavities.empty())
        cavities = {p.layout().ids_with_role(ccs::Role::rs_center).front(), p.crow_cavity(ccs::Role::signal_crow, 1),
                    p.crow_cavity(ccs::Role::idler_crow, 1)};
      ccs::write_csv((fs::path(dir) / "photons.csv").string(),
                     p.photon_traces(m, cavities, grid(0.0, t_max, 0.005), orthogonal));
      return 0;
    }
    if (cv->parsed()) {
      const auto gen = p.generate(p.pump(pulse), opt);
      const auto m = p.moments(gen);
      std::vector<ccs::PairEnvelope> envs;
      for (int n : pairs) {
        envs.push_back(p.envelope(m, n, delay, orthogonal, opt));
        std::cout << "pair " << n << ": cv_min " << envs.back().cv_min << "  cv_max " << envs.back().cv_max << '\n';
      }
      ccs::write_csv((fs::path(dir) / "cv_envelope.csv").string(), ccs::envelope_table(envs));
      return 0;
    }
    if (sw->parsed()) {
      ccs::SweepSpec spec;
      spec.fixed = opt;
      spec.workers = workers;
      spec.pair = pairs.empty() ? 3 : pairs.front();
      if (variable == "pump_energy_fJ") {
        spec.variable = ccs::SweepVariable::pump_energy_fj;
        spec.values = values.empty() ? grid(100.0, 2000.0, 100.0) : values;
      } else if (variable == "kappa_inv_d") {
        spec.variable = ccs::SweepVariable::kappa_inv_d;
        spec.values = values.empty() ? grid(15.0, 45.0, 5.0) : values;
      } else {
        spec.variable = ccs::SweepVariable::delay;
        spec.values = values.empty() ? grid(0.0, 0.065, 0.005) : values;
      }
      spec.delays = delays.empty() ? std::vector<double>{0.0} : delays;
      const auto table = ccs::sweep(p, spec);
      ccs::write_csv((fs::path(dir) / "sweep.csv").string(), table.csv());
      for (const auto& r : table.rows)
        if (!r.error.empty()) std::cerr << "point " << r.value << " failed: " << r.error << '\n';
      std::cout << "sweep of " << spec.values.size() << " points; eigensolves " << p.counters().eigensolves
                << ", pump traces " << p.counters().pump_traces << '\n';
      return 0;
    }
  } catch (const ccs::StageError& e) {
    std::cerr << "error " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
