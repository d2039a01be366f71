#pragma once

// End-to-end pipeline (structure -> quasi-modes -> pump -> generation ->
// evolution), parameter sweeps and result export.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ccs/csv.hpp"
#include "ccs/errors.hpp"
#include "ccs/evolution.hpp"
#include "ccs/generation.hpp"
#include "ccs/pump.hpp"
#include "ccs/quasimode.hpp"
#include "ccs/structure.hpp"
#include "ccs/units.hpp"

namespace ccs {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct StageCounters {
  std::atomic<long> eigensolves{0};
  std::atomic<long> pump_traces{0};
  std::atomic<long> generations{0};
  std::atomic<long> envelopes{0};
};

struct PulseSettings {
  double energy_fj = 670.0;
  double kappa_inv_d = 20.0;
  double k0_d = -pi / 2.0;
  std::optional<int> q0;
};

struct PipelineOptions {
  std::optional<double> energy_fj;
  std::optional<double> kappa_inv_d;
  std::vector<double> delays{0.0};  // t-tilde; the best (lowest cv_min) is reported per pair
  bool orthogonal_approx = false;
  bool compare_orthogonal = false;
  bool skip_calibration_check = false;
  std::vector<int> pairs{1, 3};
  double env_t_max = 4.0;  // t-tilde after the handoff
  double env_step = 1e-3;
  double gen_step = 1e-3;  // output grid of the generation stage (t-tilde)
  GenerationOptions gen;
  DecayFitOptions decay;
};

struct GenerationResult {
  GenerationTrajectory trajectory;
  Handoff handoff;
  bool vacuum = false;
};

struct PairEnvelope {
  int n = 0;
  int id_s = 0, id_i = 0;
  double delay = 0.0;
  bool orthogonal_approx = false;
  std::vector<double> t_tilde, lower, upper;
  double cv_min = 1.0, cv_max = 1.0;
  double t_at_min = 0.0;
};

class Pipeline {
 public:
  explicit Pipeline(nlohmann::json doc) : doc_(std::move(doc)) {
    try {
      layout_ = load_layout(doc_);
    } catch (const Error& e) {
      throw StageError("structure", e.what());
    }
    config_hash_ = hex64(fnv1a(doc_.dump()));
  }

  const nlohmann::json& document() const { return doc_; }
  const SystemLayout& layout() const { return layout_; }
  const std::string& config_hash() const { return config_hash_; }
  StageCounters& counters() const { return counters_; }
  const std::map<std::string, double>& stage_seconds() const { return seconds_; }

  // Structure, mode solve, RS basis and loaded rates.  Idempotent; must be
  // called before concurrent use.
  void prepare(const DecayFitOptions& decay = {}) {
    if (prepared_) return;
    timed("structure", [&] { tb_ = assemble_matrices(layout_); });
    timed("quasimode", [&] {
      rs_ = rs_basis(layout_);
      basis_ = solve_modes(tb_);
      ++counters_.eigensolves;
    });
    timed("loaded_rates", [&] { rates_ = loaded_loss_rates(basis_, tb_, rs_, decay); rates_.validate(); });
    support_ = {tb_.index_of(rs_.ids[0]), tb_.index_of(rs_.ids[1]), tb_.index_of(rs_.ids[2])};
    prepared_ = true;
  }

  void check_calibration() const {
    require_prepared();
    if (!layout_.calibration) throw StageError("calibration", "layout has no calibration section");
    const auto& c = *layout_.calibration;
    auto off = [](double got, double want) { return std::abs(got - want) / want; };
    const double worst = std::max({off(rates_.gamma_s, c.gamma_s), off(rates_.gamma_i, c.gamma_i),
                                   off(rates_.gamma_p, c.gamma_p)});
    if (worst > c.tolerance)
      throw StageError("calibration", "loaded decay rates deviate from the calibration targets by " +
                                          std::to_string(100.0 * worst) + "%");
  }

  const TightBindingMatrices& matrices() const { return require_prepared(), tb_; }
  const QuasiModeBasis& basis() const { return require_prepared(), basis_; }
  const RSBasis& rs() const { return require_prepared(), rs_; }
  const LossRates& rates() const { return require_prepared(), rates_; }
  const std::array<Eigen::Index, 3>& support() const { return support_; }

  PulseSettings default_pulse(const PipelineOptions& opt = {}) const {
    PulseSettings p;
    p.energy_fj = opt.energy_fj.value_or(layout_.pump.energy_fj);
    p.kappa_inv_d = opt.kappa_inv_d.value_or(layout_.pump.kappa_inv_d);
    p.k0_d = layout_.pump.k0_d;
    p.q0 = layout_.pump.q0;
    return p;
  }

  double photons(double energy_fj) const {
    return photons_from_energy(energy_fj, rs().freqs[mode_p].omega, layout_.a_nm);
  }

  PumpCoefficients pump_coefficients(const PulseSettings& ps) const {
    PumpPulse pulse;
    pulse.n_p = photons(ps.energy_fj);
    pulse.kappa_d = 2.0 * pi / ps.kappa_inv_d;
    pulse.k0_d = ps.k0_d;
    pulse.q0 = ps.q0.value_or(default_q0(layout_, pulse.kappa_d));
    return initial_coefficients(pulse, layout_.ids_with_role(Role::pump_crow), tb_.ids);
  }

  PumpTrace pump(const PulseSettings& ps) const {
    require_prepared();
    ++counters_.pump_traces;
    const auto x = pump_coefficients(ps);
    PumpTraceOptions o;
    o.dt = layout_.pump.dt;
    o.t_max = layout_.pump.t_max;
    o.g_floor = layout_.pump.g_floor;
    o.a_nm = layout_.a_nm;
    auto tr = pump_trace(basis_, rs_, tb_, x, photons(ps.energy_fj), layout_.chi_eff, rates_.plus(), o);
    if (x.truncated) tr.warnings.push_back(x.warning);
    return tr;
  }

  GenerationResult generate(const PumpTrace& tr, const PipelineOptions& opt = {}) const {
    require_prepared();
    ++counters_.generations;
    GenerationResult res;
    const double gp = rates_.plus();
    if (tr.g_max() == 0.0) {
      res.vacuum = true;
      res.trajectory.states.push_back({});
      res.trajectory.g.push_back(0.0);
      res.handoff.state = {};
      return res;
    }
    if (!tr.beta_is_constant)
      throw StageError("generation", "driving phase beta varies (std " + std::to_string(tr.beta_std) +
                                         " rad); the closed-form squeezing phase does not apply");
    std::vector<double> gt(tr.t.size());
    for (std::size_t k = 0; k < gt.size(); ++k) gt[k] = gp * tr.t[k];
    std::vector<double> grid;
    for (long k = 0; static_cast<double>(k) * opt.gen_step <= gt.back() + 1e-12; ++k)
      grid.push_back(static_cast<double>(k) * opt.gen_step);
    if (grid.size() < 2) grid = {0.0, gt.back()};
    res.trajectory = integrate_generation(gt, tr.g, rates_.zeta(), grid, opt.gen);
    for (auto& s : res.trajectory.states)
      s.theta = squeezing_phase(s.t_tilde, tr.omega_p, tr.beta, 0.0, gp, tr.beta_is_constant);
    res.handoff = select_handoff(res.trajectory);
    return res;
  }

  MomentMatrices moments(const GenerationResult& g) const {
    return initial_moments(g.handoff.state, rs(), support_, tb_.size());
  }

  int crow_cavity(Role role, int n) const {
    const auto ids = layout_.ids_with_role(role);
    if (n < 1 || n > static_cast<int>(ids.size()))
      throw InputError("cavity pair index " + std::to_string(n) + " out of range for " + std::string(role_name(role)));
    return ids[static_cast<std::size_t>(n - 1)];
  }

  // CV envelope of signal/idler CROW pair n; t-tilde measured from the handoff,
  // idler measured delay earlier than signal.
  PairEnvelope envelope(const MomentMatrices& m, int n, double delay, bool orthogonal_approx,
                        const PipelineOptions& opt = {}) const {
    require_prepared();
    ++counters_.envelopes;
    PairEnvelope env;
    env.n = n;
    env.delay = delay;
    env.orthogonal_approx = orthogonal_approx;
    env.id_s = crow_cavity(Role::signal_crow, n);
    env.id_i = crow_cavity(Role::idler_crow, n);
    const Eigen::Index ps = tb_.index_of(env.id_s), pi_ = tb_.index_of(env.id_i);
    const PropagatorFactory f(basis_, orthogonal_approx);
    const double gp = rates_.plus();
    const double bss = tb_.B(ps, ps).real(), bii = tb_.B(pi_, pi_).real();
    env.cv_min = std::numeric_limits<double>::infinity();
    env.cv_max = -std::numeric_limits<double>::infinity();
    const auto steps = static_cast<long>(std::floor((opt.env_t_max - delay) / opt.env_step + 1e-9));
    for (long k = 0; k <= steps; ++k) {
      const double ts = delay + static_cast<double>(k) * opt.env_step;
      const Eigen::RowVector3cd rs_row = f.row(ps, ts / gp, support_);
      const Eigen::RowVector3cd ri_row = f.row(pi_, (ts - delay) / gp, support_);
      const auto t = cv_terms(rs_row, ri_row, m, bss, bii);
      const double lo = t.invariant - 2.0 * std::abs(t.pair), hi = t.invariant + 2.0 * std::abs(t.pair);
      env.t_tilde.push_back(ts);
      env.lower.push_back(lo);
      env.upper.push_back(hi);
      if (lo < env.cv_min) {
        env.cv_min = lo;
        env.t_at_min = ts;
      }
      env.cv_max = std::max(env.cv_max, hi);
    }
    return env;
  }

  // Photon numbers n_p(t-tilde) for the given cavity ids.
  CsvTable photon_traces(const MomentMatrices& m, const std::vector<int>& ids, const std::vector<double>& t_tilde,
                         bool orthogonal_approx) const {
    require_prepared();
    const PropagatorFactory f(basis_, orthogonal_approx);
    CsvTable t{{"t_tilde", "cavity_id", "n"}, {}};
    for (double tt : t_tilde)
      for (int id : ids) {
        const auto row = f.row(tb_.index_of(id), tt / rates_.plus(), support_);
        t.rows.push_back({tt, static_cast<double>(id), photon_number(row, m)});
      }
    return t;
  }

 private:
  void require_prepared() const {
    if (!prepared_) throw ContractError("pipeline used before prepare()");
  }

  template <class F>
  void timed(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      f();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
    seconds_[stage] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  nlohmann::json doc_;
  SystemLayout layout_;
  std::string config_hash_;
  bool prepared_ = false;
  TightBindingMatrices tb_;
  QuasiModeBasis basis_;
  RSBasis rs_;
  LossRates rates_;
  std::array<Eigen::Index, 3> support_{};
  std::map<std::string, double> seconds_;
  mutable StageCounters counters_;
};

struct PairResult {
  int n = 0;
  int id_s = 0, id_i = 0;
  double delay = 0.0;
  double cv_min = 1.0, cv_max = 1.0;
  double t_at_min = 0.0;
};

struct RunReport {
  std::string config_hash;
  std::string basis_hash;
  std::size_t mode_count = 0;
  std::array<ComplexFrequency, 3> rs_freqs{};
  LossRates rates;
  double n_p = 0.0;
  double peak_photons = 0.0;
  double g_max = 0.0;
  double beta = 0.0, beta_std = 0.0;
  bool beta_constant = true;
  double t_tilde0 = 0.0;
  GenerationState state;
  double n_s = 0.0, n_i = 0.0;
  double rs_cv_min = 1.0, rs_cv_max = 1.0;
  std::vector<PairResult> pairs;
  std::vector<PairResult> pairs_orthogonal;
  std::optional<double> orthogonality_effect;  // relative change of (1 - cv_min) for the first pair
  std::map<std::string, double> stage_seconds;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const {
    using nlohmann::json;
    auto pr = [](const std::vector<PairResult>& v) {
      json a = json::array();
      for (const auto& p : v)
        a.push_back({{"n", p.n}, {"id_s", p.id_s}, {"id_i", p.id_i}, {"delay", p.delay}, {"cv_min", p.cv_min},
                     {"cv_max", p.cv_max}, {"t_tilde_at_min", p.t_at_min}});
      return a;
    };
    json j;
    j["config_hash"] = config_hash;
    j["basis_hash"] = basis_hash;
    j["mode_count"] = mode_count;
    j["rs_modes"] = json::array();
    for (const auto& f : rs_freqs) j["rs_modes"].push_back({{"omega", f.omega}, {"gamma", f.gamma}, {"Q", f.q()}});
    j["loaded_rates"] = {{"S", rates.gamma_s}, {"I", rates.gamma_i}, {"P", rates.gamma_p},
                         {"gamma_plus", rates.plus()}, {"zeta", rates.zeta()}};
    j["pump"] = {{"n_p", n_p},   {"peak_photons", peak_photons}, {"g_max", g_max},
                 {"beta", beta}, {"beta_std", beta_std},         {"beta_constant", beta_constant}};
    j["handoff"] = {{"t_tilde0", t_tilde0}, {"r", state.r},        {"theta", state.theta},
                    {"n_th_S", state.n_th_s}, {"n_th_I", state.n_th_i}, {"n_S", n_s},
                    {"n_I", n_i},           {"cv_min", rs_cv_min},  {"cv_max", rs_cv_max}};
    j["pairs"] = pr(pairs);
    if (!pairs_orthogonal.empty()) j["pairs_orthogonal_approx"] = pr(pairs_orthogonal);
    if (orthogonality_effect) j["orthogonality_effect"] = *orthogonality_effect;
    j["stage_seconds"] = stage_seconds;
    j["warnings"] = warnings;
    return j;
  }
};

inline CsvTable envelope_table(const std::vector<PairEnvelope>& envs) {
  CsvTable t{{"t_tilde", "cv_lower", "cv_upper", "pair_index"}, {}};
  for (const auto& e : envs)
    for (std::size_t k = 0; k < e.t_tilde.size(); ++k)
      t.rows.push_back({e.t_tilde[k], e.lower[k], e.upper[k], static_cast<double>(e.n)});
  return t;
}

inline CsvTable pump_table(const PumpTrace& tr, std::size_t stride = 1) {
  CsvTable t{{"t", "alpha_re", "alpha_im", "g"}, {}};
  for (std::size_t k = 0; k < tr.t.size(); k += std::max<std::size_t>(1, stride))
    t.rows.push_back({tr.t[k], tr.alpha[k].real(), tr.alpha[k].imag(), tr.g[k]});
  return t;
}

inline CsvTable generation_table(const GenerationTrajectory& tr) {
  CsvTable t{{"t_tilde", "g", "r", "theta", "n_th_S", "n_th_I", "cv_min", "cv_max"}, {}};
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const auto& s = tr.states[k];
    const auto [lo, hi] = rs_cv_extrema(s);
    t.rows.push_back({s.t_tilde, tr.g[k], s.r, s.theta, s.n_th_s, s.n_th_i, lo, hi});
  }
  return t;
}

inline CsvTable modes_table(const QuasiModeBasis& b) {
  CsvTable t{{"mode", "omega", "gamma", "Q", "max_offdiag_overlap"}, {}};
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j)
      if (j != k) off = std::max(off, std::abs(b.O(k, j)));
    const auto& f = b.freqs[static_cast<std::size_t>(k)];
    t.rows.push_back({static_cast<double>(k), f.omega, f.gamma, f.q(), off});
  }
  return t;
}

inline PairResult best_pair(const Pipeline& p, const MomentMatrices& m, int n, const std::vector<double>& delays,
                            bool orth, const PipelineOptions& opt, std::vector<PairEnvelope>* keep = nullptr) {
  PairResult best;
  bool first = true;
  for (double d : delays) {
    auto env = p.envelope(m, n, d, orth, opt);
    if (first || env.cv_min < best.cv_min) {
      best = {n, env.id_s, env.id_i, d, env.cv_min, env.cv_max, env.t_at_min};
      if (keep) {
        keep->erase(std::remove_if(keep->begin(), keep->end(), [n](const PairEnvelope& e) { return e.n == n; }),
                    keep->end());
        keep->push_back(std::move(env));
      }
    }
    first = false;
  }
  return best;
}

// Runs every stage; writes CSVs and a JSON manifest when out_dir is given.
inline RunReport run_pipeline(Pipeline& p, const PipelineOptions& opt, const std::optional<std::string>& out_dir = {}) {
  RunReport rep;
  p.prepare(opt.decay);
  if (!opt.skip_calibration_check) p.check_calibration();
  rep.config_hash = p.config_hash();
  rep.basis_hash = hex64(p.basis().hash());
  rep.mode_count = static_cast<std::size_t>(p.basis().size());
  rep.rs_freqs = p.rs().freqs;
  rep.rates = p.rates();

  auto stage = [](const std::string& name, auto&& f) {
    try {
      return f();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };
  auto clock = std::chrono::steady_clock::now;
  auto t0 = clock();
  const auto pulse = p.default_pulse(opt);
  const PumpTrace tr = stage("pump", [&] { return p.pump(pulse); });
  rep.stage_seconds["pump"] = std::chrono::duration<double>(clock() - t0).count();
  rep.n_p = tr.n_p;
  rep.peak_photons = tr.peak_photons();
  rep.g_max = tr.g_max();
  rep.beta = tr.beta;
  rep.beta_std = tr.beta_std;
  rep.beta_constant = tr.beta_is_constant;
  rep.warnings.insert(rep.warnings.end(), tr.warnings.begin(), tr.warnings.end());

  t0 = clock();
  const GenerationResult gen = stage("generation", [&] { return p.generate(tr, opt); });
  rep.stage_seconds["generation"] = std::chrono::duration<double>(clock() - t0).count();
  rep.warnings.insert(rep.warnings.end(), gen.trajectory.warnings.begin(), gen.trajectory.warnings.end());
  rep.t_tilde0 = gen.handoff.t_tilde0;
  rep.state = gen.handoff.state;
  std::tie(rep.n_s, rep.n_i) = total_photons(rep.state);
  std::tie(rep.rs_cv_min, rep.rs_cv_max) = rs_cv_extrema(rep.state);

  t0 = clock();
  std::vector<PairEnvelope> envs;
  stage("evolution", [&] {
    const auto m = p.moments(gen);
    for (int n : opt.pairs) rep.pairs.push_back(best_pair(p, m, n, opt.delays, opt.orthogonal_approx, opt, &envs));
    if (opt.compare_orthogonal)
      for (int n : opt.pairs) rep.pairs_orthogonal.push_back(best_pair(p, m, n, opt.delays, !opt.orthogonal_approx, opt));
    return 0;
  });
  rep.stage_seconds["evolution"] = std::chrono::duration<double>(clock() - t0).count();
  if (opt.compare_orthogonal && !rep.pairs.empty()) {
    const double exact_gap = 1.0 - (opt.orthogonal_approx ? rep.pairs_orthogonal[0] : rep.pairs[0]).cv_min;
    const double approx_gap = 1.0 - (opt.orthogonal_approx ? rep.pairs[0] : rep.pairs_orthogonal[0]).cv_min;
    if (exact_gap != 0.0) rep.orthogonality_effect = (approx_gap - exact_gap) / exact_gap;
  }
  for (const auto& [k, v] : p.stage_seconds()) rep.stage_seconds[k] = v;

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    const std::filesystem::path d(*out_dir);
    write_csv((d / "modes.csv").string(), modes_table(p.basis()));
    write_csv((d / "pump.csv").string(), pump_table(tr, 20));
    write_csv((d / "generation.csv").string(), generation_table(gen.trajectory));
    write_csv((d / "cv_envelope.csv").string(), envelope_table(envs));
    std::ofstream((d / "report.json").string()) << rep.to_json().dump(2) << '\n';
  }
  return rep;
}

enum class SweepVariable { pump_energy_fj, kappa_inv_d, delay };

inline std::string_view sweep_variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::pump_energy_fj: return "pump_energy_fJ";
    case SweepVariable::kappa_inv_d: return "kappa_inv_d";
    case SweepVariable::delay: return "delay_t_tilde";
  }
  return "unknown";
}

struct SweepSpec {
  SweepVariable variable = SweepVariable::pump_energy_fj;
  std::vector<double> values;
  PipelineOptions fixed;
  int pair = 3;
  std::vector<double> delays{0.0};  // per-point delays for energy and kappa sweeps
  int workers = 1;
};

struct SweepRow {
  double value = 0.0;
  double delay = 0.0;
  double cv_min = 1.0, cv_max = 1.0;
  double rs_cv_min = 1.0;
  double t_tilde0 = 0.0;
  std::string error;
};

struct SweepTable {
  SweepVariable variable = SweepVariable::pump_energy_fj;
  std::vector<SweepRow> rows;  // input order, then delay order
  std::string basis_hash;

  // Delay sweeps carry the delay once; other sweeps add a delay column.
  CsvTable csv() const {
    const bool by_delay = variable == SweepVariable::delay;
    CsvTable t{{std::string(sweep_variable_name(variable))}, {}};
    if (!by_delay) t.header.push_back("delay_t_tilde");
    for (const char* c : {"cv_min", "cv_max", "rs_cv_min", "t_tilde0", "ok"}) t.header.push_back(c);
    for (const auto& r : rows) {
      std::vector<double> row{r.value};
      if (!by_delay) row.push_back(r.delay);
      for (double v : {r.cv_min, r.cv_max, r.rs_cv_min, r.t_tilde0, r.error.empty() ? 1.0 : 0.0}) row.push_back(v);
      t.rows.push_back(std::move(row));
    }
    return t;
  }
};

// One pipeline evaluation per sweep value.  The mode solve is shared; energy
// sweeps reuse one pump trace scaled by the photon number.
inline SweepTable sweep(Pipeline& p, const SweepSpec& spec) {
  if (spec.values.empty()) throw InputError("sweep: no values");
  if (!std::is_sorted(spec.values.begin(), spec.values.end())) throw InputError("sweep: values must be sorted");
  p.prepare(spec.fixed.decay);
  if (!spec.fixed.skip_calibration_check) p.check_calibration();
  SweepTable table;
  table.variable = spec.variable;
  table.basis_hash = hex64(p.basis().hash());

  const PulseSettings base = p.default_pulse(spec.fixed);
  std::optional<PumpTrace> reference;
  std::optional<GenerationResult> shared_gen;
  if (spec.variable == SweepVariable::pump_energy_fj) {
    PulseSettings ref = base;
    if (!(ref.energy_fj > 0.0)) ref.energy_fj = 1.0;
    reference = p.pump(ref);
  } else if (spec.variable == SweepVariable::delay) {
    shared_gen = p.generate(p.pump(base), spec.fixed);
  }

  const std::vector<double>& delays = spec.variable == SweepVariable::delay ? spec.values : spec.delays;
  const std::size_t per_point = spec.variable == SweepVariable::delay ? 1 : delays.size();
  std::vector<std::vector<SweepRow>> results(spec.values.size());

  auto evaluate = [&](std::size_t k) {
    const double v = spec.values[k];
    std::vector<double> point_delays = spec.variable == SweepVariable::delay ? std::vector<double>{v} : delays;
    auto& rows = results[k];
    try {
      GenerationResult gen;
      if (spec.variable == SweepVariable::delay) {
        gen = *shared_gen;
      } else if (spec.variable == SweepVariable::pump_energy_fj) {
        const double ref_e = reference->n_p > 0 ? reference->n_p : 1.0;
        gen = p.generate(reference->scaled(p.photons(v) / ref_e), spec.fixed);
      } else {
        PulseSettings ps = base;
        ps.kappa_inv_d = v;
        gen = p.generate(p.pump(ps), spec.fixed);
      }
      const auto m = p.moments(gen);
      const double rs_cv = rs_cv_extrema(gen.handoff.state).first;
      for (double d : point_delays) {
        const auto env = p.envelope(m, spec.pair, d, spec.fixed.orthogonal_approx, spec.fixed);
        rows.push_back({v, d, env.cv_min, env.cv_max, rs_cv, gen.handoff.t_tilde0, ""});
      }
    } catch (const std::exception& e) {
      rows.clear();
      for (double d : point_delays) {
        SweepRow r;
        r.value = v;
        r.delay = d;
        r.cv_min = r.cv_max = r.rs_cv_min = std::numeric_limits<double>::quiet_NaN();
        r.error = e.what();
        rows.push_back(r);
      }
    }
  };

  const int workers = std::max(1, spec.workers);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next++) < spec.values.size();) evaluate(k);
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  table.rows.reserve(spec.values.size() * per_point);
  for (auto& r : results)
    for (auto& row : r) table.rows.push_back(std::move(row));
  return table;
}

}  // namespace ccs
