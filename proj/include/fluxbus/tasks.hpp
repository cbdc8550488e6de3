#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fluxbus/allocation.hpp"
#include "fluxbus/circuit.hpp"
#include "fluxbus/config.hpp"
#include "fluxbus/csv.hpp"
#include "fluxbus/dynamics.hpp"
#include "fluxbus/sideband.hpp"
#include "fluxbus/tomography.hpp"

// Task layer behind the CLI subcommands: each task reads its section of
// the config, runs the owning module, and emits CSV/report files plus a
// manifest. Outputs are a pure function of (config bytes, seed), so reruns
// are byte-identical; sweeps parallelize over cells with a deterministic
// write order.

namespace fluxbus {

struct TaskOptions {
  std::string task;
  std::filesystem::path out_dir;
  uint64_t seed = 0;
  int threads = 1;
  double volts_to_deltaf = 0.0;  // optional CLI-only scale, pi units per volt
};

namespace detail {

inline void parallel_for(int n, int threads,
                         const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw ConfigError("sweep grid needs at least 1 point");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Individual tasks. Each returns the list of files it wrote.
// ---------------------------------------------------------------------------

// DC mode spectrum vs boundary flux bias
inline std::vector<std::string> task_spectrum(const ConfigTree& cfg,
                                              const TaskOptions& opt) {
  BusCircuitParams dev = device_from_config(cfg);
  double f_plus = pi * cfg.get_double_or("task.spectrum.f_plus_pi", 0.0);
  auto grid = detail::linspace(pi * cfg.get_double("task.spectrum.f_minus_start_pi"),
                               pi * cfg.get_double("task.spectrum.f_minus_stop_pi"),
                               static_cast<int>(cfg.get_int("task.spectrum.points")));
  int n_modes = static_cast<int>(cfg.get_int_or("task.spectrum.n_modes", 9));

  std::vector<ModeSpectrum> specs(grid.size());
  detail::parallel_for(static_cast<int>(grid.size()), opt.threads, [&](int i) {
    specs[i] = dc_mode_frequencies(dev, FluxBias(f_plus, grid[i]), n_modes);
  });

  CsvBuilder csv({"bias_pi_units", "mode_index", "freq_ghz"});
  for (size_t i = 0; i < grid.size(); ++i)
    for (const auto& m : specs[i].modes)
      csv.row({grid[i] / pi, double(m.n), radns_to_ghz(m.omega)});
  atomic_write(opt.out_dir / "spectrum.csv", csv.str());
  return {"spectrum.csv"};
}

// single driven-resonance solve: the sideband amplitude vector
inline std::vector<std::string> task_sidebands(const ConfigTree& cfg,
                                               const TaskOptions& opt) {
  BusCircuitParams dev = device_from_config(cfg);
  double f = pi * cfg.get_double("task.sidebands.f_pi");
  double df = pi * cfg.get_double("task.sidebands.delta_f_pi");
  double wf = mhz_to_radns(cfg.get_double("task.sidebands.omega_f_mhz"));
  double psi0 = cfg.get_double_or("task.sidebands.psi0_rad", 0.0);
  int mode = static_cast<int>(cfg.get_int_or("task.sidebands.mode", 8));
  int nn = static_cast<int>(cfg.get_int_or("task.sidebands.truncation", 3));
  Parity parity = (mode % 2 == 0) ? Parity::antisymmetric : Parity::symmetric;

  ModulationDrive drive(f, df, wf, psi0);
  double w0 = dc_mode_frequencies(dev, FluxBias(f, f), mode).omega(mode);
  double wr = find_driven_resonance(dev, drive, w0, parity, nn);
  auto sol = normalize_energy(sideband_amplitudes(dev, drive, wr, parity, nn),
                              dev, drive, w0);

  CsvBuilder csv({"m", "freq_ghz", "re_amp", "im_amp"});
  for (int m = -nn; m <= nn; ++m)
    csv.row({double(m), radns_to_ghz(wr + m * wf), sol.amp(m).real(),
             sol.amp(m).imag()});
  atomic_write(opt.out_dir / "sidebands.csv", csv.str());
  return {"sidebands.csv"};
}

// (delta_f x omega_f) grid of parametric couplings for one qubit
inline std::vector<std::string> task_coupling(const ConfigTree& cfg,
                                              const TaskOptions& opt) {
  BusCircuitParams dev = device_from_config(cfg);
  auto qubits = qubits_from_config(cfg);
  QubitParams q = find_qubit(qubits, static_cast<int>(cfg.get_int("task.coupling.qubit")));
  double f = pi * cfg.get_double("task.coupling.f_pi");
  int mode = static_cast<int>(cfg.get_int_or("task.coupling.mode", 8));
  int nn = static_cast<int>(cfg.get_int_or("task.coupling.truncation", 3));
  Parity parity = (mode % 2 == 0) ? Parity::antisymmetric : Parity::symmetric;

  std::vector<double> dfs;
  if (cfg.has("task.coupling.delta_v_volts")) {
    if (opt.volts_to_deltaf <= 0.0)
      throw ConfigError("delta_v_volts given but --volts-to-deltaf not set");
    for (double v : cfg.get_list("task.coupling.delta_v_volts"))
      dfs.push_back(pi * opt.volts_to_deltaf * v);
  } else {
    for (double d : cfg.get_list("task.coupling.delta_f_pi")) dfs.push_back(pi * d);
  }
  std::vector<double> wfs;
  for (double m : cfg.get_list("task.coupling.omega_f_mhz"))
    wfs.push_back(mhz_to_radns(m));

  double w0 = dc_mode_frequencies(dev, FluxBias(f, f), mode).omega(mode);
  struct Cell {
    double df, wf, wr, gbar, gpar;
  };
  std::vector<Cell> cells(dfs.size() * wfs.size());
  detail::parallel_for(static_cast<int>(cells.size()), opt.threads, [&](int k) {
    double df = dfs[k / wfs.size()];
    double wf = wfs[k % wfs.size()];
    ModulationDrive drive(f, df, wf, 0.0);
    double wr = find_driven_resonance(dev, drive, w0, parity, nn);
    auto sol = normalize_energy(sideband_amplitudes(dev, drive, wr, parity, nn),
                                dev, drive, w0);
    auto pc = parametric_coupling(dev, sol, q.x, q.g0, wf, q.index);
    cells[k] = {df, wf, wr, pc.g_bar, pc.g_par};
  });

  CsvBuilder csv({"delta_f_pi", "omega_f_ghz", "omega_r_ghz", "g_bar", "g_par_mhz"});
  for (const auto& c : cells)
    csv.row({c.df / pi, radns_to_ghz(c.wf), radns_to_ghz(c.wr), c.gbar,
             radns_to_mhz(c.gpar)});
  atomic_write(opt.out_dir / "coupling.csv", csv.str());
  return {"coupling.csv"};
}

// oracle chevron between two qubits, drives from the sideband pipeline
inline std::vector<std::string> task_chevron(const ConfigTree& cfg,
                                             const TaskOptions& opt) {
  BusCircuitParams dev = device_from_config(cfg);
  auto qubits = qubits_from_config(cfg);
  QubitParams qi = find_qubit(qubits, static_cast<int>(cfg.get_int("task.chevron.qubit_i")));
  QubitParams qj = find_qubit(qubits, static_cast<int>(cfg.get_int("task.chevron.qubit_j")));
  double f = pi * cfg.get_double("task.chevron.f_pi");
  double df = pi * cfg.get_double("task.chevron.delta_f_pi");
  int mode = static_cast<int>(cfg.get_int_or("task.chevron.mode", 8));
  int nn = static_cast<int>(cfg.get_int_or("task.chevron.truncation", 3));
  Parity parity = (mode % 2 == 0) ? Parity::antisymmetric : Parity::symmetric;

  double d12 = std::abs(qi.omega_q - qj.omega_q);
  double wf_center = mhz_to_radns(
      cfg.get_double_or("task.chevron.omega_f_center_mhz", radns_to_mhz(d12)));
  double span = mhz_to_radns(cfg.get_double_or("task.chevron.omega_f_span_mhz", 2.0));
  int wf_points = static_cast<int>(cfg.get_int_or("task.chevron.omega_f_points", 11));
  double t_final = cfg.get_double("task.chevron.t_final_ns");
  int n_t = static_cast<int>(cfg.get_int_or("task.chevron.time_points", 120));

  double w0 = dc_mode_frequencies(dev, FluxBias(f, f), mode).omega(mode);
  ModulationDrive drive(f, df, wf_center, 0.0);
  double wr = find_driven_resonance(dev, drive, w0, parity, nn);
  auto sol = normalize_energy(sideband_amplitudes(dev, drive, wr, parity, nn),
                              dev, drive, w0);
  auto pci = parametric_coupling(dev, sol, qi.x, qi.g0, wf_center, qi.index);
  auto pcj = parametric_coupling(dev, sol, qj.x, qj.g0, wf_center, qj.index);

  SystemModel model;
  model.qubits = {qi, qj};
  model.levels = 2;
  model.omega_r = wr;
  model.n_max = static_cast<int>(cfg.get_int_or("task.chevron.n_max", 3));
  model.drives = {DriveTerm{pci.g_bar_static, std::abs(pci.g_bar), wf_center},
                  DriveTerm{pcj.g_bar_static, std::abs(pcj.g_bar), wf_center}};

  auto wfs = detail::linspace(wf_center - 0.5 * span, wf_center + 0.5 * span,
                              wf_points);
  auto res = chevron_scan(model, 0, 1, wfs, t_final, n_t);

  CsvBuilder csv({"omega_f_mhz", "t_ns", "p_target"});
  for (size_t k = 0; k < res.omega_fs.size(); ++k)
    for (size_t s = 0; s < res.times.size(); ++s)
      csv.row({radns_to_mhz(res.omega_fs[k]), res.times[s], res.p_target[k][s]});
  atomic_write(opt.out_dir / "chevron.csv", csv.str());

  CsvBuilder fit({"fitted_rate_mhz", "rate_ci_mhz", "r_squared", "center_omega_f_mhz",
                  "g12_prediction_mhz"});
  double g12 = effective_g12(qi, qj, wr, pci.g_bar, pcj.g_bar, pci.g_bar_static,
                             pcj.g_bar_static);
  fit.row({radns_to_mhz(res.fitted_rate), radns_to_mhz(res.rate_uncertainty),
           res.r_squared, radns_to_mhz(res.omega_fs[res.center_index]),
           radns_to_mhz(std::abs(g12))});
  atomic_write(opt.out_dir / "chevron_fit.csv", fit.str());

  // per-qubit population timelines at the resonance center
  for (auto& dterm : model.drives) dterm.omega_f = res.omega_fs[res.center_index];
  std::vector<int> init(model.qubits.size(), 0);
  init[0] = 1;
  Trajectory traj =
      evolve_schrodinger(model, basis_state(model, init, 0), t_final, 0.0, n_t);
  CsvBuilder tr({"t_ns", "label", "population"});
  for (size_t s = 0; s < traj.times.size(); ++s) {
    tr.row_mixed({format_number(traj.times[s]), "q" + std::to_string(qi.index),
                  format_number(traj.qubit_pop[s][0])});
    tr.row_mixed({format_number(traj.times[s]), "q" + std::to_string(qj.index),
                  format_number(traj.qubit_pop[s][1])});
    tr.row_mixed({format_number(traj.times[s]), "bus",
                  format_number(traj.resonator_pop[s])});
  }
  atomic_write(opt.out_dir / "trajectory.csv", tr.str());
  return {"chevron.csv", "chevron_fit.csv", "trajectory.csv"};
}

// multi-mode model ZZ vs static flux at fixed qubit-bus detunings
inline std::vector<std::string> task_zz_scan(const ConfigTree& cfg,
                                             const TaskOptions& opt) {
  BusCircuitParams dev = device_from_config(cfg);
  auto qubits = qubits_from_config(cfg);
  QubitParams qi = find_qubit(qubits, static_cast<int>(cfg.get_int("task.zz.qubit_i")));
  QubitParams qj = find_qubit(qubits, static_cast<int>(cfg.get_int("task.zz.qubit_j")));
  int mode = static_cast<int>(cfg.get_int_or("task.zz.mode", 8));
  double delta_i = mhz_to_radns(cfg.get_double("task.zz.delta_i_mhz"));
  double delta_j = mhz_to_radns(cfg.get_double("task.zz.delta_j_mhz"));
  auto grid = detail::linspace(pi * cfg.get_double("task.zz.f_start_pi"),
                               pi * cfg.get_double("task.zz.f_stop_pi"),
                               static_cast<int>(cfg.get_int("task.zz.points")));

  CsvBuilder csv({"F_pi_units", "zeta_khz", "g14_mhz"});
  for (double f : grid) {
    double wr = multimode_mode_frequency(dev, f, mode);
    QubitParams a = qi, b = qj;
    a.omega_q = wr + delta_i;
    b.omega_q = wr + delta_j;
    auto mm = multimode_coupling(a, b, dev, f, wr);
    double zeta = zz_perturbative(mm.g12, a.omega_q - b.omega_q, a.alpha, b.alpha);
    csv.row({f / pi, radns_to_khz(zeta), radns_to_mhz(mm.g12)});
  }
  atomic_write(opt.out_dir / "zz_scan.csv", csv.str());
  return {"zz_scan.csv"};
}

// parse a square CSV confusion matrix (header row optional)
inline ConfusionMatrix confusion_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      double x = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        numeric = false;
        break;
      }
      row.push_back(x);
    }
    if (numeric && !row.empty()) rows.push_back(row);
  }
  if (rows.empty() || rows.size() != rows.front().size())
    throw ConfigError("confusion CSV is not a square numeric matrix");
  Eigen::MatrixXd c(rows.size(), rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size())
      throw ConfigError("confusion CSV has ragged rows");
    for (size_t j = 0; j < rows.size(); ++j) c(i, j) = rows[i][j];
  }
  ConfusionMatrix cm{c};
  cm.validate();
  return cm;
}

// process tomography of a configured fSim channel
inline std::vector<std::string> task_qpt(const ConfigTree& cfg,
                                         const TaskOptions& opt) {
  FsimParams ch;
  ch.theta = pi * cfg.get_double_or("task.qpt.theta_pi", 1.0);
  ch.beta = cfg.get_double_or("task.qpt.beta_rad", 0.0);
  ch.phi = cfg.get_double_or("task.qpt.phi_rad", 0.0);
  FsimParams tgt;
  tgt.theta = pi * cfg.get_double_or("task.qpt.target_theta_pi", 1.0);
  tgt.beta = cfg.get_double_or("task.qpt.target_beta_rad", 0.0);
  tgt.phi = cfg.get_double_or("task.qpt.target_phi_rad", 0.0);
  bool optimize_phi = cfg.get_double_or("task.qpt.optimize_phi", 1.0) != 0.0;
  int iterations = static_cast<int>(cfg.get_int_or("task.qpt.iterations", 1));

  Channel channel = unitary_channel(fsim_unitary(ch));
  std::vector<std::string> outputs = {"qpt_report.txt"};
  std::string report;
  bool has_confusion = false;
  double worst = 0.0;

  // optional readout model: populations pass through the confusion matrix
  // and its inverse before entering the report
  if (cfg.has("task.qpt.confusion_csv")) {
    has_confusion = true;
    std::ifstream in(cfg.get_string("task.qpt.confusion_csv"), std::ios::binary);
    if (!in) throw ConfigError("cannot open confusion_csv");
    std::stringstream ss;
    ss << in.rdbuf();
    ConfusionMatrix cm = confusion_from_csv(ss.str());
    if (cm.c.rows() != 4)
      throw ConfigError("two-qubit QPT needs a 4x4 confusion matrix");
    Channel bare = channel;
    channel = [bare, cm, &worst](const Matrix4cd& rho) {
      Matrix4cd out = bare(rho);
      Eigen::VectorXd pops = out.diagonal().real();
      auto corrected = readout_correct(cm, apply_confusion(cm, pops));
      worst = std::max(worst, (corrected.q - pops).cwiseAbs().maxCoeff());
      for (int i = 0; i < 4; ++i) out(i, i) = corrected.q(i);
      return out;
    };
    report += "readout correction: confusion condition number " +
              format_number(cm.condition_number()) + "\n";
    CsvBuilder echo({"c00", "c01", "c10", "c11"});
    for (int i = 0; i < 4; ++i)
      echo.row({cm.c(i, 0), cm.c(i, 1), cm.c(i, 2), cm.c(i, 3)});
    atomic_write(opt.out_dir / "confusion.csv", echo.str());
    outputs.push_back("confusion.csv");
  }

  QptResult last;
  for (int it = 0; it < iterations; ++it) {
    last = process_tomography(channel, fsim_unitary(tgt), optimize_phi, tgt);
    report += "iteration " + std::to_string(it + 1) +
              ": fidelity = " + format_number(last.fidelity);
    if (last.phi_optimized)
      report += ", optimal_phi = " + format_number(last.phi_opt);
    if (last.non_physical)
      report += ", NON-PHYSICAL (cp violation " + format_number(last.cp_violation) + ")";
    report += "\n";
  }
  if (has_confusion)
    report += "readout round-trip worst deviation = " + format_number(worst) + "\n";
  report += "chi matrix (re, im interleaved):\n";
  for (int r = 0; r < last.chi.rows(); ++r) {
    for (int c = 0; c < last.chi.cols(); ++c)
      report += (c ? "," : "") + format_number(last.chi(r, c).real()) + ";" +
                format_number(last.chi(r, c).imag());
    report += "\n";
  }
  atomic_write(opt.out_dir / "qpt_report.txt", report);
  return outputs;
}

// maximin frequency allocation
inline std::vector<std::string> task_allocate(const ConfigTree& cfg,
                                              const TaskOptions& opt) {
  AllocationProblem prob;
  prob.n_qubits = static_cast<int>(cfg.get_int("task.allocate.n_qubits"));
  prob.omega_r = ghz_to_radns(cfg.get_double("task.allocate.omega_r_ghz"));
  prob.bandwidth = ghz_to_radns(cfg.get_double("task.allocate.bandwidth_ghz"));
  prob.min_bus_detuning =
      mhz_to_radns(cfg.get_double_or("task.allocate.min_bus_detuning_mhz", 150.0));
  prob.neighbor_guard =
      mhz_to_radns(cfg.get_double_or("task.allocate.neighbor_guard_mhz", 500.0));
  if (cfg.has("task.allocate.neighbor_modes_ghz"))
    for (double g : cfg.get_list("task.allocate.neighbor_modes_ghz"))
      prob.neighbor_modes.push_back(ghz_to_radns(g));
  int n_starts = static_cast<int>(cfg.get_int_or("task.allocate.n_starts", 96));

  auto res = allocate(prob, opt.seed, n_starts);

  CsvBuilder alloc({"qubit_index", "freq_ghz"});
  for (size_t i = 0; i < res.frequencies.size(); ++i)
    alloc.row({double(i + 1), radns_to_ghz(res.frequencies[i])});
  atomic_write(opt.out_dir / "allocation.csv", alloc.str());

  // pairwise detunings and each pair's minimum separation from the others
  const auto& fr = res.frequencies;
  std::vector<std::pair<std::string, double>> dets;
  for (size_t i = 0; i < fr.size(); ++i)
    for (size_t j = i + 1; j < fr.size(); ++j)
      dets.push_back({std::to_string(i + 1) + "-" + std::to_string(j + 1),
                      fr[i] - fr[j]});
  CsvBuilder pairs({"pair", "delta_ghz", "min_sep_mhz"});
  for (size_t a = 0; a < dets.size(); ++a) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t b = 0; b < dets.size(); ++b)
      if (a != b) best = std::min(best, std::abs(dets[a].second - dets[b].second));
    pairs.row_mixed({dets[a].first, format_number(radns_to_ghz(dets[a].second)),
                     format_number(radns_to_mhz(best))});
  }
  atomic_write(opt.out_dir / "pairs.csv", pairs.str());

  CsvBuilder summary({"s_min_mhz", "g_eff_max_mhz"});
  summary.row({radns_to_mhz(res.s_min), radns_to_mhz(res.g_eff_max)});
  atomic_write(opt.out_dir / "summary.csv", summary.str());
  return {"allocation.csv", "pairs.csv", "summary.csv"};
}

// dry-run constraint checks; returns the violation list instead of files
inline std::vector<std::string> validate_config(const ConfigTree& cfg) {
  std::vector<std::string> violations;
  BusCircuitParams dev = device_from_config(cfg);
  auto qubits = qubits_from_config(cfg);

  // dispersive margins against the coupling mode
  if (!qubits.empty()) {
    int mode = static_cast<int>(cfg.get_int_or("task.mode", 8));
    double f = pi * cfg.get_double_or("task.f_pi", 0.25);
    ModeSpectrum spec = dc_mode_frequencies(dev, FluxBias(f, f), mode + 1);
    double wr = spec.omega(mode);
    for (const auto& q : qubits) {
      double delta = std::abs(q.omega_q - wr);
      if (delta < 10.0 * q.g0)
        violations.push_back("qubit " + std::to_string(q.index) +
                             ": |Delta| = " + format_number(radns_to_mhz(delta)) +
                             " MHz < 10 g0");
    }
    // degenerate sideband ladders
    if (cfg.has("task.omega_f_mhz")) {
      double wf = mhz_to_radns(cfg.get_double("task.omega_f_mhz"));
      for (size_t a = 0; a < spec.modes.size(); ++a)
        for (size_t b = a + 1; b < spec.modes.size(); ++b) {
          double sep = spec.modes[b].omega - spec.modes[a].omega;
          double qq = std::round(sep / wf);
          if (qq >= 1.0 && std::abs(sep - qq * wf) < 1e-4 * sep)
            violations.push_back(
                "omega_f within 1e-4 of (mode " + std::to_string(spec.modes[b].n) +
                " - mode " + std::to_string(spec.modes[a].n) + ")/" +
                format_number(qq));
        }
    }
  }

  // Hilbert-space bound for dynamics tasks
  if (cfg.has("task.n_max")) {
    long n_max = cfg.get_int("task.n_max");
    long levels = cfg.get_int_or("task.levels", 2);
    double dim = n_max + 1;
    for (size_t i = 0; i < qubits.size(); ++i) dim *= levels;
    if (dim > 1e5)
      violations.push_back("Hilbert dimension " + format_number(dim) + " over 1e5");
  }
  return violations;
}

inline std::vector<std::string> task_validate(const ConfigTree& cfg,
                                              const TaskOptions& opt) {
  auto violations = validate_config(cfg);
  std::string report;
  if (violations.empty()) {
    report = "ok: no violations\n";
  } else {
    for (const auto& v : violations) report += "violation: " + v + "\n";
  }
  atomic_write(opt.out_dir / "validate.txt", report);
  return {"validate.txt"};
}

// ---------------------------------------------------------------------------
// Dispatch + manifest. The manifest is written even when the task throws.
// ---------------------------------------------------------------------------
inline int run_task(const ConfigTree& cfg, const TaskOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);

  auto write_manifest = [&](const std::string& status, const std::string& error,
                            const std::vector<std::string>& outputs) {
    nlohmann::ordered_json m;
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    m["config_hash"] = hash;
    m["seed"] = opt.seed;
    m["task"] = opt.task;
    m["version"] = fluxbus_version;
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    m["outputs"] = outputs;
    atomic_write(opt.out_dir / "manifest.json", m.dump(2) + "\n");
  };

  // config-declared task must match the subcommand when present
  if (cfg.has("task.name") && cfg.get_string("task.name") != opt.task)
    throw ConfigError("config declares task '" + cfg.get_string("task.name") +
                      "' but subcommand is '" + opt.task + "'");

  std::vector<std::string> outputs;
  try {
    if (opt.task == "spectrum") outputs = task_spectrum(cfg, opt);
    else if (opt.task == "sidebands") outputs = task_sidebands(cfg, opt);
    else if (opt.task == "coupling") outputs = task_coupling(cfg, opt);
    else if (opt.task == "chevron") outputs = task_chevron(cfg, opt);
    else if (opt.task == "zz-scan") outputs = task_zz_scan(cfg, opt);
    else if (opt.task == "qpt") outputs = task_qpt(cfg, opt);
    else if (opt.task == "allocate") outputs = task_allocate(cfg, opt);
    else if (opt.task == "validate") outputs = task_validate(cfg, opt);
    else throw ConfigError("unknown task '" + opt.task + "'");
  } catch (const ConfigError&) {
    throw;  // config errors propagate as exit code 2
  } catch (const FluxbusError& e) {
    write_manifest("error", e.what(), {});
    throw TaskError(e.what());
  } catch (const std::exception& e) {
    write_manifest("error", e.what(), {});
    throw TaskError(e.what());
  }
  write_manifest("ok", "", outputs);
  return 0;
}

}  // namespace fluxbus
