#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "fluxbus/effective.hpp"
#include "fluxbus/errors.hpp"
#include "fluxbus/units.hpp"

// Brute-force time evolution of qubits + resonator with time-periodic
// couplings; the ground truth everything analytic is checked against.
//
//   H(t) = w_r a'a + sum_i [w_i n_i - (alpha_i/2) n_i(n_i-1)]
//          - sum_i g_i(t) (b_i - b_i') (a - a')
//          + sum_{(i,j)} J_ij (b_i b_j' + b_i' b_j)
//   g_i(t) = g0_i [ gbar0_i + 2 gbar_i sin(w_f t) ]
//
// Fixed-step RK4 on the state vector (or vectorized density matrix with
// Lindblad dissipators), renormalizing each step; a per-step norm jump
// above 1e-6 aborts with StepTooLarge.

namespace fluxbus {

struct DriveTerm {
  double g_bar0 = 1.0;  // static factor of the coupling
  double g_bar = 0.0;   // half-amplitude of the harmonic
  double omega_f = 0.0; // modulation angular frequency, rad/ns
};

struct ExchangeTerm {
  int i = 0, j = 1;     // qubit indices into SystemModel::qubits
  double rate = 0.0;    // J, rad/ns
};

struct Dissipation {
  std::vector<double> t1;  // per qubit, ns (<=0 disables)
  std::vector<double> t2;  // per qubit, ns (<=0 disables)
};

struct SystemModel {
  std::vector<QubitParams> qubits;
  int levels = 2;       // transmon levels kept (2 or 3)
  double omega_r = 0.0; // resonator frequency, rad/ns
  int n_max = 5;        // Fock cutoff
  std::vector<DriveTerm> drives;        // empty -> all-static couplings
  std::vector<ExchangeTerm> exchange;   // optional direct qubit-qubit terms
  std::optional<Dissipation> dissipation;

  int dim() const {
    int d = n_max + 1;
    for (size_t q = 0; q < qubits.size(); ++q) d *= levels;
    return d;
  }

  void validate() const {
    if (qubits.empty()) throw std::invalid_argument("SystemModel: no qubits");
    if (levels != 2 && levels != 3)
      throw std::invalid_argument("SystemModel: levels must be 2 or 3");
    if (n_max < 1) throw std::invalid_argument("SystemModel: n_max >= 1");
    if (dim() > 100000)
      throw std::invalid_argument("SystemModel: Hilbert dimension over 1e5");
    if (!drives.empty() && drives.size() != qubits.size())
      throw std::invalid_argument("SystemModel: one DriveTerm per qubit");
  }
};

namespace detail {

using SpMat = Eigen::SparseMatrix<std::complex<double>>;
using Vec = Eigen::VectorXcd;

// dense operators on the registered tensor-product space, built sparse
struct ModelOperators {
  int dim = 0;
  int nq = 0;
  SpMat h0;                  // static diagonal + exchange terms
  std::vector<SpMat> x_ops;  // per qubit: -(b_i - b_i')(a - a')
  std::vector<SpMat> num_q;  // per-qubit number operator
  std::vector<SpMat> low_q;  // per-qubit lowering operator
  SpMat num_r;               // resonator number operator
};

inline ModelOperators build_operators(const SystemModel& model) {
  model.validate();
  const int nq = static_cast<int>(model.qubits.size());
  const int lv = model.levels;
  const int nr = model.n_max + 1;
  const int dim = model.dim();

  // basis index: ((q0 * lv + q1) * lv + ...) * nr + n_res
  auto qubit_of = [&](int idx, int q) {
    int rest = idx / nr;
    for (int k = nq - 1; k > q; --k) rest /= lv;
    return rest % lv;
  };
  auto res_of = [&](int idx) { return idx % nr; };
  auto stride_q = [&](int q) {
    int s = nr;
    for (int k = nq - 1; k > q; --k) s *= lv;
    return s;
  };

  ModelOperators ops;
  ops.dim = dim;
  ops.nq = nq;

  using T = Eigen::Triplet<std::complex<double>>;

  // static Hamiltonian diagonal
  std::vector<T> h0t;
  for (int idx = 0; idx < dim; ++idx) {
    double e = model.omega_r * res_of(idx);
    for (int q = 0; q < nq; ++q) {
      double n = qubit_of(idx, q);
      e += model.qubits[q].omega_q * n -
           0.5 * model.qubits[q].alpha * n * (n - 1.0);
    }
    h0t.emplace_back(idx, idx, e);
  }
  // direct exchange J (b_i b_j' + h.c.)
  for (const auto& ex : model.exchange) {
    for (int idx = 0; idx < dim; ++idx) {
      int qi = qubit_of(idx, ex.i), qj = qubit_of(idx, ex.j);
      if (qi > 0 && qj < lv - 1) {
        int tgt = idx - stride_q(ex.i) + stride_q(ex.j);
        double amp = std::sqrt(double(qi)) * std::sqrt(double(qj + 1));
        h0t.emplace_back(tgt, idx, ex.rate * amp);
        h0t.emplace_back(idx, tgt, ex.rate * amp);
      }
    }
  }
  ops.h0.resize(dim, dim);
  ops.h0.setFromTriplets(h0t.begin(), h0t.end());

  // per-qubit coupling operators -(b - b')(a - a')
  for (int q = 0; q < nq; ++q) {
    std::vector<T> xt;
    for (int idx = 0; idx < dim; ++idx) {
      int qn = qubit_of(idx, q);
      int rn = res_of(idx);
      // four branches of (b - b')(a - a') = ba - ba' - b'a + b'a'
      if (qn > 0 && rn > 0)  // b a
        xt.emplace_back(idx - stride_q(q) - 1, idx,
                        -std::sqrt(double(qn) * rn));
      if (qn > 0 && rn < nr - 1)  // b a'
        xt.emplace_back(idx - stride_q(q) + 1, idx,
                        +std::sqrt(double(qn) * (rn + 1)));
      if (qn < lv - 1 && rn > 0)  // b' a
        xt.emplace_back(idx + stride_q(q) - 1, idx,
                        +std::sqrt(double(qn + 1) * rn));
      if (qn < lv - 1 && rn < nr - 1)  // b' a'
        xt.emplace_back(idx + stride_q(q) + 1, idx,
                        -std::sqrt(double(qn + 1) * (rn + 1)));
    }
    SpMat x(dim, dim);
    x.setFromTriplets(xt.begin(), xt.end());
    ops.x_ops.push_back(x);

    std::vector<T> nt, lt;
    for (int idx = 0; idx < dim; ++idx) {
      int qn = qubit_of(idx, q);
      if (qn > 0) {
        nt.emplace_back(idx, idx, double(qn));
        lt.emplace_back(idx - stride_q(q), idx, std::sqrt(double(qn)));
      }
    }
    SpMat n(dim, dim), l(dim, dim);
    n.setFromTriplets(nt.begin(), nt.end());
    l.setFromTriplets(lt.begin(), lt.end());
    ops.num_q.push_back(n);
    ops.low_q.push_back(l);
  }

  std::vector<T> nrt;
  for (int idx = 0; idx < dim; ++idx)
    if (res_of(idx) > 0) nrt.emplace_back(idx, idx, double(res_of(idx)));
  ops.num_r.resize(dim, dim);
  ops.num_r.setFromTriplets(nrt.begin(), nrt.end());
  return ops;
}

inline double drive_value(const SystemModel& model, int q, double t) {
  double g0 = model.qubits[q].g0;
  if (model.drives.empty()) return g0;
  const DriveTerm& d = model.drives[q];
  return g0 * (d.g_bar0 + 2.0 * d.g_bar * std::sin(d.omega_f * t));
}

}  // namespace detail

// natural step for the fastest scale in the model
inline double default_time_step(const SystemModel& model) {
  double wmax = model.omega_r;
  for (const auto& q : model.qubits) wmax = std::max(wmax, q.omega_q);
  return two_pi / (200.0 * wmax);
}

struct Trajectory {
  std::vector<double> times;                      // ns
  std::vector<Eigen::VectorXcd> states;
  std::vector<std::vector<double>> qubit_pop;     // [sample][qubit] <n_q>
  std::vector<double> resonator_pop;              // [sample] <n_r>
};

// Schrodinger evolution of H(t); samples the state at n_samples evenly
// spaced times (including t_final).
inline Trajectory evolve_schrodinger(const SystemModel& model,
                                     const Eigen::VectorXcd& psi0,
                                     double t_final, double dt = 0.0,
                                     int n_samples = 200,
                                     bool keep_states = false) {
  auto ops = detail::build_operators(model);
  if (psi0.size() != ops.dim)
    throw std::invalid_argument("evolve_schrodinger: state dimension mismatch");
  if (dt <= 0.0) dt = default_time_step(model);

  const int nq = ops.nq;
  Eigen::VectorXcd psi = psi0.normalized();

  auto rhs = [&](const Eigen::VectorXcd& y, double t) -> Eigen::VectorXcd {
    Eigen::VectorXcd hy = ops.h0 * y;
    for (int q = 0; q < nq; ++q)
      hy += detail::drive_value(model, q, t) * (ops.x_ops[q] * y);
    return std::complex<double>(0.0, -1.0) * hy;
  };

  Trajectory traj;
  long n_steps = static_cast<long>(std::ceil(t_final / dt));
  if (n_steps < 1) n_steps = 1;
  double h = t_final / n_steps;
  long stride = std::max(1l, n_steps / std::max(1, n_samples));

  auto record = [&](double t) {
    traj.times.push_back(t);
    if (keep_states) traj.states.push_back(psi);
    std::vector<double> pops(nq);
    for (int q = 0; q < nq; ++q)
      pops[q] = std::real(psi.dot(ops.num_q[q] * psi));
    traj.qubit_pop.push_back(pops);
    traj.resonator_pop.push_back(std::real(psi.dot(ops.num_r * psi)));
  };

  record(0.0);
  for (long s = 0; s < n_steps; ++s) {
    double t = s * h;
    Eigen::VectorXcd k1 = rhs(psi, t);
    Eigen::VectorXcd k2 = rhs(psi + 0.5 * h * k1, t + 0.5 * h);
    Eigen::VectorXcd k3 = rhs(psi + 0.5 * h * k2, t + 0.5 * h);
    Eigen::VectorXcd k4 = rhs(psi + h * k3, t + h);
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    double norm = psi.norm();
    if (std::abs(norm - 1.0) > 1e-6)
      throw StepTooLarge("norm drifted by " + std::to_string(norm - 1.0) +
                         " in one step; reduce dt");
    psi /= norm;
    if ((s + 1) % stride == 0 || s + 1 == n_steps) record((s + 1) * h);
  }
  return traj;
}

// Interaction-picture evolution at each subsystem's bare frequency
// (two-level qubits, no direct exchange): populations must agree with the
// lab frame to 1e-6. The coupling splits into four rotating pieces per
// qubit, H_I(t) = sum_i g_i(t) [ -(b a) e^{-i S_i t} + (b a') e^{-i D_i t}
// + (b' a) e^{+i D_i t} - (b' a') e^{+i S_i t} ].
inline Trajectory evolve_schrodinger_rotating(const SystemModel& model,
                                              const Eigen::VectorXcd& psi0,
                                              double t_final, double dt = 0.0,
                                              int n_samples = 200) {
  if (model.levels != 2 || !model.exchange.empty())
    throw std::invalid_argument(
        "evolve_schrodinger_rotating: two-level, no direct exchange");
  auto ops = detail::build_operators(model);
  if (psi0.size() != ops.dim)
    throw std::invalid_argument("evolve_schrodinger_rotating: dimension mismatch");
  const int nq = ops.nq;

  // per-qubit pieces b a, b a', b' a, b' a'
  using SpMat = detail::SpMat;
  std::vector<std::array<SpMat, 4>> pieces(nq);
  {
    const int lv = model.levels, nr = model.n_max + 1, dim = ops.dim;
    auto qubit_of = [&](int idx, int q) {
      int rest = idx / nr;
      for (int k = nq - 1; k > q; --k) rest /= lv;
      return rest % lv;
    };
    auto res_of = [&](int idx) { return idx % nr; };
    auto stride_q = [&](int q) {
      int s = nr;
      for (int k = nq - 1; k > q; --k) s *= lv;
      return s;
    };
    using T = Eigen::Triplet<std::complex<double>>;
    for (int q = 0; q < nq; ++q) {
      std::vector<T> t_ba, t_bad, t_bda, t_bdad;
      for (int idx = 0; idx < dim; ++idx) {
        int qn = qubit_of(idx, q), rn = res_of(idx);
        if (qn > 0 && rn > 0)
          t_ba.emplace_back(idx - stride_q(q) - 1, idx, std::sqrt(double(qn) * rn));
        if (qn > 0 && rn < nr - 1)
          t_bad.emplace_back(idx - stride_q(q) + 1, idx,
                             std::sqrt(double(qn) * (rn + 1)));
        if (qn < lv - 1 && rn > 0)
          t_bda.emplace_back(idx + stride_q(q) - 1, idx,
                             std::sqrt(double(qn + 1) * rn));
        if (qn < lv - 1 && rn < nr - 1)
          t_bdad.emplace_back(idx + stride_q(q) + 1, idx,
                              std::sqrt(double(qn + 1) * (rn + 1)));
      }
      for (int k = 0; k < 4; ++k) pieces[q][k].resize(dim, dim);
      pieces[q][0].setFromTriplets(t_ba.begin(), t_ba.end());
      pieces[q][1].setFromTriplets(t_bad.begin(), t_bad.end());
      pieces[q][2].setFromTriplets(t_bda.begin(), t_bda.end());
      pieces[q][3].setFromTriplets(t_bdad.begin(), t_bdad.end());
    }
  }

  if (dt <= 0.0) {
    double fmax = 0.0;
    for (const auto& q : model.qubits)
      fmax = std::max(fmax, q.omega_q + model.omega_r);
    dt = two_pi / (40.0 * fmax);
  }

  Eigen::VectorXcd psi = psi0.normalized();
  auto rhs = [&](const Eigen::VectorXcd& y, double t) -> Eigen::VectorXcd {
    using cplx = std::complex<double>;
    const cplx I(0.0, 1.0);
    Eigen::VectorXcd hy = Eigen::VectorXcd::Zero(y.size());
    for (int q = 0; q < nq; ++q) {
      double g = detail::drive_value(model, q, t);
      double d = model.qubits[q].omega_q - model.omega_r;
      double s = model.qubits[q].omega_q + model.omega_r;
      hy += g * (-std::exp(-I * s * t) * (pieces[q][0] * y) +
                 std::exp(-I * d * t) * (pieces[q][1] * y) +
                 std::exp(+I * d * t) * (pieces[q][2] * y) -
                 std::exp(+I * s * t) * (pieces[q][3] * y));
    }
    return -I * hy;
  };

  Trajectory traj;
  long n_steps = static_cast<long>(std::ceil(t_final / dt));
  if (n_steps < 1) n_steps = 1;
  double h = t_final / n_steps;
  long stride = std::max(1l, n_steps / std::max(1, n_samples));
  auto record = [&](double t) {
    traj.times.push_back(t);
    std::vector<double> pops(nq);
    for (int q = 0; q < nq; ++q)
      pops[q] = std::real(psi.dot(ops.num_q[q] * psi));
    traj.qubit_pop.push_back(pops);
    traj.resonator_pop.push_back(std::real(psi.dot(ops.num_r * psi)));
  };
  record(0.0);
  for (long s = 0; s < n_steps; ++s) {
    double t = s * h;
    Eigen::VectorXcd k1 = rhs(psi, t);
    Eigen::VectorXcd k2 = rhs(psi + 0.5 * h * k1, t + 0.5 * h);
    Eigen::VectorXcd k3 = rhs(psi + 0.5 * h * k2, t + 0.5 * h);
    Eigen::VectorXcd k4 = rhs(psi + h * k3, t + h);
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    double norm = psi.norm();
    if (std::abs(norm - 1.0) > 1e-6)
      throw StepTooLarge("norm drifted by " + std::to_string(norm - 1.0));
    psi /= norm;
    if ((s + 1) % stride == 0 || s + 1 == n_steps) record((s + 1) * h);
  }
  return traj;
}

struct DensityTrajectory {
  std::vector<double> times;
  std::vector<Eigen::MatrixXcd> states;
  std::vector<std::vector<double>> qubit_pop;
  std::vector<double> min_eigenvalue;  // positivity monitor at samples
};

// Lindblad master equation with per-qubit T1 relaxation and pure dephasing
// chosen so the total coherence decay matches T2 (requires T2 <= 2 T1).
inline DensityTrajectory evolve_lindblad(const SystemModel& model,
                                         const Eigen::MatrixXcd& rho0,
                                         double t_final, double dt = 0.0,
                                         int n_samples = 100,
                                         bool keep_states = false) {
  auto ops = detail::build_operators(model);
  if (rho0.rows() != ops.dim || rho0.cols() != ops.dim)
    throw std::invalid_argument("evolve_lindblad: density dimension mismatch");
  if (ops.dim > 1000)
    throw std::invalid_argument("evolve_lindblad: density dim over 1e3");
  if (dt <= 0.0) dt = default_time_step(model);

  const int nq = ops.nq;
  std::vector<Eigen::MatrixXcd> collapse;
  if (model.dissipation) {
    const auto& dis = *model.dissipation;
    for (int q = 0; q < nq; ++q) {
      double t1 = q < static_cast<int>(dis.t1.size()) ? dis.t1[q] : 0.0;
      double t2 = q < static_cast<int>(dis.t2.size()) ? dis.t2[q] : 0.0;
      if (t1 > 0.0)
        collapse.push_back(std::sqrt(1.0 / t1) *
                           Eigen::MatrixXcd(ops.low_q[q]));
      if (t2 > 0.0) {
        double gamma_phi = 1.0 / t2 - (t1 > 0.0 ? 0.5 / t1 : 0.0);
        if (gamma_phi < -1e-12)
          throw std::invalid_argument("evolve_lindblad: need T2 <= 2 T1");
        if (gamma_phi > 0.0) {
          // sigma_z-type dephasing on the qubit ladder
          Eigen::MatrixXcd z =
              2.0 * Eigen::MatrixXcd(ops.num_q[q]) -
              Eigen::MatrixXcd::Identity(ops.dim, ops.dim);
          collapse.push_back(std::sqrt(0.5 * gamma_phi) * z);
        }
      }
    }
  }
  std::vector<Eigen::MatrixXcd> collapse_dag_c;
  for (auto& l : collapse) collapse_dag_c.push_back(l.adjoint() * l);

  Eigen::MatrixXcd h0d = Eigen::MatrixXcd(ops.h0);
  std::vector<Eigen::MatrixXcd> xds;
  for (auto& x : ops.x_ops) xds.push_back(Eigen::MatrixXcd(x));

  auto rhs = [&](const Eigen::MatrixXcd& r, double t) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd hmat = h0d;
    for (int q = 0; q < nq; ++q) hmat += detail::drive_value(model, q, t) * xds[q];
    Eigen::MatrixXcd out =
        std::complex<double>(0.0, -1.0) * (hmat * r - r * hmat);
    for (size_t k = 0; k < collapse.size(); ++k) {
      out += collapse[k] * r * collapse[k].adjoint();
      out -= 0.5 * (collapse_dag_c[k] * r + r * collapse_dag_c[k]);
    }
    return out;
  };

  DensityTrajectory traj;
  long n_steps = static_cast<long>(std::ceil(t_final / dt));
  if (n_steps < 1) n_steps = 1;
  double h = t_final / n_steps;
  long stride = std::max(1l, n_steps / std::max(1, n_samples));
  Eigen::MatrixXcd rho = rho0 / rho0.trace().real();

  auto record = [&](double t) {
    traj.times.push_back(t);
    if (keep_states) traj.states.push_back(rho);
    std::vector<double> pops(nq);
    for (int q = 0; q < nq; ++q)
      pops[q] = (Eigen::MatrixXcd(ops.num_q[q]) * rho).trace().real();
    traj.qubit_pop.push_back(pops);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    traj.min_eigenvalue.push_back(es.eigenvalues().minCoeff());
  };

  record(0.0);
  for (long s = 0; s < n_steps; ++s) {
    double t = s * h;
    Eigen::MatrixXcd k1 = rhs(rho, t);
    Eigen::MatrixXcd k2 = rhs(rho + 0.5 * h * k1, t + 0.5 * h);
    Eigen::MatrixXcd k3 = rhs(rho + 0.5 * h * k2, t + 0.5 * h);
    Eigen::MatrixXcd k4 = rhs(rho + h * k3, t + h);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-6)
      throw StepTooLarge("trace drifted by " + std::to_string(tr - 1.0));
    rho /= tr;
    if ((s + 1) % stride == 0 || s + 1 == n_steps) record((s + 1) * h);
  }
  return traj;
}

// basis-state helpers
inline Eigen::VectorXcd basis_state(const SystemModel& model,
                                    const std::vector<int>& qubit_levels,
                                    int n_res = 0) {
  const int nq = static_cast<int>(model.qubits.size());
  if (static_cast<int>(qubit_levels.size()) != nq)
    throw std::invalid_argument("basis_state: level list size mismatch");
  int idx = 0;
  for (int q = 0; q < nq; ++q) idx = idx * model.levels + qubit_levels[q];
  idx = idx * (model.n_max + 1) + n_res;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(model.dim());
  psi(idx) = 1.0;
  return psi;
}

// ---------------------------------------------------------------------------
// Chevron scan: population-transfer grid over (omega_f, t) plus a
// sin^2-rate fit at the resonance center.
// ---------------------------------------------------------------------------
struct ChevronResult {
  std::vector<double> omega_fs;             // rad/ns
  std::vector<double> times;                // ns
  std::vector<std::vector<double>> p_target;  // [omega_f][time]
  int center_index = 0;
  double fitted_rate = 0.0;       // rad/ns (P = A sin^2(g t) + B)
  double rate_uncertainty = 0.0;  // 1.96 sigma
  double r_squared = 0.0;
};

namespace detail {

struct SinSqFit {
  double rate, a, b, sse, r2;
};

inline SinSqFit fit_sin_squared(const std::vector<double>& t,
                                const std::vector<double>& p, double g) {
  // linear LS for A, B given g
  double sxx = 0, sx = 0, sxy = 0, sy = 0, syy = 0;
  int n = static_cast<int>(t.size());
  for (int i = 0; i < n; ++i) {
    double x = std::sin(g * t[i]);
    x *= x;
    sxx += x * x;
    sx += x;
    sxy += x * p[i];
    sy += p[i];
    syy += p[i] * p[i];
  }
  double det = sxx * n - sx * sx;
  SinSqFit f{};
  f.rate = g;
  if (std::abs(det) < 1e-30) {
    f.a = 0;
    f.b = sy / n;
  } else {
    f.a = (sxy * n - sx * sy) / det;
    f.b = (sxx * sy - sx * sxy) / det;
  }
  f.sse = 0;
  for (int i = 0; i < n; ++i) {
    double x = std::sin(g * t[i]);
    double r = p[i] - (f.a * x * x + f.b);
    f.sse += r * r;
  }
  double mean = sy / n;
  double sst = syy - n * mean * mean;
  f.r2 = sst > 1e-30 ? 1.0 - f.sse / sst : 0.0;
  return f;
}

inline SinSqFit best_sin_squared(const std::vector<double>& t,
                                 const std::vector<double>& p) {
  double t_final = t.back();
  // coarse scan over rates: between a fraction of a period and the Nyquist
  // limit of the sampling
  double g_lo = 0.3 * pi / (2.0 * t_final);
  double g_hi = 0.5 * pi * t.size() / (2.0 * t_final);
  SinSqFit best{};
  best.sse = 1e300;
  int n_scan = 4000;
  for (int i = 0; i <= n_scan; ++i) {
    double g = g_lo * std::pow(g_hi / g_lo, double(i) / n_scan);
    auto f = fit_sin_squared(t, p, g);
    if (f.sse < best.sse) best = f;
  }
  auto sse_of = [&](double g) { return fit_sin_squared(t, p, g).sse; };
  double g_ref = golden_min(sse_of, best.rate * 0.97, best.rate * 1.03, 1e-10);
  return fit_sin_squared(t, p, g_ref);
}

}  // namespace detail

// Scan the drive frequency, evolving |1_i, 0_j, vac> and recording the
// excited population of qubit j on a time grid. The resonance center is the
// omega_f with the largest transfer amplitude; the exchange rate comes from
// the sin^2 fit there.
inline ChevronResult chevron_scan(SystemModel model, int qubit_i, int qubit_j,
                                  const std::vector<double>& omega_fs,
                                  double t_final, int n_t, double dt = 0.0) {
  if (model.drives.empty())
    throw std::invalid_argument("chevron_scan: model has no drives");
  ChevronResult res;
  res.omega_fs = omega_fs;

  std::vector<int> init(model.qubits.size(), 0);
  init[qubit_i] = 1;
  Eigen::VectorXcd psi0 = basis_state(model, init, 0);

  double best_amp = -1.0;
  for (size_t k = 0; k < omega_fs.size(); ++k) {
    for (auto& d : model.drives) d.omega_f = omega_fs[k];
    Trajectory traj = evolve_schrodinger(model, psi0, t_final, dt, n_t);
    std::vector<double> pj;
    for (const auto& pops : traj.qubit_pop) pj.push_back(pops[qubit_j]);
    if (k == 0) res.times = traj.times;
    res.p_target.push_back(pj);
    double amp = *std::max_element(pj.begin(), pj.end()) -
                 *std::min_element(pj.begin(), pj.end());
    if (amp > best_amp) {
      best_amp = amp;
      res.center_index = static_cast<int>(k);
    }
  }

  auto fit = detail::best_sin_squared(res.times, res.p_target[res.center_index]);
  res.fitted_rate = fit.rate;
  res.r_squared = fit.r2;
  if (fit.r2 < 0.9)
    throw FitPoor("sin^2 fit R^2 = " + std::to_string(fit.r2) +
                  " at chevron center");
  // 1.96-sigma from the SSE curvature in g
  int n = static_cast<int>(res.times.size());
  double dg = std::max(1e-6 * fit.rate, 1e-9);
  double s_plus = detail::fit_sin_squared(res.times, res.p_target[res.center_index], fit.rate + dg).sse;
  double s_minus = detail::fit_sin_squared(res.times, res.p_target[res.center_index], fit.rate - dg).sse;
  double curv = (s_plus - 2.0 * fit.sse + s_minus) / (dg * dg);
  if (curv > 0 && n > 3) {
    double var = 2.0 * (fit.sse / (n - 3)) / curv;
    res.rate_uncertainty = 1.96 * std::sqrt(std::max(0.0, var));
  }
  return res;
}

// Sequential pairwise hops: per segment the drive frequency targets one
// pair's detuning; every qubit stays coupled to the bus throughout, so
// off-resonant leakage is part of the simulation.
struct RoutingSegment {
  std::vector<DriveTerm> drives;  // one per qubit
  double duration = 0.0;          // ns
};

struct RoutingTimeline {
  std::vector<double> times;
  std::vector<std::vector<double>> qubit_pop;
};

inline RoutingTimeline photon_routing_demo(SystemModel model,
                                           const Eigen::VectorXcd& psi0,
                                           const std::vector<RoutingSegment>& seq,
                                           double dt = 0.0,
                                           int samples_per_segment = 60) {
  RoutingTimeline tl;
  Eigen::VectorXcd psi = psi0;
  double t_offset = 0.0;
  for (const auto& seg : seq) {
    model.drives = seg.drives;
    if (seg.duration <= 0.0) {
      continue;
    }
    Trajectory traj = evolve_schrodinger(model, psi, seg.duration, dt,
                                         samples_per_segment, true);
    for (size_t s = 0; s < traj.times.size(); ++s) {
      tl.times.push_back(t_offset + traj.times[s]);
      tl.qubit_pop.push_back(traj.qubit_pop[s]);
    }
    psi = traj.states.back();
    t_offset += seg.duration;
  }
  if (tl.times.empty()) {
    // zero-duration sequence: report the initial populations
    auto ops = detail::build_operators(model);
    std::vector<double> pops(model.qubits.size());
    for (size_t q = 0; q < model.qubits.size(); ++q)
      pops[q] = std::real(psi.dot(ops.num_q[q] * psi));
    tl.times.push_back(0.0);
    tl.qubit_pop.push_back(pops);
  }
  return tl;
}

}  // namespace fluxbus
