#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <complex>
#include <vector>

#include "fluxbus/circuit.hpp"
#include "fluxbus/errors.hpp"
#include "fluxbus/numerics.hpp"
#include "fluxbus/units.hpp"

// Fourier-space theory of the boundary-modulated bus. The periodic flux
// drive f(t) = F + df sin(w_f t + psi) mixes field components separated by
// w_f; truncating at N sidebands per side gives the boundary matrix
//
//   [M_{s,z}]_{mp} = [(-alpha w_p^2 + s z eta l k_p i) delta_mp
//                     + (e^{iF} + (-1)^{m-p} e^{-iF}) J_{p-m}(df)
//                       e^{z i psi0 (p-m)/2}] e^{s z w_p l i / (2v)}
//
// with w_p = w_r + p w_f, s = boundary, z = travel direction. For in-phase
// drives (psi0 = 0) the basis rotation Sigma = L(i^-n) M_{+,+} L(i^n)
// decouples the spatially even/odd subspaces into Sigma +/- Sigma^*, whose
// null directions at det = 0 are the driven mode and its sideband weights.

namespace fluxbus {

enum class Parity { symmetric, antisymmetric };

struct ModulationDrive {
  double f_static;  // common static reduced flux F, rad
  double delta_f;   // modulation amplitude df, rad
  double omega_f;   // modulation angular frequency, rad/ns
  double psi_0;     // relative phase between the boundary drives, rad

  ModulationDrive(double f, double df, double wf, double psi = 0.0)
      : f_static(FluxBias::wrap(f)), delta_f(df), omega_f(wf),
        psi_0(wrap_angle(psi)) {
    if (!(delta_f >= 0.0)) throw std::invalid_argument("ModulationDrive: delta_f >= 0");
    if (!(omega_f > 0.0)) throw std::invalid_argument("ModulationDrive: omega_f > 0");
  }
};

struct SidebandSolution {
  double omega_r = 0.0;          // driven resonance, rad/ns
  Eigen::VectorXcd amplitudes;   // 2N+1 entries, index i <-> sideband m = i - N
  Parity parity = Parity::antisymmetric;
  int truncation = 0;            // N
  double norm_energy = 1.0;      // scale applied by normalize_energy
  double omega_undriven = 0.0;   // reference DC mode used for normalization

  std::complex<double> amp(int m) const { return amplitudes(m + truncation); }
};

// The driven matrix elements carry the static Josephson term through
// cos(F). With SQUID asymmetry the static term is E_J(F)/e_j_sum, so the
// drive matrices are built at the effective flux F_eff = acos(E_J(F)/E_J),
// which reproduces the asymmetric DC spectrum in the df -> 0 limit and is
// the identity map for asym = 0.
inline double effective_static_flux(const BusCircuitParams& p, double f) {
  double r = effective_josephson_energy(p, f) / p.e_j_sum;
  return std::acos(std::min(1.0, std::max(-1.0, r)));
}

inline Eigen::MatrixXcd build_m_submatrix(const BusCircuitParams& p,
                                          const ModulationDrive& drive,
                                          double omega_probe, int s, int z,
                                          int N) {
  if (N < 1) throw std::invalid_argument("build_m_submatrix: N >= 1");
  if (!(s == 1 || s == -1) || !(z == 1 || z == -1))
    throw std::invalid_argument("build_m_submatrix: s, z in {+1, -1}");
  using cplx = std::complex<double>;
  const cplx I(0.0, 1.0);
  const int dim = 2 * N + 1;
  const double f_eff = effective_static_flux(p, drive.f_static);
  const double alpha = p.alpha();
  const double eta_l = p.eta() * p.length;
  const cplx eip = std::exp(I * f_eff);
  const cplx eim = std::exp(-I * f_eff);

  Eigen::MatrixXcd m(dim, dim);
  for (int pj = -N; pj <= N; ++pj) {
    double wp = omega_probe + pj * drive.omega_f;
    double kp = wp / p.v;
    cplx phase = std::exp(cplx(0.0, s * z * wp * p.length / (2.0 * p.v)));
    for (int mi = -N; mi <= N; ++mi) {
      int dmp = pj - mi;
      cplx val = (eip + ((dmp % 2 == 0) ? 1.0 : -1.0) * eim) *
                 bessel_j(dmp, drive.delta_f) *
                 std::exp(cplx(0.0, z * 0.5 * drive.psi_0 * dmp));
      if (mi == pj) val += cplx(-alpha * wp * wp, s * z * eta_l * kp);
      m(mi + N, pj + N) = val * phase;
    }
  }
  return m;
}

// Sigma = L({e^{-i pi n/2}}) M_{+,+} L({e^{i pi n/2}})
inline Eigen::MatrixXcd build_sigma(const BusCircuitParams& p,
                                    const ModulationDrive& drive,
                                    double omega_probe, int N) {
  Eigen::MatrixXcd m = build_m_submatrix(p, drive, omega_probe, +1, +1, N);
  using cplx = std::complex<double>;
  const cplx I(0.0, 1.0);
  for (int mi = -N; mi <= N; ++mi)
    for (int pj = -N; pj <= N; ++pj)
      m(mi + N, pj + N) *= std::exp(I * (0.5 * pi) * double(pj - mi));
  return m;
}

// Full untransformed 2(2N+1) system; row blocks are the two boundary
// conditions, column blocks act on (Phi_+, Phi_-).
inline Eigen::MatrixXcd assemble_full_m(const BusCircuitParams& p,
                                        const ModulationDrive& drive,
                                        double omega_probe, int N) {
  const int dim = 2 * N + 1;
  Eigen::MatrixXcd full(2 * dim, 2 * dim);
  full.block(0, 0, dim, dim) = build_m_submatrix(p, drive, omega_probe, +1, +1, N);
  full.block(0, dim, dim, dim) = build_m_submatrix(p, drive, omega_probe, +1, -1, N);
  full.block(dim, 0, dim, dim) = build_m_submatrix(p, drive, omega_probe, -1, +1, N);
  full.block(dim, dim, dim, dim) = build_m_submatrix(p, drive, omega_probe, -1, -1, N);
  return full;
}

// Real representation of the decoupled parity blocks: Sigma + Sigma^* is
// real, Sigma - Sigma^* is i times a real matrix.
inline Eigen::MatrixXd parity_block(const BusCircuitParams& p,
                                    const ModulationDrive& drive,
                                    double omega_probe, int N, Parity parity) {
  Eigen::MatrixXcd sig = build_sigma(p, drive, omega_probe, N);
  if (parity == Parity::symmetric)
    return (sig + sig.conjugate()).real();
  return (sig - sig.conjugate()).imag();
}

// Diagonal rescaling Q that makes the parity blocks transpose symmetric:
// column p is divided by cos(theta_p) (symmetric) or sin(theta_p)
// (antisymmetric) with theta_p = w_p l / (2 v).
inline Eigen::MatrixXcd transpose_symmetrized_block(const BusCircuitParams& p,
                                                    const ModulationDrive& drive,
                                                    double omega_probe, int N,
                                                    Parity parity) {
  Eigen::MatrixXcd sig = build_sigma(p, drive, omega_probe, N);
  Eigen::MatrixXcd block = (parity == Parity::symmetric)
                               ? Eigen::MatrixXcd(sig + sig.conjugate())
                               : Eigen::MatrixXcd(sig - sig.conjugate());
  for (int pj = -N; pj <= N; ++pj) {
    double theta = (omega_probe + pj * drive.omega_f) * p.length / (2.0 * p.v);
    double q = (parity == Parity::symmetric) ? std::cos(theta) : std::sin(theta);
    block.col(pj + N) /= q;
  }
  return block;
}

namespace detail {

struct ResonanceCandidate {
  double omega;
  double sigma_ratio;     // smallest/largest singular value
  double central_weight;  // |central band| of the null direction
};

inline double scaled_real_det(const Eigen::MatrixXd& a) {
  double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  Eigen::MatrixXd b = a / scale;
  return Eigen::PartialPivLU<Eigen::MatrixXd>(b).determinant();
}

// refuse drives that couple sideband ladders of two different bus modes
inline void check_sideband_collision(const BusCircuitParams& p,
                                     const ModulationDrive& drive,
                                     double omega_max) {
  double fsr_est = pi * p.v / p.length;
  int n_modes = static_cast<int>(std::ceil(omega_max / fsr_est)) + 2;
  FluxBias bias(drive.f_static, drive.f_static);
  ModeSpectrum spec = dc_mode_frequencies(p, bias, n_modes);
  for (size_t a = 0; a < spec.modes.size(); ++a)
    for (size_t b = a + 1; b < spec.modes.size(); ++b) {
      double sep = spec.modes[b].omega - spec.modes[a].omega;
      double q = std::round(sep / drive.omega_f);
      if (q >= 1.0 && std::abs(sep - q * drive.omega_f) < 1e-6 * sep)
        throw DegenerateSidebandCollision(
            "modes " + std::to_string(spec.modes[a].n) + " and " +
            std::to_string(spec.modes[b].n) + " separated by " +
            std::to_string(static_cast<int>(q)) + " x omega_f");
    }
}

}  // namespace detail

// Locate the driven resonance near omega_guess: the omega where the parity
// block drops rank. The determinant of the real block representation is
// tracked for sign changes on a grid and refined with Brent; every zero in
// the window is a copy of some resonance seen through a shifted sideband
// index, so the physical root is the one whose null direction has the
// largest central-band weight (ties broken toward the guess). A root only
// counts if smallest/largest singular value < 1e-8.
inline double find_driven_resonance(const BusCircuitParams& p,
                                    const ModulationDrive& drive,
                                    double omega_guess, Parity parity, int N,
                                    double window_halfwidth = 0.0) {
  p.validate();
  double fsr_est = pi * p.v / p.length;
  double w = window_halfwidth > 0.0 ? window_halfwidth : 0.5 * fsr_est;
  detail::check_sideband_collision(p, drive, omega_guess + w + (N + 1) * drive.omega_f);

  const bool in_phase = std::abs(drive.psi_0) < 1e-12;
  const double lo = omega_guess - w, hi = omega_guess + w;
  const int grid_n = 600;

  std::vector<detail::ResonanceCandidate> cands;

  auto evaluate_candidate = [&](double omega) {
    detail::ResonanceCandidate c;
    c.omega = omega;
    if (in_phase) {
      Eigen::MatrixXd blk = parity_block(p, drive, omega, N, parity);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(blk, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      c.sigma_ratio = sv(sv.size() - 1) / sv(0);
      c.central_weight = std::abs(svd.matrixV()(N, sv.size() - 1));
    } else {
      Eigen::MatrixXcd full = assemble_full_m(p, drive, omega, N);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(full, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      c.sigma_ratio = sv(sv.size() - 1) / sv(0);
      int dim = 2 * N + 1;
      auto v = svd.matrixV().col(sv.size() - 1);
      c.central_weight = std::sqrt(std::norm(v(N)) + std::norm(v(dim + N)));
    }
    return c;
  };

  if (in_phase) {
    auto det_at = [&](double omega) {
      return detail::scaled_real_det(parity_block(p, drive, omega, N, parity));
    };
    double prev_w = lo, prev_d = det_at(lo);
    for (int i = 1; i <= grid_n; ++i) {
      double om = lo + (hi - lo) * i / grid_n;
      double d = det_at(om);
      if (prev_d == 0.0) {
        cands.push_back(evaluate_candidate(prev_w));
      } else if (prev_d * d < 0.0) {
        double root = brent_root(det_at, prev_w, om, 1e-12);
        cands.push_back(evaluate_candidate(root));
      }
      prev_w = om;
      prev_d = d;
    }
  } else {
    // no sign structure for the complex system; minimize sigma_min locally
    std::vector<double> sig(grid_n + 1);
    for (int i = 0; i <= grid_n; ++i) {
      double om = lo + (hi - lo) * i / grid_n;
      Eigen::MatrixXcd full = assemble_full_m(p, drive, om, N);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(full);
      sig[i] = svd.singularValues()(svd.singularValues().size() - 1);
    }
    for (int i = 1; i < grid_n; ++i) {
      if (sig[i] <= sig[i - 1] && sig[i] <= sig[i + 1]) {
        double a = lo + (hi - lo) * (i - 1) / grid_n;
        double b = lo + (hi - lo) * (i + 1) / grid_n;
        auto smin = [&](double om) {
          Eigen::MatrixXcd full = assemble_full_m(p, drive, om, N);
          Eigen::JacobiSVD<Eigen::MatrixXcd> svd(full);
          return svd.singularValues()(svd.singularValues().size() - 1);
        };
        cands.push_back(evaluate_candidate(golden_min(smin, a, b, 1e-11)));
      }
    }
  }

  const detail::ResonanceCandidate* best = nullptr;
  for (const auto& c : cands) {
    if (c.sigma_ratio > 1e-8) continue;
    if (!best || c.central_weight > best->central_weight + 1e-12 ||
        (std::abs(c.central_weight - best->central_weight) <= 1e-12 &&
         std::abs(c.omega - omega_guess) < std::abs(best->omega - omega_guess)))
      best = &c;
  }
  if (!best)
    throw NoResonanceInWindow(
        "no singular point below 1e-8 relative within +-" +
        std::to_string(radns_to_ghz(w)) + " GHz of " +
        std::to_string(radns_to_ghz(omega_guess)) + " GHz");
  return best->omega;
}

// Null direction of the parity block at the driven resonance, phase-fixed
// so the central band is real and positive. Requires a one-dimensional null
// space: second-smallest singular value > 1e3 x smallest.
inline SidebandSolution sideband_amplitudes(const BusCircuitParams& p,
                                            const ModulationDrive& drive,
                                            double omega_r, Parity parity,
                                            int N) {
  const int dim = 2 * N + 1;
  SidebandSolution sol;
  sol.omega_r = omega_r;
  sol.parity = parity;
  sol.truncation = N;

  Eigen::VectorXcd vec(dim);
  if (std::abs(drive.psi_0) < 1e-12) {
    Eigen::MatrixXd blk = parity_block(p, drive, omega_r, N, parity);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(blk, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(dim - 2) > 1e3 * sv(dim - 1)))
      throw NullSpaceDegenerate(
          "singular value gap " + std::to_string(sv(dim - 2) / sv(dim - 1)) +
          " < 1e3; null space not one-dimensional");
    vec = svd.matrixV().col(dim - 1).cast<std::complex<double>>();
  } else {
    Eigen::MatrixXcd full = assemble_full_m(p, drive, omega_r, N);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(full, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(2 * dim - 2) > 1e3 * sv(2 * dim - 1)))
      throw NullSpaceDegenerate("full-system null space not one-dimensional");
    Eigen::VectorXcd null_vec = svd.matrixV().col(2 * dim - 1);
    // Phi~ = L(i^{-n}) (Phi_+ -+ Phi_-)/sqrt(2), picking the requested parity
    const std::complex<double> I(0.0, 1.0);
    for (int m = -N; m <= N; ++m) {
      std::complex<double> plus = null_vec(m + N);
      std::complex<double> minus = null_vec(dim + m + N);
      std::complex<double> comb = (parity == Parity::symmetric)
                                      ? (plus + minus) : (plus - minus);
      vec(m + N) = std::exp(-I * (0.5 * pi) * double(m)) * comb / std::sqrt(2.0);
    }
  }

  std::complex<double> center = vec(N);
  if (std::abs(center) < 1e-9 * vec.norm())
    throw NullSpaceDegenerate("central band amplitude vanishes at omega_r");
  vec *= std::conj(center) / std::abs(center);  // center real...
  if (vec(N).real() < 0.0) vec = -vec;          // ...and positive
  sol.amplitudes = vec;
  return sol;
}

// Rescale so the zero-point field energy matches the undriven mode:
//   sum_m w_m^2 |phi_m|^2 [1 + (-1)^m sin(w_m l / v)]
//     = w_0r^2 |phi_in0|^2 [1 + sin(w_0r l / v)]
// with the undriven central amplitude fixed to phi_in0 = 1. The same
// weight on both sides makes df = 0 an exact no-op.
inline SidebandSolution normalize_energy(SidebandSolution sol,
                                         const BusCircuitParams& p,
                                         const ModulationDrive& drive,
                                         double omega_0r) {
  const int N = sol.truncation;
  auto weight = [&](int m, double wm) {
    double sgn = (std::abs(m) % 2 == 0) ? 1.0 : -1.0;
    return 1.0 + sgn * std::sin(wm * p.length / p.v);
  };
  double e_mod = 0.0;
  for (int m = -N; m <= N; ++m) {
    double wm = sol.omega_r + m * drive.omega_f;
    e_mod += wm * wm * std::norm(sol.amp(m)) * weight(m, wm);
  }
  double e_ref = omega_0r * omega_0r * weight(0, omega_0r);
  double scale = std::sqrt(e_ref / e_mod);
  sol.amplitudes *= scale;
  sol.norm_energy = scale;
  sol.omega_undriven = omega_0r;
  return sol;
}

// Parametric qubit-bus coupling from the energy-normalized sideband vector.
// The first-order sidebands produce the coupling harmonic
//   g_i(t) = g0_i [ gbar0_i + 2 gbar_i sin(w_f t) ],
// whose half-amplitude gbar_i is read off the +-1 sideband pair; the
// central band gives the static renormalization gbar0_i.
struct ParametricCoupling {
  double g_bar;         // dimensionless half-amplitude of the drive harmonic
  double g_par;         // g_bar * g0, rad/ns
  double g_bar_static;  // renormalized static coupling factor (~1)
};

inline ParametricCoupling parametric_coupling(const BusCircuitParams& p,
                                              const SidebandSolution& sol,
                                              double x_i, double g0,
                                              double omega_f,
                                              int qubit_index = 1) {
  const int N = sol.truncation;
  if (N < 1) throw std::invalid_argument("parametric_coupling: need N >= 1");
  // half-amplitude of the coupling harmonic: (amp(+1) - amp(-1))/2 in the
  // rotated basis, against the undriven reference amplitude 1; sign fixed
  // so gbar > 0 for odd qubit indices at small omega_f
  double core = -0.5 * (sol.amp(+1) - sol.amp(-1)).real();
  double sign = (qubit_index % 2 == 1) ? 1.0 : -1.0;
  ParametricCoupling out;
  out.g_bar = sign * core * std::cos(omega_f * x_i / p.v);
  out.g_par = out.g_bar * g0;
  double w0 = sol.omega_undriven > 0.0 ? sol.omega_undriven : sol.omega_r;
  out.g_bar_static = (sol.omega_r / w0) * sol.amp(0).real();
  return out;
}

}  // namespace fluxbus
