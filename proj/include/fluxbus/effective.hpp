#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>

#include "fluxbus/circuit.hpp"
#include "fluxbus/errors.hpp"
#include "fluxbus/units.hpp"

// Analytic effective dynamics: time-dependent Schrieffer-Wolff generator
// coefficients, the block-diagonal second-order Hamiltonian, the effective
// qubit-qubit exchange rate, the perturbative ZZ rate, and the multi-mode
// photonics coupling model.

namespace fluxbus {

struct QubitParams {
  int index = 1;        // 1-based qubit label
  double omega_q = 0.0; // qubit frequency, rad/ns
  double alpha = 0.0;   // anharmonicity (positive as tabulated), rad/ns
  double x = 0.0;       // position along the bus, m (center = 0)
  double g0 = 0.0;      // bare qubit-bus coupling at F = 0, rad/ns
  std::optional<double> dist;  // distance to the nearer boundary, m
  std::optional<double> t1, t2r, t2e;  // coherence times, ns

  double dist_or(double length) const {
    return dist ? *dist : 0.5 * length - std::abs(x);
  }

  void validate() const {
    if (!(omega_q > 0.0) || !(g0 > 0.0))
      throw std::invalid_argument("QubitParams: omega_q, g0 must be positive");
    if (!(g0 < omega_q / 50.0))
      throw std::invalid_argument("QubitParams: dispersive sanity g0 < omega_q/50");
  }
};

// time-periodic coupling g(t) = g0 [ gbar0 + 2 gbar cos(omega t + phi) ];
// the boundary-modulation pipeline produces a sin(omega_f t) harmonic,
// i.e. phi = -pi/2.
struct CouplingTone {
  double g0 = 0.0;
  double g_bar0 = 1.0;
  double g_bar = 0.0;
  double omega = 0.0;
  double phi = -0.5 * pi;

  double value(double t) const {
    return g0 * (g_bar0 + 2.0 * g_bar * std::cos(omega * t + phi));
  }
};

namespace detail {

inline void check_dispersive(double delta, double sigma, double omega,
                             double g0) {
  auto margin = [&](double x) { return std::abs(x) > 10.0 * g0; };
  if (!margin(delta) || !margin(sigma) || !margin(delta - omega) ||
      !margin(delta + omega) || !margin(sigma - omega) || !margin(sigma + omega))
    throw ResonantDenominator(
        "SWT denominator within 10 g0 of zero (delta=" +
        std::to_string(radns_to_mhz(delta)) + " MHz, omega=" +
        std::to_string(radns_to_mhz(omega)) + " MHz)");
}

}  // namespace detail

struct SwtCoefficients {
  std::complex<double> c, d;
  double delta = 0.0, sigma = 0.0;
};

// Closed-form generator coefficients for the time-periodic coupling,
// integrating c' = -i Delta c + i g(t), d' = -i Sigma d - i g(t) from the
// static-SWT initial values c(0) = g0 gbar0 / Delta, d(0) = -g0 gbar0 / Sigma.
inline SwtCoefficients swt_coefficients(const QubitParams& q, double omega_r,
                                        const CouplingTone& tone, double t) {
  using cplx = std::complex<double>;
  const cplx I(0.0, 1.0);
  double delta = q.omega_q - omega_r;
  double sigma = q.omega_q + omega_r;
  detail::check_dispersive(delta, sigma, tone.omega, tone.g0);

  double gs = tone.g0 * tone.g_bar0;
  double gc = 2.0 * tone.g0 * tone.g_bar;
  double w = tone.omega, phi = tone.phi;

  double dd = (delta - w) * (delta + w);
  double ds = (sigma - w) * (sigma + w);

  SwtCoefficients out;
  out.delta = delta;
  out.sigma = sigma;
  out.c = gs / delta +
          (gc / dd) * (delta * std::cos(w * t + phi) -
                       I * w * std::sin(w * t + phi) -
                       std::exp(-I * delta * t) *
                           (delta * std::cos(phi) - I * w * std::sin(phi)));
  out.d = -gs / sigma +
          (gc / ds) * (-sigma * std::cos(w * t + phi) +
                       I * w * std::sin(w * t + phi) +
                       std::exp(-I * sigma * t) *
                           (sigma * std::cos(phi) - I * w * std::sin(phi)));
  return out;
}

// Effective exchange rate between two qubits sharing the driven bus when
// the modulation frequency matches their (renormalized) detuning:
//   g12 = g01 g02 [ gbar0_1 gbar2 (1/D1 - 1/S1) + gbar0_2 gbar1 (1/D2 - 1/S2) ]
// The constant is fixed by time-averaging the second-order exchange term
// over a drive period with g_i(t) = g0_i (gbar0_i + 2 gbar_i sin wt); the
// brute-force evolution reproduces it to a fraction of a percent.
inline double effective_g12(const QubitParams& q1, const QubitParams& q2,
                            double omega_r, double g_bar1, double g_bar2,
                            double g_bar0_1 = 1.0, double g_bar0_2 = 1.0) {
  double d1 = q1.omega_q - omega_r, s1 = q1.omega_q + omega_r;
  double d2 = q2.omega_q - omega_r, s2 = q2.omega_q + omega_r;
  detail::check_dispersive(d1, s1, 0.0, q1.g0);
  detail::check_dispersive(d2, s2, 0.0, q2.g0);
  return q1.g0 * q2.g0 *
         (g_bar0_1 * g_bar2 * (1.0 / d1 - 1.0 / s1) +
          g_bar0_2 * g_bar1 * (1.0 / d2 - 1.0 / s2));
}

// Second-order block-diagonal Hamiltonian terms, evaluated from the
// generator coefficients at time t. Conventions: stark[i] multiplies
// a'a sigma_z_i, lamb[i] is the addition to omega_i inside
// (1/2) sigma_z_i (omega_i + lamb), squeezing[i] multiplies (a')^2
// sigma_z_i (+ h.c.), exchange_g12 multiplies sigma_1- sigma_2+ (+ h.c.)
// and two_photon multiplies sigma_1+ sigma_2+ (+ h.c.).
struct EffectiveHamiltonianTerms {
  std::array<double, 2> stark{};
  std::array<double, 2> lamb{};
  double energy_offset = 0.0;
  std::array<std::complex<double>, 2> squeezing{};
  std::complex<double> exchange_g12{};
  std::complex<double> two_photon{};
};

inline EffectiveHamiltonianTerms transformed_hamiltonian(
    const QubitParams& q1, const QubitParams& q2, double omega_r,
    const CouplingTone& tone1, const CouplingTone& tone2, double t) {
  auto s1 = swt_coefficients(q1, omega_r, tone1, t);
  auto s2 = swt_coefficients(q2, omega_r, tone2, t);
  double g1 = tone1.value(t), g2 = tone2.value(t);

  EffectiveHamiltonianTerms h;
  h.stark[0] = g1 * (s1.c - s1.d).real();
  h.stark[1] = g2 * (s2.c - s2.d).real();
  h.lamb[0] = g1 * (s1.c - s1.d).real();
  h.lamb[1] = g2 * (s2.c - s2.d).real();
  h.energy_offset = 0.5 * (g1 * (s1.c + s1.d).real() + g2 * (s2.c + s2.d).real());
  h.squeezing[0] = -0.5 * g1 * (std::conj(s1.c) - s1.d);
  h.squeezing[1] = -0.5 * g2 * (std::conj(s2.c) - s2.d);
  h.exchange_g12 = 0.5 * (g1 * (s2.c + s2.d) + g2 * std::conj(s1.c + s1.d));
  h.two_photon = -0.5 * (g1 * (s2.c + s2.d) + g2 * (s1.c + s1.d));
  return h;
}

// Perturbative ZZ rate between two transmons with exchange coupling g:
//   zeta = 2 g^2 [ 1/(Delta - alpha_i) - 1/(Delta + alpha_j) ]
// with Delta = omega_i - omega_j and alpha > 0 as tabulated.
inline double zz_perturbative(double g, double delta, double alpha_i,
                              double alpha_j) {
  if (!(std::abs(delta - alpha_i) > 10.0 * std::abs(g)) ||
      !(std::abs(delta + alpha_j) > 10.0 * std::abs(g)))
    throw ResonantDenominator("ZZ denominators within 10 g of a two-photon resonance");
  return 2.0 * g * g * (1.0 / (delta - alpha_i) - 1.0 / (delta + alpha_j));
}

// ---------------------------------------------------------------------------
// Multi-mode photonics model: round-trip phases and flux-dependent couplings.
// ---------------------------------------------------------------------------
struct MultimodeCoupling {
  std::array<double, 2> g0_f{};  // g0_i(F), rad/ns
  double g12 = 0.0;              // bus-mediated qubit-qubit coupling, rad/ns
  std::array<double, 2> phi{};   // qubit round-trip phases
  std::array<double, 2> theta{}; // end-to-end phases
};

inline MultimodeCoupling multimode_coupling(const QubitParams& q1,
                                            const QubitParams& q2,
                                            const BusCircuitParams& p, double f,
                                            double omega_r) {
  double varphi = reflection_phase(p, f, omega_r);
  MultimodeCoupling out;
  const QubitParams* qs[2] = {&q1, &q2};
  for (int k = 0; k < 2; ++k) {
    const QubitParams& q = *qs[k];
    double d = q.dist_or(p.length);
    out.phi[k] = q.omega_q * 2.0 * d / p.v + varphi;
    out.theta[k] = q.omega_q * p.length / p.v + varphi;
    if (std::abs(std::sin(out.theta[k])) < 1e-6)
      throw SinThetaSingular("qubit " + std::to_string(q.index) +
                             " resonant with a bus mode (sin theta ~ 0)");
    out.g0_f[k] = q.g0 * std::cos(0.5 * out.phi[k]);
  }
  out.g12 = 0.5 * std::sqrt(q1.g0 * q2.g0) * std::cos(0.5 * out.phi[0]) *
            std::cos(0.5 * out.phi[1]) *
            (1.0 / std::sin(out.theta[0]) + 1.0 / std::sin(out.theta[1]));
  return out;
}

// Self-consistent mode frequency of the multi-mode model: the n-th mode
// satisfies w l / v + phi(F, w) = n pi.
inline double multimode_mode_frequency(const BusCircuitParams& p, double f,
                                       int n) {
  double w = n * pi * p.v / p.length;
  for (int it = 0; it < 50; ++it) {
    double w_new = (n * pi - reflection_phase(p, f, w)) * p.v / p.length;
    if (std::abs(w_new - w) < 1e-12 * w) return w_new;
    w = w_new;
  }
  return w;
}

}  // namespace fluxbus
