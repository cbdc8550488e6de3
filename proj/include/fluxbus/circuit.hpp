#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "fluxbus/errors.hpp"
#include "fluxbus/numerics.hpp"
#include "fluxbus/units.hpp"

// Static circuit model of the SQUID-terminated multimode bus: DC mode
// spectrum from the boundary eigenvalue condition
//
//   lambda_k(F-) + lambda_k(F+) = [lambda_k(F-) lambda_k(F+) - 1] tan(k l)
//
// with lambda_k(F) = [(k v)^2 / E_C - 2 E_J(F)] / (E_L k l), plus the
// boundary reflection phase used by the multi-mode coupling model, and a
// derivative-free fit of the circuit parameters to spectrum samples.

namespace fluxbus {

struct BusCircuitParams {
  double e_c;      // boundary junction charging energy E_C, rad/ns
  double e_j_sum;  // SQUID Josephson energy E_J, rad/ns
  double e_l0;     // bulk inductive energy E_L, rad/ns
  double v;        // speed of light in the bulk CPW, m/ns
  double length;   // bus length l, m
  double asym;     // SQUID junction asymmetry d, dimensionless

  // junction plasma frequency sqrt(2 E_C E_J), rad/ns
  double omega_j() const { return std::sqrt(2.0 * e_c * e_j_sum); }
  // E_L / E_J
  double eta() const { return e_l0 / e_j_sum; }
  // 2 / omega_j^2, (ns/rad)^2
  double alpha() const { return 2.0 / (2.0 * e_c * e_j_sum); }

  void validate() const {
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(e_c) || !positive(e_j_sum) || !positive(e_l0) ||
        !positive(v) || !positive(length))
      throw std::invalid_argument(
          "BusCircuitParams: e_c, e_j_sum, e_l0, v, length must be positive");
    if (!(asym >= 0.0 && asym < 1.0))
      throw std::invalid_argument("BusCircuitParams: need 0 <= asym < 1");
  }
};

// Reference device parameters (design values of the modeled bus, plus the
// measured SQUID asymmetry). Handy default for tests and demo configs.
inline BusCircuitParams reference_bus_params() {
  BusCircuitParams p;
  p.e_c = ghz_to_radns(9.68);
  p.e_j_sum = ghz_to_radns(397.0);
  p.e_l0 = ghz_to_radns(5.11);
  p.v = mps_to_mpns(0.49 * c_vacuum);
  p.length = 0.1055;
  p.asym = 0.0663;
  return p;
}

struct FluxBias {
  double f_plus;   // reduced flux at the +l/2 boundary, rad
  double f_minus;  // reduced flux at the -l/2 boundary, rad

  // E_J(f) has period pi; wrap to the canonical branch [-pi/2, pi/2]
  static double wrap(double f) {
    if (!std::isfinite(f)) throw std::invalid_argument("FluxBias: non-finite flux");
    double w = f - pi * std::round(f / pi);
    if (w < -0.5 * pi + 1e-15 && f > 0) w = 0.5 * pi;
    return w;
  }

  FluxBias(double fp, double fm) : f_plus(wrap(fp)), f_minus(wrap(fm)) {}
};

struct Mode {
  int n;         // mode index, 1-based
  double omega;  // angular frequency, rad/ns
};

struct ModeSpectrum {
  std::vector<Mode> modes;

  double omega(int n) const {
    for (const auto& m : modes)
      if (m.n == n) return m.omega;
    throw std::out_of_range("ModeSpectrum: no such mode");
  }

  // consecutive spacings must sit within 50% of the median spacing,
  // otherwise the root scan likely skipped a mode
  void check_spacing() const {
    if (modes.size() < 3) return;
    std::vector<double> gaps;
    for (size_t i = 1; i < modes.size(); ++i)
      gaps.push_back(modes[i].omega - modes[i - 1].omega);
    double med = median(gaps);
    for (double g : gaps)
      if (g < 0.5 * med || g > 1.5 * med)
        throw MissedMode("mode spacing " + std::to_string(radns_to_ghz(g)) +
                         " GHz deviates >50% from median " +
                         std::to_string(radns_to_ghz(med)) + " GHz");
  }
};

// Flux-dependent SQUID Josephson energy
//   E_J(f) = e_j_sum |cos f| sqrt(1 + asym^2 tan^2 f)
// evaluated as e_j_sum sqrt(cos^2 f + asym^2 sin^2 f), finite for all f.
inline double effective_josephson_energy(const BusCircuitParams& p, double f) {
  double c = std::cos(f), s = std::sin(f);
  return p.e_j_sum * std::sqrt(c * c + p.asym * p.asym * s * s);
}

inline double lambda_k(const BusCircuitParams& p, double k, double f) {
  if (!(k > 0)) throw std::invalid_argument("lambda_k: need k > 0");
  double kv = k * p.v;
  return (kv * kv / p.e_c - 2.0 * effective_josephson_energy(p, f)) /
         (p.e_l0 * k * p.length);
}

namespace detail {

// Pole-free form of the eigenvalue condition:
//   h(k) = (l- + l+) cos(kl) - (l- l+ - 1) sin(kl),
// same zeros as the tan form but continuous across the tan poles.
inline double dc_characteristic(const BusCircuitParams& p, const FluxBias& b,
                                double k) {
  double lm = lambda_k(p, k, b.f_minus);
  double lp = lambda_k(p, k, b.f_plus);
  double kl = k * p.length;
  return (lm + lp) * std::cos(kl) - (lm * lp - 1.0) * std::sin(kl);
}

}  // namespace detail

// Lowest n_max roots of the boundary eigenvalue condition. Roots are
// bracketed between consecutive tan(kl) poles at kl = (m + 1/2) pi; a short
// interior scan per interval catches roots drifting next to a pole during a
// flux sweep. Brent refinement to 1e-10 relative.
inline ModeSpectrum dc_mode_frequencies(const BusCircuitParams& p,
                                        const FluxBias& bias, int n_max) {
  if (n_max < 1) throw std::invalid_argument("dc_mode_frequencies: n_max >= 1");
  p.validate();

  auto h = [&](double k) { return detail::dc_characteristic(p, bias, k); };

  std::vector<double> roots;
  const double unit = pi / p.length;  // kl = pi
  const int max_intervals = n_max + 12;
  const int scan_pts = 64;

  for (int m = 0; m <= max_intervals && static_cast<int>(roots.size()) < n_max;
       ++m) {
    // interval between poles: kl in ((m - 1/2) pi, (m + 1/2) pi)
    double lo = (m == 0) ? 1e-6 * unit : (m - 0.5 + 1e-9) * unit;
    double hi = (m + 0.5 - 1e-9) * unit;
    double prev_k = lo, prev_h = h(lo);
    for (int i = 1; i <= scan_pts; ++i) {
      double k = lo + (hi - lo) * i / scan_pts;
      double hk = h(k);
      if (prev_h == 0.0) {
        roots.push_back(prev_k);
      } else if (prev_h * hk < 0.0) {
        roots.push_back(brent_root(h, prev_k, k, 1e-12));
      }
      prev_k = k;
      prev_h = hk;
    }
  }

  if (static_cast<int>(roots.size()) < n_max)
    throw RootBracketingFailed(
        "found only " + std::to_string(roots.size()) + " of " +
        std::to_string(n_max) + " requested modes; pathological parameters?");

  std::sort(roots.begin(), roots.end());
  ModeSpectrum spec;
  for (int i = 0; i < n_max; ++i)
    spec.modes.push_back({i + 1, roots[i] * p.v});
  spec.check_spacing();
  return spec;
}

// Boundary reflection phase of the multi-mode photonics model:
//   phi(F) = arg[(1 + i (w/v) L_eff) / (1 - i (w/v) L_eff)],
//   L_eff(F) = L_SQ(F) / L0 = l E_L / E_J(F)   (meters).
// Short boundary (E_J -> inf) gives phi = 0; open gives phi -> pi.
inline double reflection_phase(const BusCircuitParams& p, double f,
                               double omega_r) {
  if (!(omega_r > 0)) throw std::invalid_argument("reflection_phase: omega_r > 0");
  double l_eff = p.length * p.e_l0 / effective_josephson_energy(p, f);
  double x = (omega_r / p.v) * l_eff;
  return 2.0 * std::atan(x);  // = arg[(1+ix)/(1-ix)], in (-pi, pi)
}

// ---------------------------------------------------------------------------
// Least-squares fit of circuit parameters to spectrum samples.
// ---------------------------------------------------------------------------
struct SpectrumSample {
  FluxBias bias;
  int mode_index;
  double omega;  // rad/ns
};

struct FitResult {
  BusCircuitParams params;
  std::vector<double> residuals;  // omega_model - omega_sample, rad/ns
  double rms = 0.0;               // rad/ns
  int iterations = 0;
  bool under_determined = false;
};

// The spectrum is exactly invariant under (e_c, e_j_sum, e_l0) ->
// (e_c/s, s e_j_sum, s e_l0), so only e_c*e_l0, e_j_sum/e_l0, v and asym
// are identifiable. The search runs over those four coordinates
// (Nelder-Mead in logs, asym linear with a wall at [0, 0.95]); e_l0 keeps
// the guess value as the gauge choice and the energies are reconstructed
// around it. Throws FitDiverged if a wide simplex stops improving for 200
// consecutive iterations.
inline FitResult fit_circuit_params(const std::vector<SpectrumSample>& samples,
                                    const BusCircuitParams& guess,
                                    int max_iter = 4000) {
  FitResult out;
  out.params = guess;

  std::vector<int> mode_ids;
  for (const auto& s : samples)
    if (std::find(mode_ids.begin(), mode_ids.end(), s.mode_index) ==
        mode_ids.end())
      mode_ids.push_back(s.mode_index);
  if (samples.size() < 5 || mode_ids.size() < 2) {
    out.under_determined = true;
    return out;
  }
  int top_mode = *std::max_element(mode_ids.begin(), mode_ids.end());

  auto unpack = [&](const std::vector<double>& x) {
    BusCircuitParams p = guess;
    p.e_l0 = guess.e_l0;               // gauge anchor for the flat direction
    p.e_c = std::exp(x[0]) / p.e_l0;   // x0 = log(e_c e_l0)
    p.e_j_sum = std::exp(x[1]) * p.e_l0;  // x1 = log(e_j_sum / e_l0)
    p.v = std::exp(x[2]);
    p.asym = x[3];
    return p;
  };

  // local search: keep the walk inside a trust region around the guess
  // (the capacitance combination e_c*e_l0 has very weak spectral leverage,
  // so an unbounded walk can drift far along it at any noise level)
  const std::vector<double> x_init = {std::log(guess.e_c * guess.e_l0),
                                      std::log(guess.e_j_sum / guess.e_l0),
                                      std::log(guess.v), guess.asym};
  const std::vector<double> trust = {2.0, 2.0, 0.5, 1.0};

  auto objective = [&](const std::vector<double>& x) -> double {
    for (size_t i = 0; i < x.size(); ++i)
      if (std::abs(x[i] - x_init[i]) > trust[i])
        return 1e12 * (1.0 + std::abs(x[i] - x_init[i]));
    BusCircuitParams p = unpack(x);
    if (p.asym < 0.0 || p.asym > 0.95) return 1e12 * (1.0 + std::abs(p.asym));
    double sse = 0.0;
    try {
      // group samples by bias so each spectrum is solved once
      for (size_t i = 0; i < samples.size(); ++i) {
        bool solved_before = false;
        for (size_t j = 0; j < i; ++j)
          if (samples[j].bias.f_plus == samples[i].bias.f_plus &&
              samples[j].bias.f_minus == samples[i].bias.f_minus)
            solved_before = true;
        if (solved_before) continue;
        ModeSpectrum spec = dc_mode_frequencies(p, samples[i].bias, top_mode);
        for (const auto& s : samples)
          if (s.bias.f_plus == samples[i].bias.f_plus &&
              s.bias.f_minus == samples[i].bias.f_minus) {
            double d = spec.omega(s.mode_index) - s.omega;
            sse += d * d;
          }
      }
    } catch (const FluxbusError&) {
      return 1e12;
    }
    return sse;
  };

  auto nm = nelder_mead(objective, x_init, 0.02, 1e-14, max_iter, 200);
  if (nm.stalled && nm.fmin > 1e-16)
    throw FitDiverged("no residual improvement for 200 iterations, sse=" +
                      std::to_string(nm.fmin));

  out.params = unpack(nm.x);
  out.iterations = nm.iterations;
  for (const auto& s : samples) {
    ModeSpectrum spec = dc_mode_frequencies(out.params, s.bias, top_mode);
    out.residuals.push_back(spec.omega(s.mode_index) - s.omega);
  }
  double sse = 0.0;
  for (double r : out.residuals) sse += r * r;
  out.rms = std::sqrt(sse / out.residuals.size());
  return out;
}

}  // namespace fluxbus
