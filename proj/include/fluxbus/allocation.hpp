#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fluxbus/errors.hpp"
#include "fluxbus/numerics.hpp"
#include "fluxbus/units.hpp"

// Maximin qubit frequency allocation around a shared bus mode. Addressing a
// pair (i,j) by its detuning must not drive any other pair (k,l), so the
// objective is the minimum separation between pairwise detunings,
//   s_min = min_{(i,j) != (k,l)} |Delta_ij - Delta_kl|,
// maximized subject to the bus-detuning, bandwidth and neighbor-mode
// guards. The optimizer is a seeded multi-start coordinate search on the
// feasible intervals.

namespace fluxbus {

struct AllocationProblem {
  int n_qubits = 0;
  double omega_r = 0.0;            // bus mode, rad/ns
  double bandwidth = 0.0;          // full width w around omega_r, rad/ns
  double min_bus_detuning = 0.0;   // min |omega_i - omega_r|, rad/ns
  double neighbor_guard = 0.0;     // min distance to neighbor modes, rad/ns
  std::vector<double> neighbor_modes;  // rad/ns

  void validate() const {
    if (n_qubits < 2) throw std::invalid_argument("AllocationProblem: n_qubits >= 2");
    if (!(omega_r > 0) || !(bandwidth > 0))
      throw std::invalid_argument("AllocationProblem: omega_r, bandwidth > 0");
    if (min_bus_detuning < 0 || neighbor_guard < 0)
      throw std::invalid_argument("AllocationProblem: guards must be >= 0");
  }
};

struct AllocationResult {
  std::vector<double> frequencies;  // sorted ascending, rad/ns
  double s_min = 0.0;               // rad/ns (+inf for a single pair)
  double g_eff_max = 0.0;           // s_min / 4
};

// min |Delta_ij - Delta_kl| over distinct unordered pairs, Delta_ij with
// i < j; +inf when only one pair exists
inline double s_min(const std::vector<double>& freqs) {
  const int n = static_cast<int>(freqs.size());
  if (n < 2) throw std::invalid_argument("s_min: need at least 2 frequencies");
  std::vector<double> det;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) det.push_back(freqs[i] - freqs[j]);
  if (det.size() < 2) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < det.size(); ++a)
    for (size_t b = a + 1; b < det.size(); ++b)
      best = std::min(best, std::abs(det[a] - det[b]));
  return best;
}

inline double crosstalk_budget(const AllocationResult& r) { return r.s_min / 4.0; }

namespace detail {

struct Interval {
  double lo, hi;
};

inline std::vector<Interval> feasible_intervals(const AllocationProblem& prob) {
  std::vector<Interval> keep{{prob.omega_r - 0.5 * prob.bandwidth,
                              prob.omega_r + 0.5 * prob.bandwidth}};
  auto subtract = [&](double cut_lo, double cut_hi) {
    std::vector<Interval> next;
    for (const auto& iv : keep) {
      if (cut_hi <= iv.lo || cut_lo >= iv.hi) {
        next.push_back(iv);
        continue;
      }
      if (cut_lo > iv.lo) next.push_back({iv.lo, cut_lo});
      if (cut_hi < iv.hi) next.push_back({cut_hi, iv.hi});
    }
    keep = next;
  };
  if (prob.min_bus_detuning > 0)
    subtract(prob.omega_r - prob.min_bus_detuning,
             prob.omega_r + prob.min_bus_detuning);
  for (double nu : prob.neighbor_modes)
    subtract(nu - prob.neighbor_guard, nu + prob.neighbor_guard);
  std::vector<Interval> out;
  for (const auto& iv : keep)
    if (iv.hi - iv.lo > 1e-12) out.push_back(iv);
  std::sort(out.begin(), out.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  return out;
}

inline double project_to_intervals(const std::vector<Interval>& ivs, double x) {
  double best = ivs.front().lo;
  double dist = std::numeric_limits<double>::infinity();
  for (const auto& iv : ivs) {
    double p = std::min(std::max(x, iv.lo), iv.hi);
    double d = std::abs(p - x);
    if (d < dist) {
      dist = d;
      best = p;
    }
  }
  return best;
}

inline bool satisfies(const AllocationProblem& prob,
                      const std::vector<double>& freqs) {
  for (double f : freqs) {
    if (std::abs(f - prob.omega_r) < prob.min_bus_detuning - 1e-9) return false;
    if (f < prob.omega_r - 0.5 * prob.bandwidth - 1e-9 ||
        f > prob.omega_r + 0.5 * prob.bandwidth + 1e-9)
      return false;
    for (double nu : prob.neighbor_modes)
      if (std::abs(f - nu) < prob.neighbor_guard - 1e-9) return false;
  }
  return true;
}

}  // namespace detail

namespace detail {

// Sorted vector of pairwise-detuning separations, evaluated on the
// frequency-sorted configuration (the emitted labeling, where every
// detuning has the same sign). The maximin objective is its first entry;
// comparing several entries lexicographically (leximin) lets the search
// escape interlocked bottlenecks where moving a single qubit cannot raise
// the minimum itself. Only the head of the profile is kept: the tail never
// decides a move and truncating it stops meaningless micro-improvements.
inline std::vector<double> separation_profile(std::vector<double> f,
                                              size_t head = 12) {
  std::sort(f.begin(), f.end());
  const int n = static_cast<int>(f.size());
  std::vector<double> det;
  det.reserve(n * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) det.push_back(f[i] - f[j]);
  std::vector<double> sep;
  sep.reserve(det.size() * (det.size() - 1) / 2);
  for (size_t a = 0; a < det.size(); ++a)
    for (size_t b = a + 1; b < det.size(); ++b)
      sep.push_back(std::abs(det[a] - det[b]));
  std::sort(sep.begin(), sep.end());
  if (sep.size() > head) sep.resize(head);
  return sep;
}

inline bool leximin_greater(const std::vector<double>& a,
                            const std::vector<double>& b, double tol) {
  for (size_t k = 0; k < a.size() && k < b.size(); ++k) {
    if (a[k] > b[k] + tol) return true;
    if (a[k] < b[k] - tol) return false;
  }
  return false;
}

}  // namespace detail

// Multi-start coordinate search. Each pass sweeps every qubit over a grid
// of candidate positions inside the feasible set (plus local perturbations
// at the current scale) and keeps leximin improvements of the separation
// profile; the scale shrinks when a pass stalls. Deterministic for a fixed
// seed; ties resolve to the lexicographically smallest sorted vector.
inline AllocationResult allocate(const AllocationProblem& prob, uint64_t seed,
                                 int n_starts = 96) {
  prob.validate();
  auto ivs = detail::feasible_intervals(prob);
  if (ivs.empty())
    throw Infeasible("feasible set is empty (bandwidth vs guards)");
  double total_len = 0.0;
  for (const auto& iv : ivs) total_len += iv.hi - iv.lo;

  Rng rng(seed);
  const int n = prob.n_qubits;
  const double tol = khz_to_radns(0.1);

  auto random_point = [&]() {
    double u = rng.uniform() * total_len;
    for (const auto& iv : ivs) {
      double len = iv.hi - iv.lo;
      if (u <= len) return iv.lo + u;
      u -= len;
    }
    return ivs.back().hi;
  };

  // candidate grid spanning the feasible set, reused by every pass
  const int grid_per_unit = 120;
  std::vector<double> grid;
  for (const auto& iv : ivs) {
    int k = std::max(2, static_cast<int>(grid_per_unit * (iv.hi - iv.lo) / total_len));
    for (int i = 0; i <= k; ++i) grid.push_back(iv.lo + (iv.hi - iv.lo) * i / k);
  }

  std::vector<double> best;
  std::vector<double> best_profile;

  for (int start = 0; start < n_starts; ++start) {
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = random_point();
    std::vector<double> profile = detail::separation_profile(f);

    double step = 0.25 * total_len;
    const double step_floor = khz_to_radns(2.0);
    while (step > step_floor) {
      bool improved = false;
      for (int i = 0; i < n; ++i) {
        double keep = f[i];
        std::vector<double> local_profile = profile;
        double local_arg = keep;
        auto try_pos = [&](double cand) {
          f[i] = detail::project_to_intervals(ivs, cand);
          auto v = detail::separation_profile(f);
          if (detail::leximin_greater(v, local_profile, tol)) {
            local_profile = std::move(v);
            local_arg = f[i];
          }
        };
        for (double g : grid) try_pos(g);
        for (int k = 1; k <= 4; ++k) {
          try_pos(keep + step * k / 4.0);
          try_pos(keep - step * k / 4.0);
        }
        f[i] = local_arg;
        if (detail::leximin_greater(local_profile, profile, tol)) {
          profile = std::move(local_profile);
          improved = true;
        }
      }
      if (!improved) step *= 0.5;
    }

    std::sort(f.begin(), f.end());
    if (best.empty() || detail::leximin_greater(profile, best_profile, tol) ||
        (!detail::leximin_greater(best_profile, profile, tol) &&
         std::lexicographical_compare(f.begin(), f.end(), best.begin(),
                                      best.end()))) {
      best_profile = profile;
      best = f;
    }
  }

  if (!detail::satisfies(prob, best))
    throw Infeasible("optimizer result violates constraints");

  AllocationResult res;
  res.frequencies = best;
  res.s_min = s_min(best);
  res.g_eff_max = res.s_min / 4.0;
  return res;
}

}  // namespace fluxbus
