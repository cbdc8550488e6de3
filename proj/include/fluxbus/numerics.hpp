#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

// Small self-contained numerics kit: integer-order Bessel J, Brent root
// bracketing, golden-section minimization, Nelder-Mead, and a deterministic
// 64-bit RNG. Nothing here knows about the physics.

namespace fluxbus {

// ---------------------------------------------------------------------------
// Bessel functions of the first kind, integer order.
// Power series for small arguments, Miller downward recurrence otherwise.
// Accurate to better than 1e-12 for |order| <= 20, |x| <= 20.
// ---------------------------------------------------------------------------
namespace detail {

inline double bessel_j_series(int n, double x) {
  // J_n(x) = sum_k (-1)^k (x/2)^{n+2k} / (k! (n+k)!)
  double half = 0.5 * x;
  double term = 1.0;
  for (int i = 1; i <= n; ++i) term *= half / i;
  double sum = term;
  double x2 = -half * half;
  for (int k = 1; k < 40; ++k) {
    term *= x2 / (k * static_cast<double>(n + k));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
  }
  return sum;
}

inline double bessel_j_miller(int n, double x) {
  // downward recurrence J_{k-1} = (2k/x) J_k - J_{k+1},
  // normalized with J_0 + 2 sum_{k>=1} J_{2k} = 1
  int m = n + static_cast<int>(std::ceil(std::sqrt(40.0 * (n + 1)))) + 14;
  if (m % 2) ++m;
  double jp = 0.0, jc = 1e-30;
  double result = 0.0, norm = 0.0;
  for (int k = m; k > 0; --k) {
    double jm = (2.0 * k / x) * jc - jp;
    jp = jc;
    jc = jm;
    if (k - 1 == n) result = jc;
    if ((k - 1) % 2 == 0) norm += (k - 1 == 0) ? jc : 2.0 * jc;
    // rescale to dodge overflow
    if (std::abs(jc) > 1e250) {
      jc *= 1e-250;
      jp *= 1e-250;
      result *= 1e-250;
      norm *= 1e-250;
    }
  }
  return result / norm;
}

}  // namespace detail

inline double bessel_j(int n, double x) {
  double sign = 1.0;
  if (n < 0) {
    n = -n;
    if (n % 2) sign = -sign;
  }
  if (x < 0) {
    x = -x;
    if (n % 2) sign = -sign;
  }
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x < 2.0 || x < 0.25 * n) return sign * detail::bessel_j_series(n, x);
  return sign * detail::bessel_j_miller(n, x);
}

// ---------------------------------------------------------------------------
// Brent root refinement on a bracketing interval.
// ---------------------------------------------------------------------------
inline double brent_root(const std::function<double(double)>& f, double a,
                         double b, double rel_tol, int max_iter = 200) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0)
    throw std::invalid_argument("brent_root: interval does not bracket");
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (fb * fc > 0.0) {
      c = a;
      fc = fa;
      e = d = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) +
                  0.5 * rel_tol * std::abs(b);
    double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double s = fb / fa, p, q, r;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Golden-section minimization of a unimodal function on [a, b].
// ---------------------------------------------------------------------------
inline double golden_min(const std::function<double(double)>& f, double a,
                         double b, double rel_tol, int max_iter = 200) {
  const double inv_phi = 0.61803398874989484820;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < max_iter && (b - a) > rel_tol * (std::abs(a) + std::abs(b)) * 0.5;
       ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

// ---------------------------------------------------------------------------
// Nelder-Mead simplex search; initial_step is the absolute per-coordinate
// offset of the starting simplex. Reports stalls so callers can implement
// divergence policies.
// ---------------------------------------------------------------------------
struct NelderMeadResult {
  std::vector<double> x;
  double fmin = 0.0;
  int iterations = 0;
  bool stalled = false;  // true if no improvement for `stall_limit` iterations
};

inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, double initial_step, double ftol, int max_iter,
    int stall_limit = 200) {
  const size_t n = x0.size();
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (size_t i = 0; i < n; ++i) simplex[i + 1][i] += initial_step;
  for (size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

  NelderMeadResult res;
  double best_seen = *std::min_element(fv.begin(), fv.end());
  int since_improvement = 0;

  auto order = [&] {
    std::vector<size_t> idx(n + 1);
    for (size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> f2;
    for (size_t i = 0; i <= n; ++i) {
      s2.push_back(simplex[idx[i]]);
      f2.push_back(fv[idx[i]]);
    }
    simplex.swap(s2);
    fv.swap(f2);
  };

  int it = 0;
  for (; it < max_iter; ++it) {
    order();
    if (std::abs(fv[n] - fv[0]) <= ftol * (std::abs(fv[0]) + ftol)) break;

    std::vector<double> centroid(n, 0.0);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;

    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (size_t j = 0; j < n; ++j)
        p[j] = centroid[j] + coef * (simplex[n][j] - centroid[j]);
      return p;
    };

    auto xr = blend(-1.0);
    double fr = f(xr);
    if (fr < fv[0]) {
      auto xe = blend(-2.0);
      double fe = f(xe);
      if (fe < fr) {
        simplex[n] = xe;
        fv[n] = fe;
      } else {
        simplex[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      simplex[n] = xr;
      fv[n] = fr;
    } else {
      auto xc = blend(fr < fv[n] ? -0.5 : 0.5);
      double fc = f(xc);
      if (fc < std::min(fr, fv[n])) {
        simplex[n] = xc;
        fv[n] = fc;
      } else {
        for (size_t i = 1; i <= n; ++i) {
          for (size_t j = 0; j < n; ++j)
            simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
          fv[i] = f(simplex[i]);
        }
      }
    }

    double now_best = *std::min_element(fv.begin(), fv.end());
    if (now_best < best_seen * (1.0 - 1e-12) - 1e-300) {
      best_seen = now_best;
      since_improvement = 0;
    } else if (++since_improvement >= stall_limit) {
      // a collapsed simplex that stopped improving has converged; a wide
      // one that stopped improving is genuinely stuck
      order();
      res.stalled =
          std::abs(fv[n] - fv[0]) > 1e-6 * (std::abs(fv[0]) + 1e-300);
      break;
    }
  }
  order();
  res.x = simplex[0];
  res.fmin = fv[0];
  res.iterations = it;
  return res;
}

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64). Identical streams on every platform, which
// the byte-identical-output guarantee of the CLI depends on.
// ---------------------------------------------------------------------------
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  int uniform_int(int n) {  // in [0, n)
    return static_cast<int>(uniform() * n) % n;
  }

  // standard normal via Box-Muller
  double normal() {
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi_local * u2);
  }

 private:
  static constexpr double two_pi_local = 6.283185307179586476925287;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty vector");
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace fluxbus
