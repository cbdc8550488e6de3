#include <doctest.h>

#include "fluxbus/allocation.hpp"

using namespace fluxbus;

namespace {

AllocationProblem reference_problem(int n = 8) {
  AllocationProblem prob;
  prob.n_qubits = n;
  prob.omega_r = ghz_to_radns(6.0);
  prob.bandwidth = ghz_to_radns(2.0);
  prob.min_bus_detuning = mhz_to_radns(150.0);
  prob.neighbor_guard = mhz_to_radns(500.0);
  prob.neighbor_modes = {ghz_to_radns(4.5), ghz_to_radns(7.5)};
  return prob;
}

}  // namespace

TEST_CASE("s_min: hand-checkable cases") {
  SUBCASE("single pair returns the infinity sentinel") {
    CHECK(std::isinf(s_min({ghz_to_radns(5.0), ghz_to_radns(6.0)})));
  }
  SUBCASE("three frequencies enumerate to 1 GHz") {
    // detunings {1, 3, 2}: closest pair differs by 1
    double v = s_min({ghz_to_radns(0.0), ghz_to_radns(1.0), ghz_to_radns(3.0)});
    CHECK(radns_to_ghz(v) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("translation invariance") {
    std::vector<double> f = {ghz_to_radns(5.1), ghz_to_radns(5.7),
                             ghz_to_radns(6.4), ghz_to_radns(6.65)};
    std::vector<double> g = f;
    for (auto& x : g) x += ghz_to_radns(0.777);
    CHECK(s_min(f) == doctest::Approx(s_min(g)).epsilon(1e-12));
  }
  SUBCASE("fewer than two frequencies is an error") {
    CHECK_THROWS_AS(s_min({ghz_to_radns(5.0)}), std::invalid_argument);
  }
}

TEST_CASE("crosstalk budget is a quarter of s_min") {
  AllocationResult r;
  r.s_min = mhz_to_radns(35.3);
  CHECK(radns_to_mhz(crosstalk_budget(r)) == doctest::Approx(8.825).epsilon(1e-12));
  r.s_min = mhz_to_radns(20.0);
  CHECK(radns_to_mhz(crosstalk_budget(r)) == doctest::Approx(5.0));
  r.s_min = std::numeric_limits<double>::infinity();
  CHECK(std::isinf(crosstalk_budget(r)));
}

TEST_CASE("allocate: constraints, determinism, quality") {
  auto prob = reference_problem();
  auto res = allocate(prob, 2718, 16);

  SUBCASE("every constraint is satisfied") {
    for (double f : res.frequencies) {
      CHECK(std::abs(f - prob.omega_r) >= prob.min_bus_detuning - 1e-9);
      CHECK(f >= prob.omega_r - 0.5 * prob.bandwidth - 1e-9);
      CHECK(f <= prob.omega_r + 0.5 * prob.bandwidth + 1e-9);
      for (double nu : prob.neighbor_modes)
        CHECK(std::abs(f - nu) >= prob.neighbor_guard - 1e-9);
    }
    CHECK(res.s_min == doctest::Approx(s_min(res.frequencies)).epsilon(1e-12));
    CHECK(res.g_eff_max == doctest::Approx(res.s_min / 4.0));
  }

  SUBCASE("same seed reproduces the same frequencies") {
    auto res2 = allocate(prob, 2718, 16);
    REQUIRE(res2.frequencies.size() == res.frequencies.size());
    for (size_t i = 0; i < res.frequencies.size(); ++i)
      CHECK(res2.frequencies[i] == res.frequencies[i]);
  }

  SUBCASE("the eight-qubit problem clears the published bar") {
    CHECK(radns_to_mhz(res.s_min) >= 33.0);
  }
}

TEST_CASE("allocate: widening the band does not hurt") {
  auto narrow = reference_problem();
  narrow.bandwidth = ghz_to_radns(1.6);
  auto wide = reference_problem();
  auto rn = allocate(narrow, 99, 16);
  auto rw = allocate(wide, 99, 16);
  CHECK(rw.s_min >= 0.98 * rn.s_min);
}

TEST_CASE("allocate: three qubits beat an exhaustive 10 MHz grid") {
  auto prob = reference_problem(3);
  auto res = allocate(prob, 7, 24);

  // brute force over the 10 MHz lattice inside the feasible set
  std::vector<double> grid;
  double lo = prob.omega_r - 0.5 * prob.bandwidth;
  double hi = prob.omega_r + 0.5 * prob.bandwidth;
  for (double f = lo; f <= hi + 1e-9; f += mhz_to_radns(10.0)) {
    if (std::abs(f - prob.omega_r) < prob.min_bus_detuning) continue;
    bool ok = true;
    for (double nu : prob.neighbor_modes)
      if (std::abs(f - nu) < prob.neighbor_guard) ok = false;
    if (ok) grid.push_back(f);
  }
  double best = 0.0;
  for (size_t a = 0; a < grid.size(); ++a)
    for (size_t b = a + 1; b < grid.size(); ++b)
      for (size_t c = b + 1; c < grid.size(); ++c)
        best = std::max(best, s_min({grid[a], grid[b], grid[c]}));
  CHECK(res.s_min >= best - 1e-9);
}

TEST_CASE("allocate: impossible windows are rejected") {
  auto prob = reference_problem();
  prob.bandwidth = mhz_to_radns(200.0);  // narrower than twice the bus guard
  CHECK_THROWS_AS(allocate(prob, 1, 4), Infeasible);
}
