#include <doctest.h>

#include "fluxbus/dynamics.hpp"
#include "fluxbus/tomography.hpp"

using namespace fluxbus;
using cplx = std::complex<double>;

TEST_CASE("fsim unitary: special points and unitarity") {
  SUBCASE("zero angles give the identity") {
    CHECK((fsim_unitary({0, 0, 0}) - Matrix4cd::Identity()).cwiseAbs().maxCoeff() <
          1e-15);
  }
  SUBCASE("theta = pi is the iSWAP") {
    Matrix4cd u = fsim_unitary({pi, 0, 0});
    Matrix4cd iswap = Matrix4cd::Zero();
    iswap(0, 0) = 1.0;
    iswap(1, 2) = cplx(0, 1);
    iswap(2, 1) = cplx(0, 1);
    iswap(3, 3) = 1.0;
    CHECK((u - iswap).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("calibrated conditional-phase gate is unitary") {
    Matrix4cd u = fsim_unitary({pi, 0.0, -1.84});
    CHECK((u.adjoint() * u - Matrix4cd::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::arg(u(3, 3)) == doctest::Approx(-1.84));
  }
  SUBCASE("unitary for random parameter draws") {
    Rng rng(5);
    for (int k = 0; k < 50; ++k) {
      Matrix4cd u = fsim_unitary({rng.uniform(0, two_pi), rng.uniform(-pi, pi),
                                  rng.uniform(-pi, pi)});
      CHECK((u.adjoint() * u - Matrix4cd::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("process tomography: exact channels score unity") {
  Matrix4cd iswap = fsim_unitary({pi, 0, 0});
  auto res = process_tomography(unitary_channel(iswap), iswap);
  CHECK(res.fidelity == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(res.non_physical);

  SUBCASE("fidelity is invariant under a global phase of the target") {
    Matrix4cd phased = std::exp(cplx(0, 0.7)) * iswap;
    auto res2 = process_tomography(unitary_channel(iswap), phased);
    CHECK(res2.fidelity == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("random unitaries also reconstruct to unity") {
    Rng rng(11);
    for (int k = 0; k < 5; ++k) {
      Matrix4cd u = fsim_unitary({rng.uniform(0, two_pi), rng.uniform(-pi, pi),
                                  rng.uniform(-pi, pi)});
      u = apply_z_rotations(u, rng.uniform(-pi, pi), rng.uniform(-pi, pi));
      auto r = process_tomography(unitary_channel(u), u);
      CHECK(r.fidelity == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("process tomography: conditional-phase optimization") {
  Matrix4cd gate = fsim_unitary({pi, 0, -1.84});
  Matrix4cd iswap = fsim_unitary({pi, 0, 0});

  auto fixed = process_tomography(unitary_channel(gate), iswap);
  CHECK(fixed.fidelity < 1.0 - 1e-3);

  FsimParams family{pi, 0, 0};
  auto opt = process_tomography(unitary_channel(gate), iswap, true, family);
  CHECK(opt.fidelity == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(opt.phi_opt == doctest::Approx(-1.84).epsilon(1e-6));
}

TEST_CASE("process tomography: non-CP maps are flagged and projected") {
  // the transpose map is positive but not completely positive
  Channel transpose = [](const Matrix4cd& rho) { return Matrix4cd(rho.transpose()); };
  auto res = process_tomography(transpose, fsim_unitary({0, 0, 0}));
  CHECK(res.non_physical);
  CHECK(res.projected);
  CHECK(res.cp_violation < -1e-3);
  // post projection the chi matrix is a physical state again
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(res.chi);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  CHECK(res.chi.trace().real() == doctest::Approx(1.0).epsilon(1e-9));
}

namespace {

// two resonant qubits with a direct exchange, evolved for a quarter
// exchange period: an iSWAP up to single-qubit phases, with optional
// dissipation
Channel lindblad_iswap_channel(double t1_ns, double t2_ns) {
  return [t1_ns, t2_ns](const Matrix4cd& rho_in) {
    SystemModel m;
    for (int k = 0; k < 2; ++k) {
      QubitParams q;
      q.index = k + 1;
      q.omega_q = ghz_to_radns(0.5);
      q.g0 = mhz_to_radns(1.0);
      m.qubits.push_back(q);
    }
    m.omega_r = ghz_to_radns(1.0);
    m.n_max = 1;
    m.drives = {DriveTerm{0.0, 0.0, 1.0}, DriveTerm{0.0, 0.0, 1.0}};
    double j = mhz_to_radns(2.0);
    m.exchange = {ExchangeTerm{0, 1, j}};
    if (t1_ns > 0) m.dissipation = Dissipation{{t1_ns, t1_ns}, {t2_ns, t2_ns}};

    int dim = m.dim();
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    // embed the two-qubit state with the resonator in vacuum
    // basis index = (q1*2 + q2)*(n_max+1) + n
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) rho(a * 2, b * 2) = rho_in(a, b);
    double tau = 0.5 * pi / j;
    auto traj = evolve_lindblad(m, rho, tau, 0.0, 2, true);
    const Eigen::MatrixXcd& out = traj.states.back();
    Matrix4cd reduced = Matrix4cd::Zero();
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int n = 0; n < 2; ++n) reduced(a, b) += out(a * 2 + n, b * 2 + n);
    return reduced;
  };
}

}  // namespace

TEST_CASE("process tomography: decoherence lowers the fidelity monotonically") {
  // the ideal (dissipationless) version of this gate is an iSWAP dressed by
  // deterministic single-qubit Z phases; score against that target
  SystemModel probe;  // reproduce the phases analytically: exchange at J for tau
  double j = mhz_to_radns(2.0);
  double tau = 0.5 * pi / j;
  double wq = ghz_to_radns(0.5);
  Matrix4cd target = Matrix4cd::Zero();
  cplx ph = std::exp(cplx(0, -wq * tau));
  target(0, 0) = 1.0;
  target(1, 2) = cplx(0, -1) * ph;  // exchange phase convention of +J coupling
  target(2, 1) = cplx(0, -1) * ph;
  target(3, 3) = ph * ph;
  (void)probe;

  auto ideal = process_tomography(lindblad_iswap_channel(0, 0), target);
  CHECK(ideal.fidelity > 0.999);

  double prev = 1.1;
  for (double t2_us : {8.0, 4.0, 2.0}) {
    double t1 = us_to_ns(10.0), t2 = us_to_ns(t2_us);
    auto res = process_tomography(lindblad_iswap_channel(t1, t2), target);
    CHECK(res.fidelity < prev);
    CHECK(res.fidelity < 1.0);
    prev = res.fidelity;
  }
  CHECK(prev > 0.5);
}

TEST_CASE("beta calibration recovers and nulls the axis phase") {
  std::vector<double> angles;
  for (int k = 0; k < 24; ++k) angles.push_back(two_pi * k / 24);

  SUBCASE("zero beta needs no correction") {
    auto cal = beta_calibration_sim(unitary_channel(fsim_unitary({pi, 0, -0.3})), angles);
    CHECK(std::abs(cal.beta_est) < 1e-12);
    CHECK(std::abs(cal.phi_1) < 1e-12);
  }

  SUBCASE("beta = 0.7 is recovered and nulled") {
    Matrix4cd gate = fsim_unitary({pi, 0.7, -0.5});
    auto cal = beta_calibration_sim(unitary_channel(gate), angles);
    CHECK(cal.beta_est == doctest::Approx(0.7).epsilon(1e-9));
    Matrix4cd corrected = apply_z_rotations(gate, cal.phi_1, cal.phi_4);
    CHECK(std::abs(extract_beta(corrected)) < 1e-3);
    // conditional phase untouched by the opposite Z pair
    CHECK(std::arg(corrected(3, 3)) == doctest::Approx(-0.5).epsilon(1e-9));
  }

  SUBCASE("beta = pi wraps consistently") {
    Matrix4cd gate = fsim_unitary({pi, pi, 0.0});
    auto cal = beta_calibration_sim(unitary_channel(gate), angles);
    CHECK(std::abs(wrap_angle(cal.beta_est - pi)) < 1e-9);
    Matrix4cd corrected = apply_z_rotations(gate, cal.phi_1, cal.phi_4);
    CHECK(std::abs(wrap_angle(extract_beta(corrected))) < 1e-3);
  }

  SUBCASE("no exchange means no signal") {
    CHECK_THROWS_AS(
        beta_calibration_sim(unitary_channel(fsim_unitary({0.05, 0.4, 0.0})), angles),
        CalibrationAmbiguous);
  }
}

namespace {

ConfusionMatrix random_confusion(Rng& rng, int dim) {
  Eigen::MatrixXd c(dim, dim);
  for (int j = 0; j < dim; ++j) {
    double diag = rng.uniform(0.3, 0.6);
    double rest = 0.0;
    for (int i = 0; i < dim; ++i)
      if (i != j) {
        c(i, j) = rng.uniform(0.05, 1.0);
        rest += c(i, j);
      }
    for (int i = 0; i < dim; ++i)
      if (i != j) c(i, j) *= (1.0 - diag) / rest;
    c(j, j) = diag;
  }
  return ConfusionMatrix{c};
}

}  // namespace

TEST_CASE("readout correction: identity, round trip, clipping, singularity") {
  SUBCASE("identity confusion returns the input") {
    ConfusionMatrix cm{Eigen::MatrixXd::Identity(4, 4)};
    Eigen::VectorXd p(4);
    p << 0.1, 0.2, 0.3, 0.4;
    auto out = readout_correct(cm, p);
    CHECK((out.q - p).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_FALSE(out.clipped);
  }

  SUBCASE("apply-then-correct is exact for random low-contrast matrices") {
    Rng rng(8);
    for (int draw = 0; draw < 30; ++draw) {
      auto cm = random_confusion(rng, 4);
      cm.validate();
      Eigen::VectorXd q(4);
      double s = 0.0;
      for (int i = 0; i < 4; ++i) {
        q(i) = rng.uniform(0.0, 1.0);
        s += q(i);
      }
      q /= s;
      auto out = readout_correct(cm, apply_confusion(cm, q));
      CHECK((out.q - q).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SUBCASE("measured vector outside the image simplex is clipped and flagged") {
    Rng rng(9);
    auto cm = random_confusion(rng, 4);
    Eigen::VectorXd p(4);
    p << 1.0, 0.0, 0.0, 0.0;  // sharper than any mixing allows
    auto out = readout_correct(cm, p);
    CHECK(out.clipped);
    CHECK(out.q.minCoeff() >= 0.0);
    CHECK(out.q.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("near-singular confusion is rejected") {
    Eigen::MatrixXd c(2, 2);
    c << 0.5 + 1e-9, 0.5, 0.5 - 1e-9, 0.5;
    ConfusionMatrix cm{c};
    Eigen::VectorXd p(2);
    p << 0.6, 0.4;
    CHECK_THROWS_AS(readout_correct(cm, p), SingularConfusion);
  }

  SUBCASE("column sums are enforced") {
    Eigen::MatrixXd c(2, 2);
    c << 0.7, 0.2, 0.2, 0.8;
    ConfusionMatrix cm{c};
    Eigen::VectorXd p(2);
    p << 0.5, 0.5;
    CHECK_THROWS_AS(readout_correct(cm, p), std::invalid_argument);
  }
}
