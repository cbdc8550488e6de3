#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "fluxbus/errors.hpp"
#include "fluxbus/numerics.hpp"
#include "fluxbus/units.hpp"

// Two-qubit gate algebra and benchmarking: the fSim unitary, standard
// chi-matrix process tomography with entanglement-fidelity extraction and
// conditional-phase optimization, the post-modulation Z-rotation (beta)
// calibration, and confusion-matrix readout correction.

namespace fluxbus {

using Matrix4cd = Eigen::Matrix4cd;
using cplx = std::complex<double>;

struct FsimParams {
  double theta = 0.0;
  double beta = 0.0;
  double phi = 0.0;
};

// basis order |00>, |01>, |10>, |11> (first qubit is the high bit)
inline Matrix4cd fsim_unitary(const FsimParams& p) {
  const cplx I(0.0, 1.0);
  Matrix4cd u = Matrix4cd::Zero();
  u(0, 0) = 1.0;
  u(1, 1) = std::cos(0.5 * p.theta);
  u(1, 2) = I * std::sin(0.5 * p.theta) * std::exp(I * p.beta);
  u(2, 1) = I * std::sin(0.5 * p.theta) * std::exp(-I * p.beta);
  u(2, 2) = std::cos(0.5 * p.theta);
  u(3, 3) = std::exp(I * p.phi);
  return u;
}

// density-matrix map on the two-qubit space
using Channel = std::function<Matrix4cd(const Matrix4cd&)>;

inline Channel unitary_channel(const Matrix4cd& u) {
  return [u](const Matrix4cd& rho) { return Matrix4cd(u * rho * u.adjoint()); };
}

namespace detail {

inline std::array<Eigen::Matrix2cd, 4> pauli_basis_1q() {
  const cplx I(0.0, 1.0);
  Eigen::Matrix2cd id, x, y, z;
  id << 1, 0, 0, 1;
  x << 0, 1, 1, 0;
  y << 0, -I, I, 0;
  z << 1, 0, 0, -1;
  return {id, x, y, z};
}

inline std::array<Matrix4cd, 16> pauli_basis_2q() {
  auto p1 = pauli_basis_1q();
  std::array<Matrix4cd, 16> out;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      Matrix4cd m;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          m.block<2, 2>(2 * i, 2 * j) = p1[a](i, j) * p1[b];
      out[4 * a + b] = m;
    }
  return out;
}

// the four tomographically complete single-qubit preparations
inline std::array<Eigen::Vector2cd, 4> prep_states_1q() {
  const cplx I(0.0, 1.0);
  std::array<Eigen::Vector2cd, 4> s;
  s[0] << 1, 0;                                // |0>
  s[1] << 0, 1;                                // |1>
  s[2] << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);   // |+>
  s[3] << 1.0 / std::sqrt(2.0), I / std::sqrt(2.0);     // |+i>
  return s;
}

inline Eigen::VectorXcd vec(const Matrix4cd& m) {
  Eigen::VectorXcd v(16);
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) v(4 * c + r) = m(r, c);
  return v;
}

inline Matrix4cd unvec(const Eigen::VectorXcd& v) {
  Matrix4cd m;
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) m(r, c) = v(4 * c + r);
  return m;
}

}  // namespace detail

struct QptResult {
  Eigen::MatrixXcd chi;       // 16x16, trace-normalized, Pauli/2 basis
  double fidelity = 0.0;      // tr(chi_target chi)
  double phi_opt = 0.0;       // conditional phase maximizing the fidelity
  bool phi_optimized = false;
  double cp_violation = 0.0;  // most negative chi eigenvalue (pre-projection)
  bool non_physical = false;  // violation beyond 1e-6
  bool projected = false;
};

// chi matrix of a unitary in the normalized Pauli basis: rank-1 projector
inline Eigen::MatrixXcd chi_of_unitary(const Matrix4cd& u) {
  auto paulis = detail::pauli_basis_2q();
  Eigen::VectorXcd coeff(16);
  for (int m = 0; m < 16; ++m)
    coeff(m) = (paulis[m].adjoint() * u).trace() / 4.0;
  coeff /= coeff.norm();
  return coeff * coeff.adjoint();
}

// Standard two-qubit QPT: apply the channel to the 16 product preparations,
// measure every two-qubit Pauli expectation value of the outputs, rebuild
// the transfer matrix by linear inversion, convert to the chi
// representation, and score against a target unitary. Reconstruction that
// is non-CP beyond 1e-6 is flagged and projected back to the PSD cone.
inline QptResult process_tomography(const Channel& channel,
                                    const Matrix4cd& target,
                                    bool optimize_phi = false,
                                    FsimParams target_params = {}) {
  auto paulis = detail::pauli_basis_2q();
  auto preps1 = detail::prep_states_1q();

  Eigen::MatrixXcd s_in(16, 16), s_out(16, 16);
  int col = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b, ++col) {
      Eigen::Vector4cd psi;
      psi << preps1[a](0) * preps1[b](0), preps1[a](0) * preps1[b](1),
          preps1[a](1) * preps1[b](0), preps1[a](1) * preps1[b](1);
      Matrix4cd rho_in = psi * psi.adjoint();
      Matrix4cd rho_out = channel(rho_in);
      // tomographic measurement: Pauli expectations, then reassembly
      Eigen::VectorXd expect(16);
      for (int m = 0; m < 16; ++m)
        expect(m) = std::real((paulis[m] * rho_out).trace());
      Matrix4cd rho_meas = Matrix4cd::Zero();
      for (int m = 0; m < 16; ++m) rho_meas += 0.25 * expect(m) * paulis[m];
      s_in.col(col) = detail::vec(rho_in);
      s_out.col(col) = detail::vec(rho_meas);
    }

  // transfer (superoperator) matrix T with vec(E(X)) = T vec(X)
  Eigen::MatrixXcd transfer = s_out * s_in.inverse();

  // chi_mn in the Q_m = P_m/2 basis: T = sum chi_mn (Q_n^T (x) Q_m)
  Eigen::MatrixXcd chi(16, 16);
  for (int m = 0; m < 16; ++m)
    for (int n = 0; n < 16; ++n) {
      Eigen::MatrixXcd basis_el(16, 16);
      // kron(Q_n^T, Q_m)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          basis_el.block(4 * i, 4 * j, 4, 4) =
              (paulis[n].transpose()(i, j) / 2.0) * (paulis[m] / 2.0);
      chi(m, n) = (basis_el.adjoint() * transfer).trace();
    }
  chi /= 4.0;  // trace-normalized for trace-preserving maps

  QptResult res;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (chi + chi.adjoint()));
  res.cp_violation = std::min(0.0, es.eigenvalues().minCoeff());
  if (res.cp_violation < -1e-6) res.non_physical = true;
  if (res.cp_violation < 0.0) {
    // clip negative weights, renormalize
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    chi = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    double tr = chi.trace().real();
    if (tr > 0) chi /= tr;
    res.projected = true;
  }
  res.chi = chi;

  auto fidelity_against = [&](const Matrix4cd& u) {
    Eigen::MatrixXcd chi_u = chi_of_unitary(u);
    return std::real((chi_u * res.chi).trace());
  };

  if (!optimize_phi) {
    res.fidelity = fidelity_against(target);
    return res;
  }

  // grid + golden refinement over the conditional phase of the target
  auto fid_of_phi = [&](double phi) {
    FsimParams fp = target_params;
    fp.phi = phi;
    return fidelity_against(fsim_unitary(fp));
  };
  double best_phi = 0.0, best_f = -1.0;
  const int grid = 2001;
  for (int k = 0; k < grid; ++k) {
    double phi = -pi + two_pi * (k + 1) / grid;
    double f = fid_of_phi(phi);
    if (f > best_f) {
      best_f = f;
      best_phi = phi;
    }
  }
  double span = two_pi / grid;
  double refined = golden_min(
      [&](double phi) { return -fid_of_phi(phi); }, best_phi - span,
      best_phi + span, 1e-12);
  res.phi_opt = wrap_angle(refined);
  res.phi_optimized = true;
  res.fidelity = fid_of_phi(refined);
  return res;
}

// ---------------------------------------------------------------------------
// Post-modulation single-qubit Z calibration. Two branches of single
// excitation interference: (Y,Z) prepares qubit 1 in a swept-phase
// superposition with qubit 2 in |0> and reads the phase that the swap
// imprints on qubit 2; (Z,Y) swaps the roles. The branch phases are
// chi - beta + pi/2 and chi + beta + pi/2, so beta falls out of the
// difference and Rz(beta) (x) Rz(-beta) nulls it.
// ---------------------------------------------------------------------------
struct BetaCalibration {
  double phi_1 = 0.0;      // Z rotation on qubit 1
  double phi_4 = 0.0;      // Z rotation on qubit 2 (named after the device pair)
  double beta_est = 0.0;
  double amplitude = 0.0;  // oscillation amplitude of the weaker branch
};

inline BetaCalibration beta_calibration_sim(const Channel& channel,
                                            const std::vector<double>& angles) {
  if (angles.size() < 4)
    throw std::invalid_argument("beta_calibration_sim: need >= 4 angles");
  const cplx I(0.0, 1.0);

  // returns phase offset p and amplitude of <X> + i <Y> = A e^{i(chi + p)}
  auto branch = [&](bool qubit1_swept) {
    cplx acc(0.0, 0.0);
    for (double chi : angles) {
      Eigen::Vector4cd psi;
      if (qubit1_swept) {
        // (|0> + e^{i chi} |1>)/sqrt2 (x) |0>
        psi << 1.0 / std::sqrt(2.0), 0.0, std::exp(I * chi) / std::sqrt(2.0), 0.0;
      } else {
        // |0> (x) (|0> + e^{i chi} |1>)/sqrt2
        psi << 1.0 / std::sqrt(2.0), std::exp(I * chi) / std::sqrt(2.0), 0.0, 0.0;
      }
      Matrix4cd rho = channel(Matrix4cd(psi * psi.adjoint()));
      // tomography on the receiving qubit
      auto paulis = detail::pauli_basis_2q();
      int ix = qubit1_swept ? 1 : 4;   // I(x)X or X(x)I
      int iy = qubit1_swept ? 2 : 8;   // I(x)Y or Y(x)I
      double ex = std::real((paulis[ix] * rho).trace());
      double ey = std::real((paulis[iy] * rho).trace());
      acc += (ex + I * ey) * std::exp(-I * chi);
    }
    acc /= double(angles.size());
    return acc;
  };

  cplx b_yz = branch(true);   // receives on qubit 2: phase chi + beta + pi/2
  cplx b_zy = branch(false);  // receives on qubit 1: phase chi - beta + pi/2

  BetaCalibration cal;
  cal.amplitude = std::min(std::abs(b_yz), std::abs(b_zy));
  if (cal.amplitude < 0.1)
    throw CalibrationAmbiguous("oscillation amplitude " +
                               std::to_string(cal.amplitude) + " < 0.1");
  // each branch alone pins beta modulo 2 pi; the circular mean keeps that
  // (a half of the phase difference would only give beta modulo pi)
  double beta_1 = std::arg(b_yz) - 0.5 * pi;
  double beta_2 = 0.5 * pi - std::arg(b_zy);
  cal.beta_est = std::arg(std::exp(cplx(0, beta_1)) + std::exp(cplx(0, beta_2)));
  cal.phi_1 = wrap_angle(cal.beta_est);
  cal.phi_4 = wrap_angle(-cal.beta_est);
  return cal;
}

// apply post-gate Z rotations: (Rz(a) (x) Rz(b)) U
inline Matrix4cd apply_z_rotations(const Matrix4cd& u, double a, double b) {
  const cplx I(0.0, 1.0);
  Eigen::Vector4cd d;
  d << 1.0, std::exp(I * b), std::exp(I * a), std::exp(I * (a + b));
  return Matrix4cd(d.asDiagonal() * u);
}

// effective beta of an fSim-like unitary, from its single-excitation block
inline double extract_beta(const Matrix4cd& u) {
  cplx upper = u(1, 2), lower = u(2, 1);
  return 0.5 * (std::arg(upper / cplx(0.0, 1.0)) - std::arg(lower / cplx(0.0, 1.0)));
}

// ---------------------------------------------------------------------------
// Confusion-matrix readout correction.
// ---------------------------------------------------------------------------
struct ConfusionMatrix {
  Eigen::MatrixXd c;  // C_ij = P(measure i | prepared j), columns sum to 1

  void validate() const {
    if (c.rows() != c.cols() || c.rows() < 2)
      throw std::invalid_argument("ConfusionMatrix: square, size >= 2");
    for (int j = 0; j < c.cols(); ++j) {
      double colsum = c.col(j).sum();
      if (std::abs(colsum - 1.0) > 1e-9)
        throw std::invalid_argument("ConfusionMatrix: column " +
                                    std::to_string(j) + " sums to " +
                                    std::to_string(colsum));
      for (int i = 0; i < c.rows(); ++i)
        if (c(i, j) < -1e-12 || c(i, j) > 1.0 + 1e-12)
          throw std::invalid_argument("ConfusionMatrix: entry outside [0,1]");
    }
  }

  double condition_number() const {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c);
    const auto& sv = svd.singularValues();
    return sv(0) / sv(sv.size() - 1);
  }
};

inline Eigen::VectorXd apply_confusion(const ConfusionMatrix& cm,
                                       const Eigen::VectorXd& q) {
  return cm.c * q;
}

struct CorrectedProbabilities {
  Eigen::VectorXd q;
  bool clipped = false;  // some components were negative and renormalized
};

inline CorrectedProbabilities readout_correct(const ConfusionMatrix& cm,
                                              const Eigen::VectorXd& measured,
                                              bool clip_to_simplex = true) {
  cm.validate();
  if (cm.condition_number() > 1e6)
    throw SingularConfusion("condition number " +
                            std::to_string(cm.condition_number()) + " > 1e6");
  CorrectedProbabilities out;
  out.q = cm.c.partialPivLu().solve(measured);
  if (clip_to_simplex && out.q.minCoeff() < -1e-10) {
    out.clipped = true;
    out.q = out.q.cwiseMax(0.0);
    double s = out.q.sum();
    if (s > 0) out.q /= s;
  }
  return out;
}

}  // namespace fluxbus
