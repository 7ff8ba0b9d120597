#pragma once

#include <string>
#include <vector>

#include "fbcap/kalman.hpp"
#include "fbcap/matrix.hpp"
#include "fbcap/model.hpp"
#include "fbcap/sdp.hpp"

namespace fbcap {

// Feedback capacity of the stationary channel as a determinant
// maximization over the policy parameters (Gamma, Pi, SigmaHat):
//   maximize  (1/2) log det Psi_Y - (1/2) log det Psi
//   s.t.      [[Pi, Gamma], [Gamma^T, SigmaHat]] >= 0
//             [[Omega, Ky Psi_Y], [Psi_Y Ky^T, Psi_Y]] >= 0
//             trace(Pi) <= power
// where, with (Kp, Psi) the stationary predictor gain and innovation
// covariance,
//   Psi_Y      = H SigmaHat H^T + J Pi J^T + H Gamma^T J^T + J Gamma H^T + Psi
//   Ky Psi_Y   = F SigmaHat H^T + F Gamma^T J^T + G Gamma H^T + G Pi J^T + Kp Psi
//   Omega      = F SigmaHat F^T + G Pi G^T + G Gamma F^T + F Gamma^T G^T
//                + Kp Psi Kp^T - SigmaHat
// are affine in the decision variables.

struct CapacitySolution {
  Matrix Gamma;     // m x n cross-covariance gain of the optimal policy
  Matrix Pi;        // m x m stationary input covariance
  Matrix SigmaHat;  // n x n decoder error covariance about the encoder estimate
  Matrix PsiY;      // p x p output innovation covariance
  Matrix Ky;        // n x p decoder filter gain
  Matrix Omega;     // n x n slack block of the covariance recursion
  Matrix M;         // m x m dither covariance, Pi - Gamma SigmaHat^+ Gamma^T
  double rate_nats = 0.0;
  double rate_bits = 0.0;
  // The rate is achievable when the closed-loop pair stays detectable;
  // otherwise it certifies only an upper bound.
  bool closed_loop_detectable = true;
  RiccatiSolution stationary;  // (Sigma, Kp, Psi) the program was built from
  SolveStatus solver_status = SolveStatus::kNumericalFailure;
  double kkt_residual = 0.0;
  double min_lmi_eig = 0.0;
};

// The assembled program with its variable handles, exposed so tests can
// probe the solver on the exact instances the capacity path produces.
struct StationaryProgram {
  MaxDetProblem prob;
  int vGamma = -1;
  int vPi = -1;
  int vSigmaHat = -1;
  RiccatiSolution stationary;
};

StationaryProgram build_stationary_program(const ChannelModel& model, double power);

CapacitySolution stationary_capacity(const ChannelModel& model, double power,
                                     const SolveOptions& opts = {});

// n-step upper bound C_n: the same program unrolled in time with the
// decoder error pinned at zero before the first transmission (SigmaHat_1
// = 0, which forces Gamma_1 = 0) and the trailing error SigmaHat_{n+1}
// kept positive semidefinite. The power constraint caps the average
// (1/n) sum trace(Pi_i).
struct FiniteHorizonStep {
  Matrix Gamma;          // zero at the first step
  Matrix Pi;
  Matrix SigmaHat_next;  // decoder error covariance after this step
  double rate_nats = 0.0;
};

struct FiniteHorizonSolution {
  int n_steps = 0;
  std::vector<FiniteHorizonStep> per_step;
  double total_rate_nats = 0.0;
  double normalized_rate_nats = 0.0;  // total / n
  double normalized_rate_bits = 0.0;
  SolveStatus solver_status = SolveStatus::kNumericalFailure;
  double kkt_residual = 0.0;
  double min_lmi_eig = 0.0;
};

FiniteHorizonSolution finite_horizon_capacity(const ChannelModel& model, double power,
                                              int n_steps, const SolveOptions& opts = {});

// Capacity without feedback (nats per use) of y_i = input_gain x_i + z_i
// with first-order autoregressive noise z_i = beta z_{i-1} + w_i,
// w_i ~ N(0, noise_var): water-filling of the input spectrum against
// S_z(w) = noise_var / (1 - 2 beta cos w + beta^2) on a uniform grid over
// [0, pi]. |beta| = 1 has no integrable noise spectrum and is rejected.
double waterfill_nofb(double beta, double power, double noise_var = 1.0,
                      double input_gain = 1.0, int grid_size = 4096);

// Closed-form feedback capacity (bits per use) of the unit-noise AR(1)
// channel for 0 <= beta < 1: -log2 x0 where x0 is the unique root in
// (0, 1) of power x^2 (1 + beta x)^2 = 1 - x^2. At the optimum of the
// determinant program the constraints bind with SigmaHat PsiY = power,
// which reduces the stationary program to this scalar equation.
double ar1_capacity_oracle(double beta, double power);

// Random search for a policy whose closed-loop pair loses detectability,
// i.e. for a model where the solved rate is certified only as an upper
// bound. No such instance is expected; offenders are recorded for
// inspection rather than raised.
struct ProbeConfig {
  int state_dim = 1;
  int max_io_dim = 1;        // input and output dimensions drawn from [1, this]
  double power_min = 0.1;
  double power_max = 4.0;
  double radius_min = 0.2;   // spectral radius range for the state matrix
  double radius_max = 1.5;
};

struct ProbeInstance {
  ChannelModel model;
  double power = 0.0;
  bool solved = false;
  bool detectable = true;
  std::string note;  // error text when the solve failed
};

struct ProbeReport {
  int trials = 0;
  int violations = 0;       // solved instances with an undetectable closed loop
  int solver_failures = 0;  // instances the solver could not finish
  std::vector<ProbeInstance> offenders;
};

ProbeReport conjecture_probe(const ProbeConfig& config, int trials, unsigned seed);

}  // namespace fbcap
