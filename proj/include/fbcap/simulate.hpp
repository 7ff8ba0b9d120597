#pragma once

#include <cstdint>
#include <vector>

#include "fbcap/capacity.hpp"
#include "fbcap/matrix.hpp"
#include "fbcap/model.hpp"

namespace fbcap {

// Stationary transmission policy deployed by the encoder:
//   x_i = Gamma SigmaHat^+ (shat_i - shathat_i) + m_i,   m_i ~ N(0, M),
// where shat_i is the encoder's state estimate and shathat_i the decoder's
// estimate of it. The gain Gamma SigmaHat^+ stays fixed over time even
// while the decoder's error covariance is still converging toward
// SigmaHat; the closed-loop filter then settles onto the stationary
// optimum whenever the closed-loop pair is detectable.
struct SimPolicy {
  Matrix Gamma;
  Matrix M;
  Matrix SigmaHat;
};

// Policy block of a solved stationary program.
SimPolicy policy_from(const CapacitySolution& solution);

struct SimConfig {
  int horizon = 1;
  int trials = 1;
  std::uint64_t seed = 0;
  SimPolicy policy;
};

struct SimResult {
  double empirical_power = 0.0;        // mean of x^T x per step
  double analytic_rate_nats = 0.0;     // deterministic recursion average
  Matrix encoder_innovation_cov;       // sample covariance of e_i
  Matrix empirical_innovation_cov;     // sample covariance of the decoder residuals
  double whiteness_maxlag_corr = 0.0;  // max |autocorr| of e_i over lags 1..10
};

// Monte Carlo run of the channel under the policy: draws the initial
// state and the correlated (w_i, v_i) pairs (rank-deficient joint
// covariances are sampled through their pivoted factor), propagates the
// state, and runs the encoder and decoder filters online. The random
// source is counter-based: each (trial, step, draw) pair maps to an
// independent uniform through a 64-bit mix, and Gaussians come from
// Box-Muller, so identical seeds give bit-identical results regardless
// of trial execution order.
SimResult simulate_policy(const ChannelModel& model, const SimConfig& config);

// Per-step information rates 1/2 (log det PsiY_i - log det Psi_i) along
// the deterministic covariance recursions: the encoder filter starts at
// Sigma1 and the decoder's gap covariance at zero, while the deployed
// gain stays fixed. `gain` is the matrix applied to the estimation gap,
// Gamma SigmaHat^+ for a stationary policy. With a zero gain and zero
// dither the trajectory is identically zero; started from the stationary
// optimum's covariances it reproduces the capacity rate every step.
std::vector<double> analytic_rate_trajectory(const ChannelModel& model, const Matrix& gain,
                                             const Matrix& M, int horizon);

}  // namespace fbcap
