#pragma once

#include "fbcap/matrix.hpp"
#include "fbcap/model.hpp"

namespace fbcap {

// One step of the predictor-form filter the encoder runs on the channel
// output. Sigma is the current one-step prediction error covariance.
//   Psi        = H Sigma H^T + V          (innovation covariance)
//   Kp         = (F Sigma H^T + L) Psi^-1 (predictor gain)
//   Sigma_next = F Sigma F^T + W - Kp Psi Kp^T
struct EncoderStep {
  Matrix Kp;
  Matrix Psi;
  Matrix Sigma_next;
};

EncoderStep encoder_step(const ChannelModel& model, const Matrix& Sigma);

struct RiccatiSolution {
  Matrix Sigma;  // stationary prediction error covariance
  Matrix Kp;
  Matrix Psi;
  int iterations = 0;
  double residual = 0.0;            // ||update(Sigma) - Sigma||_F at exit
  double closed_loop_radius = 0.0;  // spectral radius of F - Kp H
};

// Stationary solution of the prediction Riccati equation, obtained by
// iterating encoder_step from a large multiple of the identity so the
// iteration descends onto the maximal solution. Requires (F, H)
// detectable.
RiccatiSolution solve_dare(const ChannelModel& model, double tol = 1e-11, int max_iter = 100000);

// One step of the filter the decoder runs when the encoder transmits
//   x_i = Gamma SigmaHat^+ (shat_i - shathat_i) + m_i,  m_i ~ N(0, M).
// SigmaHat is the decoder's current error covariance about the encoder's
// state estimate; enc supplies this step's Kp and Psi.
struct DecoderStep {
  Matrix KY;
  Matrix PsiY;
  Matrix SigmaHat_next;
};

DecoderStep decoder_step(const ChannelModel& model, const EncoderStep& enc, const Matrix& Gamma,
                         const Matrix& M, const Matrix& SigmaHat);

}  // namespace fbcap
