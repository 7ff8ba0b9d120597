#pragma once

#include <optional>
#include <string>

#include "fbcap/matrix.hpp"

namespace fbcap {

// Linear state-space channel
//   s_{i+1} = F s_i + G x_i + w_i
//   y_i     = H s_i + J x_i + v_i
// with jointly Gaussian noise (w_i, v_i) ~ N(0, [[W, L], [L^T, V]]) drawn
// independently across time, and initial state s_1 ~ N(0, Sigma1).
// Instances are validated on construction and treated as immutable.
struct ChannelModel {
  int n = 0;  // state dimension
  int m = 0;  // input dimension
  int p = 0;  // output dimension
  Matrix F, G, H, J;
  Matrix W, L, V;
  Matrix Sigma1;
  std::string name;
};

// Validates dimensions and noise positive semidefiniteness. When sigma1 is
// absent, the stationary predictor error covariance (the Riccati fixed
// point) is used, which requires (F, H) detectable.
ChannelModel build_model(const Matrix& F, const Matrix& G, const Matrix& H, const Matrix& J,
                         const Matrix& W, const Matrix& L, const Matrix& V,
                         std::optional<Matrix> sigma1 = std::nullopt,
                         const std::string& name = "");

// First-order autoregressive noise channel: y_i = x_i * input_gain + z_i,
// z_i = beta z_{i-1} + w_i. The state is the previous noise sample, so
// F = H = beta, G = 0, J = input_gain, and W = L = V = noise_var because
// the state disturbance and the fresh observation noise are the same draw.
ChannelModel make_ar1_channel(double beta, double noise_var = 1.0, double input_gain = 1.0);

// Feedback available to the encoder with an extra delay of d-1 steps,
// realized by augmenting the state with d-1 input shift registers. d = 1
// returns the model unchanged.
ChannelModel make_delayed(const ChannelModel& model, int d);

struct StationaryAssumptions {
  bool detectable = false;        // (F, H) detectable
  bool sigma1_dominates = false;  // Sigma1 - Sigma_stationary is PSD
};

// Checks the hypotheses behind the stationary capacity theory. Report
// only; callers decide whether to abort. sigma1_dominates is false when
// detectability already fails (no stationary covariance exists).
StationaryAssumptions validate_stationary_assumptions(const ChannelModel& model);

// JSON model files: object with matrix fields F, G, H, J, W, V, optional
// L (defaults to zero), optional Sigma1, optional name string. Matrices
// are arrays of equal-length rows.
ChannelModel parse_model_json(const std::string& text);
ChannelModel load_model(const std::string& path);
std::string model_to_json(const ChannelModel& model);

}  // namespace fbcap
