#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "fbcap/matrix.hpp"
#include "fbcap/model.hpp"

namespace fbcap {

struct PbhReport {
  bool detectable = false;
  // eigenvalues of A with |lambda| >= 1 - tol and the rank of the stacked
  // pencil [A - lambda I; B] at each of them
  std::vector<std::complex<double>> tested_eigenvalues;
  std::vector<int> ranks;
};

// Eigenvector test: (A, B) is detectable iff [A - lambda I; B] has full
// column rank at every eigenvalue on or outside the unit circle.
PbhReport detectable_pbh(const Matrix& A, const Matrix& B, double tol = 1e-9);

struct LmiReport {
  bool detectable = false;
  double margin = 0.0;  // feasibility margin of the normalized program
  Matrix witness;       // P with trace(P) <= n when detectable
};

// Semidefinite characterization: (A, B) is detectable iff some P > 0
// satisfies A^T P A - P < B^T B, normalized here by trace(P) <= n (any
// witness scales down to meet the cap, so the cap loses nothing). Decided
// by the feasibility margin of
//   [[P, P A], [A^T P, P + B^T B]] >= 0,  P >= 0,  trace(P) <= n.
LmiReport detectable_lmi(const Matrix& A, const Matrix& B);

// The pair whose detectability certifies that a decoder tracking the
// optimal policy is stable: (F + G K, H + J K) with K = Gamma SigmaHat^+.
std::pair<Matrix, Matrix> closed_loop_pair(const ChannelModel& model, const Matrix& Gamma,
                                           const Matrix& SigmaHat);

}  // namespace fbcap
