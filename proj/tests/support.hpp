#pragma once

// Shared generators for randomized tests. Everything is driven by an
// explicitly seeded engine so failures reproduce.

#include <cmath>
#include <random>

#include "fbcap/detect.hpp"
#include "fbcap/matops.hpp"
#include "fbcap/matrix.hpp"
#include "fbcap/model.hpp"

namespace testsupport {

inline fbcap::Matrix random_matrix(std::mt19937& gen, int r, int c) {
  std::normal_distribution<double> dist(0.0, 1.0);
  fbcap::Matrix A(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) A(i, j) = dist(gen);
  return A;
}

// random matrix rescaled to a prescribed spectral radius
inline fbcap::Matrix random_with_radius(std::mt19937& gen, int n, double target) {
  for (;;) {
    fbcap::Matrix A = random_matrix(gen, n, n);
    const double rho = fbcap::spectral_radius(A);
    if (rho < 1e-3) continue;
    A *= target / rho;
    return A;
  }
}

// keeps eigenvalues away from the unit circle so detectability verdicts
// are unambiguous
inline bool near_unit_circle(const fbcap::Matrix& A, double band = 0.03) {
  for (const auto& lambda : fbcap::eig_general(A)) {
    const double d = std::abs(lambda);
    if (d > 1.0 - band && d < 1.0 + band) return true;
  }
  return false;
}

struct DetectPair {
  fbcap::Matrix A;
  fbcap::Matrix B;
  bool detectable;
};

// Four families: generic stable, generic unstable (both detectable), and
// pairs with one eigenmode exactly removed from B's view, hidden mode
// stable (detectable) or unstable (not).
inline DetectPair random_detect_pair(std::mt19937& gen) {
  std::uniform_int_distribution<int> npick(1, 5);
  std::uniform_int_distribution<int> qpick(1, 3);
  std::uniform_int_distribution<int> kind(0, 4);
  const int n = npick(gen);
  const int q = qpick(gen);
  const int k = kind(gen);

  if (k <= 2 || n == 1) {
    // generic coupling: B sees every mode
    const double target = k == 1 ? 1.4 : (k == 2 ? 0.85 : 0.4);
    fbcap::Matrix A = random_with_radius(gen, n, target);
    while (near_unit_circle(A)) A = random_with_radius(gen, n, target);
    DetectPair out{A, random_matrix(gen, q, n), true};
    if (n == 1 && k > 2) {
      // hidden-mode families degenerate for n = 1: zero B decides directly
      out.B = fbcap::Matrix::zeros(q, 1);
      out.detectable = target < 1.0;
    }
    return out;
  }

  // hide one real eigenmode from B via similarity
  const bool hidden_unstable = k == 3;
  const double lambda1 = hidden_unstable ? 1.3 : 0.5;
  fbcap::Matrix D(n, n);
  D(0, 0) = lambda1;
  std::uniform_real_distribution<double> stable(-0.7, 0.7);
  for (int i = 1; i < n; ++i) D(i, i) = stable(gen);
  const fbcap::Matrix T = fbcap::Matrix::identity(n) + 0.4 * random_matrix(gen, n, n);
  const fbcap::Matrix Tinv = fbcap::pinv(T);
  const fbcap::Matrix A = T * D * Tinv;
  fbcap::Matrix Beig = random_matrix(gen, q, n);
  for (int i = 0; i < q; ++i) Beig(i, 0) = 0.0;  // blind to the first mode
  return {A, Beig * Tinv, !hidden_unstable};
}

// random channel model with detectable (F, H) and strictly PD joint noise
inline fbcap::ChannelModel random_detectable_model(std::mt19937& gen, int max_n = 4) {
  std::uniform_int_distribution<int> npick(1, max_n);
  std::uniform_int_distribution<int> mpick(1, 2);
  std::uniform_int_distribution<int> ppick(1, 2);
  std::uniform_real_distribution<double> rho(0.2, 1.3);
  for (;;) {
    const int n = npick(gen);
    const int m = mpick(gen);
    const int p = ppick(gen);
    const fbcap::Matrix F = random_with_radius(gen, n, rho(gen));
    const fbcap::Matrix H = random_matrix(gen, p, n);
    const fbcap::Matrix C = random_matrix(gen, n + p, n + p);
    const fbcap::Matrix joint = C * C.transpose() + 0.05 * fbcap::Matrix::identity(n + p);
    if (!fbcap::detectable_pbh(F, H).detectable) continue;
    return fbcap::build_model(F, random_matrix(gen, n, m), H, random_matrix(gen, p, m),
                              joint.block(0, 0, n, n), joint.block(0, n, n, p),
                              joint.block(n, n, p, p));
  }
}

}  // namespace testsupport
