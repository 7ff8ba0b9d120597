#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fbcap/errors.hpp"
#include "fbcap/matops.hpp"
#include "fbcap/matrix.hpp"

using namespace fbcap;

namespace {

Matrix random_matrix(std::mt19937& gen, int r, int c) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix A(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) A(i, j) = dist(gen);
  return A;
}

Matrix random_spd(std::mt19937& gen, int n) {
  const Matrix B = random_matrix(gen, n, n);
  return B * B.transpose() + 0.1 * Matrix::identity(n);
}

}  // namespace

TEST_CASE("cholesky reconstructs and rejects") {
  const Matrix A = {{4.0, 2.0}, {2.0, 3.0}};
  const Matrix L = cholesky(A);
  const Matrix R = L * L.transpose() - A;
  CHECK(R.max_abs() < 1e-12);
  CHECK_THROWS_AS(cholesky(Matrix{{1.0, 2.0}, {2.0, 1.0}}), NotPositiveDefinite);
  CHECK_THROWS_AS(cholesky(Matrix{{0.0}}), NotPositiveDefinite);
}

TEST_CASE("logdet_pd matches closed forms") {
  CHECK(logdet_pd(Matrix{{2.0, 1.0}, {1.0, 2.0}}) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(logdet_pd(Matrix::diag({2.0, 8.0})) == doctest::Approx(std::log(16.0)).epsilon(1e-12));
}

TEST_CASE("solve_spd inverts") {
  std::mt19937 gen(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 5;
    const Matrix A = random_spd(gen, n);
    const Matrix B = random_matrix(gen, n, 2);
    const Matrix X = solve_spd(A, B);
    CHECK((A * X - B).max_abs() < 1e-9);
    CHECK((A * inverse_spd(A) - Matrix::identity(n)).max_abs() < 1e-9);
  }
}

TEST_CASE("symmetric eigendecomposition") {
  const Matrix A = {{2.0, 1.0}, {1.0, 2.0}};
  const SymmetricEig eig = eig_symmetric(A);
  CHECK(eig.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eig.values[1] == doctest::Approx(3.0).epsilon(1e-12));

  std::mt19937 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 6;
    const Matrix S = random_matrix(gen, n, n).symmetrized();
    const SymmetricEig e = eig_symmetric(S);
    // residual S Q = Q diag(values) and orthonormality of Q
    Matrix D(n, n);
    for (int i = 0; i < n; ++i) D(i, i) = e.values[i];
    CHECK((S * e.vectors - e.vectors * D).max_abs() < 1e-10 * (1.0 + S.max_abs()));
    CHECK((e.vectors.transpose() * e.vectors - Matrix::identity(n)).max_abs() < 1e-12);
    for (int i = 0; i + 1 < n; ++i) CHECK(e.values[i] <= e.values[i + 1]);
    double tr = 0.0;
    for (double v : e.values) tr += v;
    CHECK(tr == doctest::Approx(S.trace()).epsilon(1e-10));
  }
}

TEST_CASE("min and max symmetric eigenvalues") {
  CHECK(min_eig_sym(Matrix{{0.0, 1.0}, {1.0, 0.0}}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(max_eig_sym(Matrix{{0.0, 1.0}, {1.0, 0.0}}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("general eigenvalues: companion and rotation") {
  // companion matrix of z^2 - z - 1: spectral radius is the golden ratio
  const Matrix C = {{1.0, 1.0}, {1.0, 0.0}};
  CHECK(spectral_radius(C) == doctest::Approx(0.5 * (1.0 + std::sqrt(5.0))).epsilon(1e-12));

  // rotation by 90 degrees scaled by 2: eigenvalues +-2i
  const Matrix R = {{0.0, -2.0}, {2.0, 0.0}};
  const auto ev = eig_general(R);
  REQUIRE(ev.size() == 2);
  for (const auto& lambda : ev) {
    CHECK(std::fabs(lambda.real()) < 1e-12);
    CHECK(std::fabs(std::fabs(lambda.imag()) - 2.0) < 1e-12);
  }
}

TEST_CASE("general eigenvalues match characteristic polynomial on random matrices") {
  std::mt19937 gen(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 6;
    const Matrix A = random_matrix(gen, n, n);
    const auto ev = eig_general(A);
    REQUIRE(static_cast<int>(ev.size()) == n);
    // trace and determinant-free invariant checks: sum and sum of squares
    std::complex<double> sum = 0.0;
    std::complex<double> sumsq = 0.0;
    for (const auto& l : ev) {
      sum += l;
      sumsq += l * l;
    }
    CHECK(std::fabs(sum.imag()) < 1e-8);
    CHECK(sum.real() == doctest::Approx(A.trace()).epsilon(1e-8));
    CHECK((A * A).trace() == doctest::Approx(sumsq.real()).epsilon(1e-8));
  }
}

TEST_CASE("svd factors and orders") {
  std::mt19937 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + trial % 5;
    const int c = 1 + (trial * 3) % 5;
    const Matrix A = random_matrix(gen, r, c);
    const Svd s = svd(A);
    const int k = static_cast<int>(s.sigma.size());
    REQUIRE(k == std::min(r, c));
    Matrix D(k, k);
    for (int i = 0; i < k; ++i) D(i, i) = s.sigma[i];
    CHECK((s.U * D * s.V.transpose() - A).max_abs() < 1e-10 * (1.0 + A.max_abs()));
    for (size_t i = 0; i + 1 < s.sigma.size(); ++i) CHECK(s.sigma[i] >= s.sigma[i + 1]);
  }
}

TEST_CASE("pinv on rank-deficient diagonal") {
  const Matrix P = pinv(Matrix::diag({2.0, 0.0}));
  CHECK(P(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::fabs(P(1, 1)) < 1e-14);
  CHECK(std::fabs(P(0, 1)) < 1e-14);
}

TEST_CASE("pinv satisfies Penrose identities") {
  std::mt19937 gen(19);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + trial % 4;
    const int c = 1 + (trial * 2) % 4;
    Matrix A = random_matrix(gen, r, c);
    if (trial % 3 == 0 && r > 1) {
      // force a rank drop: duplicate the first row
      for (int j = 0; j < c; ++j) A(r - 1, j) = A(0, j);
    }
    const Matrix P = pinv(A);
    CHECK((A * P * A - A).max_abs() < 1e-9);
    CHECK((P * A * P - P).max_abs() < 1e-9);
    CHECK((A * P).asymmetry() < 1e-9);
    CHECK((P * A).asymmetry() < 1e-9);
  }
}

TEST_CASE("pinv of symmetric input is symmetric") {
  std::mt19937 gen(23);
  const Matrix S = random_spd(gen, 4);
  const Matrix P = pinv(S);
  CHECK(P.asymmetry() == 0.0);
  CHECK((S * P - Matrix::identity(4)).max_abs() < 1e-9);
}

TEST_CASE("rank and complex rank") {
  CHECK(rank(Matrix::diag({1.0, 2.0, 0.0})) == 2);
  CHECK(rank(Matrix::zeros(3, 2)) == 0);
  // [1 i; i -1] has rank 1 over the complex numbers
  const Matrix re = {{1.0, 0.0}, {0.0, -1.0}};
  const Matrix im = {{0.0, 1.0}, {1.0, 0.0}};
  CHECK(rank_complex(re, im) == 1);
  CHECK(rank_complex(Matrix::identity(2), Matrix::zeros(2, 2)) == 2);
}

TEST_CASE("psd_factor reconstructs with detected rank") {
  std::mt19937 gen(29);
  // full rank
  const Matrix A = random_spd(gen, 4);
  const Matrix B = psd_factor(A);
  CHECK(B.cols() == 4);
  CHECK((B * B.transpose() - A).max_abs() < 1e-9 * (1.0 + A.max_abs()));
  // rank deficient: outer product of a 4x2 factor
  const Matrix C = random_matrix(gen, 4, 2);
  const Matrix CC = C * C.transpose();
  const Matrix B2 = psd_factor(CC);
  CHECK(B2.cols() == 2);
  CHECK((B2 * B2.transpose() - CC).max_abs() < 1e-9 * (1.0 + CC.max_abs()));
  // zero matrix factors to zero columns
  CHECK(psd_factor(Matrix::zeros(3, 3)).cols() == 0);
}
