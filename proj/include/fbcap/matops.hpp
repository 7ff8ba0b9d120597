#pragma once

#include <complex>
#include <vector>

#include "fbcap/matrix.hpp"

namespace fbcap {

// Self-contained dense linear algebra for the small symmetric/general
// matrices this library works with. No external solver dependencies.

// Cholesky factor L (lower triangular, A = L L^T). Throws
// NotPositiveDefinite when a pivot drops to 1e-12 or below.
Matrix cholesky(const Matrix& A);
// As above but reports failure instead of throwing.
bool try_cholesky(const Matrix& A, Matrix& L);

// log det A for symmetric positive definite A, via Cholesky.
double logdet_pd(const Matrix& A);

// Solve A X = B for symmetric positive definite A.
Matrix solve_spd(const Matrix& A, const Matrix& B);
// Inverse of a symmetric positive definite matrix.
Matrix inverse_spd(const Matrix& A);

struct SymmetricEig {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns, orthonormal
};

// Eigendecomposition of a symmetric matrix: Householder tridiagonal
// reduction followed by implicit-shift QL sweeps.
SymmetricEig eig_symmetric(const Matrix& A);

double min_eig_sym(const Matrix& A);
double max_eig_sym(const Matrix& A);

// Eigenvalues of a general square matrix: reduction to Hessenberg form,
// then Francis double-shift QR.
std::vector<std::complex<double>> eig_general(const Matrix& A);

double spectral_radius(const Matrix& A);

struct Svd {
  Matrix U;                     // rows() x rank columns span, stored full
  std::vector<double> sigma;    // descending, length min(rows, cols)
  Matrix V;
};

// One-sided Jacobi SVD: A = U diag(sigma) V^T.
Svd svd(const Matrix& A);

// Moore-Penrose pseudoinverse. Singular values below tol * sigma_max are
// treated as zero. Symmetric inputs take the eigendecomposition route so
// the result is exactly symmetric.
Matrix pinv(const Matrix& A, double tol = 1e-10);

// Numerical rank from the SVD, relative threshold tol * sigma_max.
int rank(const Matrix& A, double tol = 1e-10);

// Rank of the complex matrix Re + i*Im via its real embedding
// [[Re, -Im], [Im, Re]], whose rank is exactly twice the complex rank.
int rank_complex(const Matrix& re, const Matrix& im, double tol = 1e-10);

// Pivoted Cholesky of a PSD matrix: returns B (n x r, r = detected rank)
// with A ~= B B^T. Pivots at or below tol * max initial diagonal stop the
// factorization.
Matrix psd_factor(const Matrix& A, double tol = 1e-10);

}  // namespace fbcap
