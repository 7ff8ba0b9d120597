#include "fbcap/detect.hpp"

#include <cmath>

#include "fbcap/errors.hpp"
#include "fbcap/matops.hpp"
#include "fbcap/sdp.hpp"

namespace fbcap {

PbhReport detectable_pbh(const Matrix& A, const Matrix& B, double tol) {
  if (!A.square()) throw DimensionMismatch("A must be square");
  if (B.cols() != A.cols()) throw DimensionMismatch("B must have as many columns as A");
  const int n = A.rows();
  const int q = B.rows();
  PbhReport report;
  report.detectable = true;
  for (const auto& lambda : eig_general(A)) {
    if (std::abs(lambda) < 1.0 - tol) continue;
    // rank of [A - lambda I; B] over the complex numbers
    Matrix re(n + q, n);
    Matrix im(n + q, n);
    re.set_block(0, 0, A);
    for (int i = 0; i < n; ++i) {
      re(i, i) -= lambda.real();
      im(i, i) = -lambda.imag();
    }
    re.set_block(n, 0, B);
    const int r = rank_complex(re, im);
    report.tested_eigenvalues.push_back(lambda);
    report.ranks.push_back(r);
    if (r < n) report.detectable = false;
  }
  return report;
}

LmiReport detectable_lmi(const Matrix& A, const Matrix& B) {
  if (!A.square()) throw DimensionMismatch("A must be square");
  if (B.cols() != A.cols()) throw DimensionMismatch("B must have as many columns as A");
  const int n = A.rows();

  // find P >= 0 with [[P, P A], [A^T P, P + B^T B]] >= 0; strict
  // feasibility of the pair of LMIs is equivalent to A^T P A - P < B^T B
  // for some P > 0 by a Schur complement. The normalization trace(P) <= n
  // bounds the margin search without excluding witnesses: the constraint is
  // not homogeneous in P (B^T B is constant), so unstable A may admit only
  // small P, but scaling a witness down always preserves it because
  // B^T B - c (A^T P A - P) = c (B^T B - (A^T P A - P)) + (1-c) B^T B > 0.
  MaxDetProblem prob;
  const int vP = prob.add_symmetric_variable("P", n);
  const Matrix E1 = vcat(Matrix::identity(n), Matrix::zeros(n, n));
  const Matrix E2 = vcat(Matrix::zeros(n, n), Matrix::identity(n));

  AffineMatrixExpr big(2 * n);
  big.add_term(vP, E1, E1.transpose());                // P block
  big.add_term(vP, E1, A * E2.transpose());            // P A
  big.add_term(vP, E2 * A.transpose(), E1.transpose());  // A^T P
  big.add_term(vP, E2, E2.transpose());                // P
  big.add_constant(E2 * (B.transpose() * B) * E2.transpose());
  prob.add_lmi(big);

  AffineMatrixExpr psd(n);
  psd.add_term(vP, Matrix::identity(n), Matrix::identity(n));
  prob.add_lmi(psd);

  AffineScalarExpr tr;
  tr.constant = -static_cast<double>(n);
  tr.terms.emplace_back(vP, Matrix::identity(n));
  prob.add_scalar_ineq(tr);

  const FeasibilityReport feas = check_feasibility(prob);
  LmiReport report;
  report.margin = feas.margin;
  report.detectable = feas.margin > 1e-7;
  if (!feas.point.empty()) report.witness = feas.point[0];
  return report;
}

std::pair<Matrix, Matrix> closed_loop_pair(const ChannelModel& model, const Matrix& Gamma,
                                           const Matrix& SigmaHat) {
  if (Gamma.rows() != model.m || Gamma.cols() != model.n)
    throw DimensionMismatch("Gamma must be m x n");
  if (SigmaHat.rows() != model.n || SigmaHat.cols() != model.n)
    throw DimensionMismatch("SigmaHat must be n x n");
  const Matrix K = Gamma * pinv(SigmaHat.symmetrized(), 1e-9);
  return {model.F + model.G * K, model.H + model.J * K};
}

}  // namespace fbcap
