#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbcap/matrix.hpp"

namespace fbcap {

// Matrix-valued affine functions of matrix variables, and a small interior
// point solver for determinant maximization under linear matrix inequality
// and scalar constraints.

enum class TermOp {
  kPlain,       // A X B
  kTransposed,  // A X^T B
};

struct AffineTerm {
  int var = -1;
  Matrix A;
  Matrix B;
  TermOp op = TermOp::kPlain;
};

// E(x) = C + sum_k A_k X_{v_k} B_k, with optional transposes on the X's.
// Expressions used as objectives or LMIs must be symmetric as functions;
// the compiler verifies this.
class AffineMatrixExpr {
 public:
  AffineMatrixExpr() = default;
  explicit AffineMatrixExpr(int dim) : constant_(dim, dim) {}

  int dim() const { return constant_.rows(); }
  const Matrix& constant() const { return constant_; }
  void set_constant(const Matrix& C);
  void add_constant(const Matrix& C);

  void add_term(int var, const Matrix& A, const Matrix& B, TermOp op = TermOp::kPlain);
  // A X B + (A X B)^T
  void add_sym_pair(int var, const Matrix& A, const Matrix& B);
  // this += Lhs * src * Rhs, or Lhs * src^T * Rhs when transpose_src is set
  void add_product(const Matrix& Lhs, const AffineMatrixExpr& src, const Matrix& Rhs,
                   bool transpose_src = false);

  const std::vector<AffineTerm>& terms() const { return terms_; }

 private:
  Matrix constant_;
  std::vector<AffineTerm> terms_;
};

// c + sum_k <C_k, X_{v_k}> with the trace inner product <C, X> = tr(C^T X).
struct AffineScalarExpr {
  double constant = 0.0;
  std::vector<std::pair<int, Matrix>> terms;
};

struct VariableSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
};

// maximize   (1/2) sum_k log det S_k(x) + constant
// subject to L_j(x) >= 0, g_j(x) <= 0, h_j(x) = 0
class MaxDetProblem {
 public:
  int add_variable(const std::string& name, int rows, int cols);
  int add_symmetric_variable(const std::string& name, int n);

  void add_objective_logdet(const AffineMatrixExpr& S);
  void add_objective_constant(double c) { objective_constant_ += c; }
  void add_lmi(const AffineMatrixExpr& L);
  void add_scalar_ineq(const AffineScalarExpr& g);
  void add_scalar_eq(const AffineScalarExpr& h);

  const std::vector<VariableSpec>& variables() const { return variables_; }
  const std::vector<AffineMatrixExpr>& objective_logdets() const { return objective_logdets_; }
  double objective_constant() const { return objective_constant_; }
  const std::vector<AffineMatrixExpr>& lmis() const { return lmis_; }
  const std::vector<AffineScalarExpr>& scalar_ineqs() const { return scalar_ineqs_; }
  const std::vector<AffineScalarExpr>& scalar_eqs() const { return scalar_eqs_; }

 private:
  std::vector<VariableSpec> variables_;
  std::vector<AffineMatrixExpr> objective_logdets_;
  double objective_constant_ = 0.0;
  std::vector<AffineMatrixExpr> lmis_;
  std::vector<AffineScalarExpr> scalar_ineqs_;
  std::vector<AffineScalarExpr> scalar_eqs_;
};

struct SolveOptions {
  // stop once (total barrier degree) / t drops below tol
  double tol = 1e-8;
  // every LMI is relaxed to L(x) + lmi_shift I >= 0 so programs whose
  // optima sit on the boundary (or whose feasible sets have empty
  // interior) remain solvable; the shift is far below all reported
  // tolerances
  double lmi_shift = 1e-9;
  // squared-Newton-decrement/2 threshold for each centering
  double newton_tol = 1e-9;
  // margin above which check_feasibility declares strict feasibility
  double feas_tol = 1e-9;
  int max_newton_per_stage = 200;
};

enum class SolveStatus { kOptimal, kMaxIterations, kNumericalFailure };

const char* to_string(SolveStatus status);

struct MaxDetSolution {
  std::vector<Matrix> values;  // one per declared variable
  double objective = 0.0;
  SolveStatus status = SolveStatus::kNumericalFailure;
  // scaled stationarity residual ||grad phi_t||_inf / t at the final center
  double kkt_residual = 0.0;
  // most negative eigenvalue over the unshifted LMIs at the solution
  double min_lmi_eig = 0.0;
  int newton_iterations = 0;
  // objective after each outer centering; non-decreasing on the central path
  std::vector<double> stage_objectives;
};

struct FeasibilityReport {
  bool feasible = false;
  // best achievable min slack across LMIs (eigenvalue) and scalar
  // inequalities, found by maximizing a shared margin variable
  double margin = 0.0;
  std::vector<Matrix> point;
};

// Phase-I style search for the most interior point.
FeasibilityReport check_feasibility(const MaxDetProblem& prob, const SolveOptions& opts = {});

// Barrier solve. A strictly feasible start may be supplied; otherwise an
// internal margin-maximization run produces one. Throws Infeasible when no
// interior exists even after the LMI shift.
MaxDetSolution solve_maxdet(const MaxDetProblem& prob, const std::vector<Matrix>* start = nullptr,
                            const SolveOptions& opts = {});

// Barrier function diagnostics at a strictly feasible point, exposed so the
// solver's derivatives can be validated externally:
//   phi_t(x) = -t f(x) - sum_j log det(L_j(x) + shift I) - sum_j log(-g_j(x))
// over the stacked coordinates (row-major per variable, upper triangle for
// symmetric variables). Equality-constrained problems are not supported.
struct BarrierEval {
  double value = 0.0;
  std::vector<double> gradient;
};

BarrierEval eval_barrier(const MaxDetProblem& prob, const std::vector<Matrix>& point, double t,
                         const SolveOptions& opts = {});
std::vector<double> pack_point(const MaxDetProblem& prob, const std::vector<Matrix>& point);
std::vector<Matrix> unpack_point(const MaxDetProblem& prob, const std::vector<double>& coords);

}  // namespace fbcap
