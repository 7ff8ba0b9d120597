#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "fbcap/errors.hpp"
#include "fbcap/matops.hpp"
#include "fbcap/sdp.hpp"

using namespace fbcap;

namespace {

// maximize (1/2) log x  subject to  x >= 0 (LMI), x <= hi (scalar)
MaxDetProblem scalar_box(double hi) {
  MaxDetProblem prob;
  const int vx = prob.add_variable("x", 1, 1);
  AffineMatrixExpr x_expr(1);
  x_expr.add_term(vx, Matrix::identity(1), Matrix::identity(1));
  prob.add_objective_logdet(x_expr);
  prob.add_lmi(x_expr);
  AffineScalarExpr ub;
  ub.constant = -hi;
  ub.terms.push_back({vx, Matrix::identity(1)});
  prob.add_scalar_ineq(ub);
  return prob;
}

// maximize (1/2) log det X  subject to  X >= 0, tr(X) <= budget
MaxDetProblem trace_box(int n, double budget) {
  MaxDetProblem prob;
  const int vX = prob.add_symmetric_variable("X", n);
  AffineMatrixExpr X_expr(n);
  X_expr.add_term(vX, Matrix::identity(n), Matrix::identity(n));
  prob.add_objective_logdet(X_expr);
  prob.add_lmi(X_expr);
  AffineScalarExpr tr;
  tr.constant = -budget;
  tr.terms.push_back({vX, Matrix::identity(n)});
  prob.add_scalar_ineq(tr);
  return prob;
}

}  // namespace

TEST_CASE("scalar box attains the upper endpoint") {
  const MaxDetProblem prob = scalar_box(2.0);
  const MaxDetSolution sol = solve_maxdet(prob);
  CHECK(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-7));
  CHECK(sol.values[0](0, 0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.kkt_residual <= 1e-6);
  CHECK(sol.min_lmi_eig >= -1e-7);
}

TEST_CASE("trace-constrained determinant maximum is a scaled identity") {
  const MaxDetProblem prob = trace_box(2, 4.0);
  const MaxDetSolution sol = solve_maxdet(prob);
  CHECK(sol.status == SolveStatus::kOptimal);
  // det is maximized at X = 2 I, objective (1/2) log 4
  CHECK(sol.objective == doctest::Approx(std::log(2.0)).epsilon(1e-7));
  const Matrix X = sol.values[0];
  CHECK((X - 2.0 * Matrix::identity(2)).max_abs() < 1e-5);
  CHECK(sol.kkt_residual <= 1e-6);
}

TEST_CASE("stage objectives are monotone along the barrier path") {
  const MaxDetSolution sol = solve_maxdet(trace_box(3, 6.0));
  REQUIRE(sol.stage_objectives.size() >= 2);
  for (size_t i = 1; i < sol.stage_objectives.size(); ++i)
    CHECK(sol.stage_objectives[i] >= sol.stage_objectives[i - 1] - 1e-9);
}

TEST_CASE("warm start from a strictly feasible hint") {
  const MaxDetProblem prob = trace_box(2, 4.0);
  const std::vector<Matrix> start{Matrix::identity(2)};
  const MaxDetSolution sol = solve_maxdet(prob, &start);
  CHECK(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(std::log(2.0)).epsilon(1e-7));
}

TEST_CASE("check_feasibility centers the unit interval") {
  MaxDetProblem prob;
  const int vx = prob.add_variable("x", 1, 1);
  AffineMatrixExpr x_expr(1);
  x_expr.add_term(vx, Matrix::identity(1), Matrix::identity(1));
  prob.add_lmi(x_expr);
  AffineScalarExpr ub;
  ub.constant = -1.0;
  ub.terms.push_back({vx, Matrix::identity(1)});
  prob.add_scalar_ineq(ub);
  const FeasibilityReport rep = check_feasibility(prob);
  CHECK(rep.feasible);
  CHECK(rep.margin == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(rep.point[0](0, 0) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("incompatible interval reports its infeasibility gap") {
  // x >= 1 and x <= -1: best midpoint x = 0 misses both by 1
  MaxDetProblem prob;
  const int vx = prob.add_variable("x", 1, 1);
  AffineMatrixExpr lower(1);
  lower.set_constant(Matrix{{-1.0}});
  lower.add_term(vx, Matrix::identity(1), Matrix::identity(1));
  prob.add_lmi(lower);
  AffineScalarExpr ub;
  ub.constant = 1.0;
  ub.terms.push_back({vx, Matrix::identity(1)});
  prob.add_scalar_ineq(ub);
  AffineMatrixExpr shifted(1);
  shifted.set_constant(Matrix{{3.0}});
  shifted.add_term(vx, Matrix::identity(1), Matrix::identity(1));
  prob.add_objective_logdet(shifted);

  const FeasibilityReport rep = check_feasibility(prob);
  CHECK_FALSE(rep.feasible);
  CHECK(rep.margin == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK_THROWS_AS(solve_maxdet(prob), Infeasible);
}

TEST_CASE("single-point feasible set is handled by the built-in relaxation") {
  // X >= 0 and -X >= 0 pin X at the origin; the objective term stays regular
  MaxDetProblem prob;
  const int vX = prob.add_symmetric_variable("X", 2);
  AffineMatrixExpr pos(2);
  pos.add_term(vX, Matrix::identity(2), Matrix::identity(2));
  AffineMatrixExpr neg(2);
  neg.add_term(vX, -1.0 * Matrix::identity(2), Matrix::identity(2));
  prob.add_lmi(pos);
  prob.add_lmi(neg);
  AffineMatrixExpr shifted(2);
  shifted.set_constant(Matrix::identity(2));
  shifted.add_term(vX, Matrix::identity(2), Matrix::identity(2));
  prob.add_objective_logdet(shifted);

  const MaxDetSolution sol = solve_maxdet(prob);
  CHECK(sol.status == SolveStatus::kOptimal);
  CHECK(std::abs(sol.objective) < 1e-7);
  CHECK(sol.values[0].max_abs() < 1e-7);
  CHECK(sol.min_lmi_eig >= -1e-7);
}

TEST_CASE("equality constraints are eliminated before the barrier runs") {
  // maximize (1/2) log(1 + y) with x = y, x <= 1, y >= 0
  MaxDetProblem prob;
  const int vx = prob.add_variable("x", 1, 1);
  const int vy = prob.add_variable("y", 1, 1);
  AffineScalarExpr eq;
  eq.terms.push_back({vx, Matrix::identity(1)});
  eq.terms.push_back({vy, -1.0 * Matrix::identity(1)});
  prob.add_scalar_eq(eq);
  AffineScalarExpr ub;
  ub.constant = -1.0;
  ub.terms.push_back({vx, Matrix::identity(1)});
  prob.add_scalar_ineq(ub);
  AffineMatrixExpr y_expr(1);
  y_expr.add_term(vy, Matrix::identity(1), Matrix::identity(1));
  prob.add_lmi(y_expr);
  AffineMatrixExpr obj(1);
  obj.set_constant(Matrix::identity(1));
  obj.add_term(vy, Matrix::identity(1), Matrix::identity(1));
  prob.add_objective_logdet(obj);

  const MaxDetSolution sol = solve_maxdet(prob);
  CHECK(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-7));
  CHECK(sol.values[0](0, 0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sol.values[1](0, 0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("contradictory equalities are rejected") {
  MaxDetProblem prob;
  const int vx = prob.add_variable("x", 1, 1);
  AffineScalarExpr h0;
  h0.terms.push_back({vx, Matrix::identity(1)});
  prob.add_scalar_eq(h0);  // x = 0
  AffineScalarExpr h1;
  h1.constant = -1.0;
  h1.terms.push_back({vx, Matrix::identity(1)});
  prob.add_scalar_eq(h1);  // x = 1
  AffineMatrixExpr obj(1);
  obj.set_constant(Matrix::identity(1));
  obj.add_term(vx, Matrix::identity(1), Matrix::identity(1));
  prob.add_objective_logdet(obj);

  CHECK_THROWS_AS(solve_maxdet(prob), Infeasible);
  const FeasibilityReport rep = check_feasibility(prob);
  CHECK_FALSE(rep.feasible);
  CHECK(rep.margin == -std::numeric_limits<double>::infinity());
}

TEST_CASE("expressions that are not symmetric as functions are rejected") {
  MaxDetProblem prob;
  const int vB = prob.add_variable("B", 2, 1);
  AffineMatrixExpr bad(2);
  bad.set_constant(Matrix::identity(2));
  // B times a row selector is not a symmetric function of B
  bad.add_term(vB, Matrix::identity(2), Matrix{{1.0, 0.0}});
  prob.add_lmi(bad);
  AffineMatrixExpr obj(2);
  obj.set_constant(Matrix::identity(2));
  prob.add_objective_logdet(obj);
  CHECK_THROWS_AS(solve_maxdet(prob), NumericalFailure);
}

TEST_CASE("pack and unpack round trip") {
  MaxDetProblem prob;
  prob.add_symmetric_variable("X", 2);
  prob.add_variable("B", 2, 1);
  const std::vector<Matrix> point{Matrix{{1.0, 2.0}, {2.0, 3.0}}, Matrix{{4.0}, {5.0}}};
  const std::vector<double> coords = pack_point(prob, point);
  REQUIRE(coords.size() == 5);  // upper triangle of X plus both B entries
  CHECK(coords[0] == 1.0);
  CHECK(coords[1] == 2.0);
  CHECK(coords[2] == 3.0);
  CHECK(coords[3] == 4.0);
  CHECK(coords[4] == 5.0);
  const std::vector<Matrix> back = unpack_point(prob, coords);
  CHECK((back[0] - point[0]).max_abs() == 0.0);
  CHECK((back[1] - point[1]).max_abs() == 0.0);
}

TEST_CASE("barrier gradient matches finite differences") {
  // one symmetric and one rectangular variable, block-embedded LMIs, a
  // symmetrized cross term in the objective, and a trace inequality
  MaxDetProblem prob;
  const int vX = prob.add_symmetric_variable("X", 2);
  const int vB = prob.add_variable("B", 2, 1);

  const Matrix A{{0.3, 0.0}, {0.1, 0.2}};
  const Matrix E{{1.0, 0.0}};
  AffineMatrixExpr obj(2);
  obj.set_constant(Matrix::identity(2));
  obj.add_term(vX, Matrix::identity(2), Matrix::identity(2));
  obj.add_sym_pair(vB, A, E);
  prob.add_objective_logdet(obj);

  AffineMatrixExpr lower(2);
  lower.set_constant(0.5 * Matrix::identity(2));
  lower.add_term(vX, Matrix::identity(2), Matrix::identity(2));
  prob.add_lmi(lower);

  // [[I, B], [B', 1]] >= 0, i.e. B'B <= 1
  AffineMatrixExpr gram(3);
  Matrix corner(3, 3);
  corner.set_block(0, 0, Matrix::identity(2));
  corner(2, 2) = 1.0;
  gram.set_constant(corner);
  Matrix embed(3, 2);
  embed.set_block(0, 0, Matrix::identity(2));
  gram.add_sym_pair(vB, embed, Matrix{{0.0, 0.0, 1.0}});
  prob.add_lmi(gram);

  AffineScalarExpr tr;
  tr.constant = -2.0;
  tr.terms.push_back({vX, Matrix::identity(2)});
  prob.add_scalar_ineq(tr);

  const std::vector<Matrix> point{Matrix{{0.1, 0.02}, {0.02, 0.15}}, Matrix{{0.2}, {-0.1}}};
  std::mt19937 gen(23);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (const double t : {1.0, 37.5}) {
    const BarrierEval at = eval_barrier(prob, point, t);
    std::vector<double> x = pack_point(prob, point);
    REQUIRE(at.gradient.size() == x.size());
    for (int probe = 0; probe < 10; ++probe) {
      std::vector<double> dir(x.size());
      double norm = 0.0;
      for (auto& d : dir) {
        d = dist(gen);
        norm += d * d;
      }
      norm = std::sqrt(norm);
      const double h = 1e-6;
      std::vector<double> xp = x;
      std::vector<double> xm = x;
      for (size_t a = 0; a < x.size(); ++a) {
        xp[a] += h * dir[a] / norm;
        xm[a] -= h * dir[a] / norm;
      }
      const BarrierEval fp = eval_barrier(prob, unpack_point(prob, xp), t);
      const BarrierEval fm = eval_barrier(prob, unpack_point(prob, xm), t);
      const double fd = (fp.value - fm.value) / (2.0 * h);
      double analytic = 0.0;
      for (size_t a = 0; a < x.size(); ++a) analytic += at.gradient[a] * dir[a] / norm;
      CHECK(fd == doctest::Approx(analytic).epsilon(1e-5));
    }
  }
}
