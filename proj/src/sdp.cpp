#include "fbcap/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fbcap/errors.hpp"
#include "fbcap/matops.hpp"

namespace fbcap {

// The solver is a standard logarithmic-barrier interior point method. For
//   maximize f(x) = (1/2) sum_k log det S_k(x) + c^T x + c0
//   s.t.     L_j(x) >= 0,  g_j(x) <= 0
// it repeatedly centers
//   phi_t(x) = -t f(x) - sum_j log det(L_j(x) + shift I) - sum_j log(-g_j(x))
// by damped Newton steps, increasing t tenfold until nu/t falls below the
// requested tolerance, where nu = sum_j dim(L_j) + #ineqs bounds the
// suboptimality of the t-center. All derivatives are exact: with
// M(x) = M0 + sum_a x_a D_a,
//   d/da   log det M = tr(M^-1 D_a)
//   d2/dab log det M = -tr(M^-1 D_a M^-1 D_b).
// Every LMI is relaxed by `shift` (default 1e-9) so programs whose optima
// pin a block to the boundary, or whose feasible sets have empty interior,
// still center cleanly; the induced objective error is far below the
// solver tolerance. Equalities are eliminated beforehand by restricting to
// an affine subspace x = x0 + N z with N an orthonormal null-space basis.

void AffineMatrixExpr::set_constant(const Matrix& C) {
  if (C.rows() != dim() || C.cols() != dim())
    throw DimensionMismatch("expression constant has the wrong dimension");
  constant_ = C;
}

void AffineMatrixExpr::add_constant(const Matrix& C) {
  if (C.rows() != dim() || C.cols() != dim())
    throw DimensionMismatch("expression constant has the wrong dimension");
  constant_ += C;
}

void AffineMatrixExpr::add_term(int var, const Matrix& A, const Matrix& B, TermOp op) {
  if (var < 0) throw DimensionMismatch("expression term references an invalid variable");
  if (A.rows() != dim() || B.cols() != dim())
    throw DimensionMismatch("expression term has the wrong outer dimension");
  terms_.push_back({var, A, B, op});
}

void AffineMatrixExpr::add_sym_pair(int var, const Matrix& A, const Matrix& B) {
  add_term(var, A, B, TermOp::kPlain);
  add_term(var, B.transpose(), A.transpose(), TermOp::kTransposed);
}

void AffineMatrixExpr::add_product(const Matrix& Lhs, const AffineMatrixExpr& src,
                                   const Matrix& Rhs, bool transpose_src) {
  if (Lhs.cols() != src.dim() || Rhs.rows() != src.dim() || Lhs.rows() != dim() ||
      Rhs.cols() != dim())
    throw DimensionMismatch("add_product shape mismatch");
  add_constant(Lhs * (transpose_src ? src.constant().transpose() : src.constant()) * Rhs);
  for (const AffineTerm& t : src.terms()) {
    if (!transpose_src) {
      add_term(t.var, Lhs * t.A, t.B * Rhs, t.op);
    } else {
      // (A X B)^T = B^T X^T A^T and (A X^T B)^T = B^T X A^T
      const TermOp flipped = t.op == TermOp::kPlain ? TermOp::kTransposed : TermOp::kPlain;
      add_term(t.var, Lhs * t.B.transpose(), t.A.transpose() * Rhs, flipped);
    }
  }
}

int MaxDetProblem::add_variable(const std::string& name, int rows, int cols) {
  if (rows < 1 || cols < 1) throw DimensionMismatch("variable " + name + " must be nonempty");
  variables_.push_back({name, rows, cols, false});
  return static_cast<int>(variables_.size()) - 1;
}

int MaxDetProblem::add_symmetric_variable(const std::string& name, int n) {
  if (n < 1) throw DimensionMismatch("variable " + name + " must be nonempty");
  variables_.push_back({name, n, n, true});
  return static_cast<int>(variables_.size()) - 1;
}

void MaxDetProblem::add_objective_logdet(const AffineMatrixExpr& S) {
  objective_logdets_.push_back(S);
}

void MaxDetProblem::add_lmi(const AffineMatrixExpr& L) { lmis_.push_back(L); }

void MaxDetProblem::add_scalar_ineq(const AffineScalarExpr& g) { scalar_ineqs_.push_back(g); }

void MaxDetProblem::add_scalar_eq(const AffineScalarExpr& h) { scalar_eqs_.push_back(h); }

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kMaxIterations:
      return "max_iterations";
    case SolveStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

namespace {

constexpr double kPhase1Cap = 1e8;          // margin variable upper bound
constexpr double kSymmetryCheckTol = 1e-9;  // compiled expressions must be symmetric

struct Layout {
  int offset = 0;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
  int count = 0;
};

int coord_index(const Layout& l, int i, int j) {
  if (!l.symmetric) return l.offset + i * l.cols + j;
  if (i > j) std::swap(i, j);
  return l.offset + i * l.rows - i * (i + 1) / 2 + j;
}

std::vector<Layout> make_layout(const std::vector<VariableSpec>& vars, int* total) {
  std::vector<Layout> layout;
  int off = 0;
  for (const VariableSpec& v : vars) {
    Layout l;
    l.offset = off;
    l.rows = v.rows;
    l.cols = v.cols;
    l.symmetric = v.symmetric;
    l.count = v.symmetric ? v.rows * (v.rows + 1) / 2 : v.rows * v.cols;
    off += l.count;
    layout.push_back(l);
  }
  *total = off;
  return layout;
}

// M(x) = M0 + sum_a x_a D_a with symmetric D_a, sparse over coordinates
struct LinMat {
  int dim = 0;
  Matrix M0;
  std::vector<std::pair<int, Matrix>> jac;
};

struct LinScalar {
  double c0 = 0.0;
  std::vector<std::pair<int, double>> coef;
};

struct Compiled {
  std::vector<Layout> layout;
  int ncoord = 0;
  std::vector<LinMat> objectives;  // each contributes (1/2) log det
  std::vector<LinMat> lmis;
  std::vector<LinScalar> ineqs;
  std::vector<LinScalar> eqs;
  std::vector<double> lin;
  double obj_const = 0.0;
};

// D += A(:, col_a) * B(row_b, :)
void add_outer(Matrix& D, const Matrix& A, const Matrix& B, int col_a, int row_b) {
  for (int r = 0; r < D.rows(); ++r) {
    const double a = A(r, col_a);
    if (a == 0.0) continue;
    for (int c = 0; c < D.cols(); ++c) D(r, c) += a * B(row_b, c);
  }
}

LinMat compile_expr(const AffineMatrixExpr& e, const std::vector<VariableSpec>& vars,
                    const std::vector<Layout>& layout, const char* what) {
  if (e.dim() < 1) throw DimensionMismatch(std::string(what) + ": empty expression");
  LinMat out;
  out.dim = e.dim();
  if (e.constant().asymmetry() > kSymmetryCheckTol * (1.0 + e.constant().max_abs()))
    throw NumericalFailure(std::string(what) + ": constant block is not symmetric");
  out.M0 = e.constant().symmetrized();

  std::map<int, Matrix> acc;
  for (const AffineTerm& t : e.terms()) {
    if (t.var < 0 || t.var >= static_cast<int>(vars.size()))
      throw DimensionMismatch(std::string(what) + ": term references an unknown variable");
    const VariableSpec& v = vars[t.var];
    const Layout& l = layout[t.var];
    const int xr = t.op == TermOp::kPlain ? v.rows : v.cols;
    const int xc = t.op == TermOp::kPlain ? v.cols : v.rows;
    if (t.A.cols() != xr || t.B.rows() != xc)
      throw DimensionMismatch(std::string(what) + ": term shape mismatch on variable " + v.name);
    if (!v.symmetric) {
      for (int i = 0; i < v.rows; ++i) {
        for (int j = 0; j < v.cols; ++j) {
          Matrix& D = acc.try_emplace(coord_index(l, i, j), Matrix(out.dim, out.dim)).first->second;
          if (t.op == TermOp::kPlain)
            add_outer(D, t.A, t.B, i, j);  // A E_ij B
          else
            add_outer(D, t.A, t.B, j, i);  // A E_ji B, the derivative through X^T
        }
      }
    } else {
      // symmetric variables use the basis E_ij + E_ji (i < j) and E_ii,
      // under which X and X^T contribute identically
      for (int i = 0; i < v.rows; ++i) {
        for (int j = i; j < v.cols; ++j) {
          Matrix& D = acc.try_emplace(coord_index(l, i, j), Matrix(out.dim, out.dim)).first->second;
          add_outer(D, t.A, t.B, i, j);
          if (i != j) add_outer(D, t.A, t.B, j, i);
        }
      }
    }
  }
  for (auto& [a, D] : acc) {
    if (D.max_abs() < 1e-300) continue;
    if (D.asymmetry() > kSymmetryCheckTol * (1.0 + D.max_abs()))
      throw NumericalFailure(std::string(what) + ": expression is not a symmetric function");
    out.jac.emplace_back(a, D.symmetrized());
  }
  return out;
}

LinScalar compile_scalar(const AffineScalarExpr& e, const std::vector<VariableSpec>& vars,
                         const std::vector<Layout>& layout, const char* what) {
  LinScalar out;
  out.c0 = e.constant;
  std::map<int, double> acc;
  for (const auto& [var, C] : e.terms) {
    if (var < 0 || var >= static_cast<int>(vars.size()))
      throw DimensionMismatch(std::string(what) + ": term references an unknown variable");
    const VariableSpec& v = vars[var];
    const Layout& l = layout[var];
    if (C.rows() != v.rows || C.cols() != v.cols)
      throw DimensionMismatch(std::string(what) + ": coefficient shape mismatch on variable " +
                              v.name);
    if (!v.symmetric) {
      for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j) acc[coord_index(l, i, j)] += C(i, j);
    } else {
      for (int i = 0; i < v.rows; ++i)
        for (int j = i; j < v.cols; ++j)
          acc[coord_index(l, i, j)] += i == j ? C(i, i) : C(i, j) + C(j, i);
    }
  }
  for (const auto& [a, c] : acc)
    if (c != 0.0) out.coef.emplace_back(a, c);
  return out;
}

Compiled compile(const MaxDetProblem& prob) {
  Compiled c;
  c.layout = make_layout(prob.variables(), &c.ncoord);
  c.lin.assign(c.ncoord, 0.0);
  c.obj_const = prob.objective_constant();
  for (const auto& e : prob.objective_logdets())
    c.objectives.push_back(compile_expr(e, prob.variables(), c.layout, "objective"));
  for (const auto& e : prob.lmis())
    c.lmis.push_back(compile_expr(e, prob.variables(), c.layout, "lmi"));
  for (const auto& e : prob.scalar_ineqs())
    c.ineqs.push_back(compile_scalar(e, prob.variables(), c.layout, "inequality"));
  for (const auto& e : prob.scalar_eqs())
    c.eqs.push_back(compile_scalar(e, prob.variables(), c.layout, "equality"));
  return c;
}

Matrix eval_mat(const LinMat& f, const std::vector<double>& x) {
  Matrix M = f.M0;
  for (const auto& [a, D] : f.jac) {
    const double xa = x[a];
    if (xa == 0.0) continue;
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j) M(i, j) += xa * D(i, j);
  }
  return M;
}

double eval_scalar(const LinScalar& f, const std::vector<double>& x) {
  double v = f.c0;
  for (const auto& [a, c] : f.coef) v += c * x[a];
  return v;
}

double logdet_from_factor(const Matrix& L) {
  double s = 0.0;
  for (int i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

double trace_product(const Matrix& A, const Matrix& B) {
  double s = 0.0;
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) s += A(i, j) * B(j, i);
  return s;
}

// x = x0 + N z restriction capturing the equality constraints
struct Elimination {
  bool trivial = true;
  std::vector<double> x0;
  Matrix N;  // ncoord x nfree, orthonormal columns
};

std::vector<double> restore(const Elimination& elim, const std::vector<double>& z) {
  if (elim.trivial) return z;
  std::vector<double> x = elim.x0;
  for (int a = 0; a < elim.N.rows(); ++a)
    for (int b = 0; b < elim.N.cols(); ++b) x[a] += elim.N(a, b) * z[b];
  return x;
}

// Rewrites c over the free coordinates. Returns false when the equality
// system is inconsistent.
bool eliminate_equalities(Compiled& c, Elimination& elim) {
  elim.x0.assign(c.ncoord, 0.0);
  if (c.eqs.empty()) {
    elim.trivial = true;
    return true;
  }
  const int k = static_cast<int>(c.eqs.size());
  const int n = c.ncoord;
  Matrix E(k, n);
  Matrix d(k, 1);
  for (int r = 0; r < k; ++r) {
    for (const auto& [a, coef] : c.eqs[r].coef) E(r, a) = coef;
    d(r, 0) = -c.eqs[r].c0;
  }
  const Matrix x0m = pinv(E) * d;
  double scale = 1.0 + d.max_abs();
  if ((E * x0m - d).max_abs() > 1e-8 * scale) return false;
  for (int a = 0; a < n; ++a) elim.x0[a] = x0m(a, 0);

  // null space of E from the eigenvectors of E^T E; the threshold sits far
  // above the O(eps)*lmax error of computed eigenvalues so exact null
  // directions are never mistaken for range
  const SymmetricEig eig = eig_symmetric(E.transpose() * E);
  const double lmax = std::max(eig.values.empty() ? 0.0 : eig.values.back(), 0.0);
  const double thr = std::max(1e-12 * lmax, 1e-300);
  int nfree = 0;
  for (double v : eig.values)
    if (v <= thr) ++nfree;
  elim.N = Matrix(n, nfree);
  int col = 0;
  for (int j = 0; j < n; ++j) {
    if (eig.values[j] <= thr) {
      for (int i = 0; i < n; ++i) elim.N(i, col) = eig.vectors(i, j);
      ++col;
    }
  }
  elim.trivial = false;

  Compiled reduced;
  reduced.ncoord = nfree;
  reduced.obj_const = c.obj_const;
  reduced.lin.assign(nfree, 0.0);
  for (int a = 0; a < n; ++a) reduced.obj_const += c.lin[a] * elim.x0[a];
  for (int b = 0; b < nfree; ++b)
    for (int a = 0; a < n; ++a) reduced.lin[b] += c.lin[a] * elim.N(a, b);
  auto reduce_mat = [&](const LinMat& f) {
    LinMat g;
    g.dim = f.dim;
    g.M0 = eval_mat(f, elim.x0);
    std::map<int, Matrix> acc;
    for (const auto& [a, D] : f.jac) {
      for (int b = 0; b < nfree; ++b) {
        const double w = elim.N(a, b);
        if (std::fabs(w) < 1e-15) continue;
        Matrix& T = acc.try_emplace(b, Matrix(f.dim, f.dim)).first->second;
        for (int i = 0; i < f.dim; ++i)
          for (int j = 0; j < f.dim; ++j) T(i, j) += w * D(i, j);
      }
    }
    for (auto& [b, D] : acc)
      if (D.max_abs() > 1e-300) g.jac.emplace_back(b, D);
    return g;
  };
  auto reduce_scalar = [&](const LinScalar& f) {
    LinScalar g;
    g.c0 = eval_scalar(f, elim.x0);
    for (int b = 0; b < nfree; ++b) {
      double w = 0.0;
      for (const auto& [a, coef] : f.coef) w += coef * elim.N(a, b);
      if (std::fabs(w) > 1e-15) g.coef.emplace_back(b, w);
    }
    return g;
  };
  for (const auto& f : c.objectives) reduced.objectives.push_back(reduce_mat(f));
  for (const auto& f : c.lmis) reduced.lmis.push_back(reduce_mat(f));
  for (const auto& f : c.ineqs) reduced.ineqs.push_back(reduce_scalar(f));
  c = std::move(reduced);
  return true;
}

struct BarrierOutcome {
  std::vector<double> x;
  SolveStatus status = SolveStatus::kOptimal;
  double kkt = std::numeric_limits<double>::infinity();
  int newton_iterations = 0;
  std::vector<double> stage_objectives;
};

class BarrierEngine {
 public:
  BarrierEngine(const Compiled& c, double shift, const SolveOptions& opts)
      : c_(c), shift_(shift), opts_(opts) {
    for (const auto& f : c.lmis) nu_ += f.dim;
    nu_ += static_cast<double>(c.ineqs.size());
  }

  double objective(const std::vector<double>& x) const {
    double f = c_.obj_const;
    for (int a = 0; a < c_.ncoord; ++a) f += c_.lin[a] * x[a];
    for (const auto& s : c_.objectives) f += 0.5 * logdet_pd(eval_mat(s, x));
    return f;
  }

  // phi_t, or nothing when x is not strictly feasible
  std::optional<double> value(const std::vector<double>& x, double t) const {
    double phi = -t * c_.obj_const;
    for (int a = 0; a < c_.ncoord; ++a) phi -= t * c_.lin[a] * x[a];
    Matrix L;
    for (const auto& f : c_.objectives) {
      if (!try_cholesky(eval_mat(f, x), L)) return std::nullopt;
      phi -= 0.5 * t * logdet_from_factor(L);
    }
    for (const auto& f : c_.lmis) {
      Matrix M = eval_mat(f, x);
      for (int i = 0; i < M.rows(); ++i) M(i, i) += shift_;
      if (!try_cholesky(M, L)) return std::nullopt;
      phi -= logdet_from_factor(L);
    }
    for (const auto& f : c_.ineqs) {
      const double v = eval_scalar(f, x);
      if (v >= 0.0) return std::nullopt;
      phi -= std::log(-v);
    }
    return phi;
  }

  bool derivatives(const std::vector<double>& x, double t, double* phi, std::vector<double>* grad,
                   Matrix* hess) const {
    const int n = c_.ncoord;
    *phi = -t * c_.obj_const;
    grad->assign(n, 0.0);
    *hess = Matrix(n, n);
    for (int a = 0; a < n; ++a) {
      *phi -= t * c_.lin[a] * x[a];
      (*grad)[a] = -t * c_.lin[a];
    }
    auto add_logdet_block = [&](const LinMat& f, double w, bool shifted) {
      Matrix M = eval_mat(f, x);
      if (shifted)
        for (int i = 0; i < M.rows(); ++i) M(i, i) += shift_;
      Matrix L;
      if (!try_cholesky(M, L)) return false;
      *phi -= w * logdet_from_factor(L);
      const Matrix inv = solve_spd(M, Matrix::identity(f.dim));
      std::vector<Matrix> Q;
      Q.reserve(f.jac.size());
      for (const auto& [a, D] : f.jac) Q.push_back(inv * D);
      for (size_t ia = 0; ia < f.jac.size(); ++ia) {
        const int a = f.jac[ia].first;
        (*grad)[a] -= w * Q[ia].trace();
        for (size_t ib = ia; ib < f.jac.size(); ++ib) {
          const int b = f.jac[ib].first;
          const double h = w * trace_product(Q[ia], Q[ib]);
          (*hess)(a, b) += h;
          if (a != b) (*hess)(b, a) += h;
        }
      }
      return true;
    };
    for (const auto& f : c_.objectives)
      if (!add_logdet_block(f, 0.5 * t, false)) return false;
    for (const auto& f : c_.lmis)
      if (!add_logdet_block(f, 1.0, true)) return false;
    for (const auto& f : c_.ineqs) {
      const double v = eval_scalar(f, x);
      if (v >= 0.0) return false;
      *phi -= std::log(-v);
      for (const auto& [a, ca] : f.coef) {
        (*grad)[a] += ca / (-v);
        for (const auto& [b, cb] : f.coef) (*hess)(a, b) += ca * cb / (v * v);
      }
    }
    return true;
  }

  // Newton centering of phi_t from the strictly feasible x. phi_t is
  // self-concordant, so the damped step 1/(1 + lambda) decreases it by at
  // least lambda - log(1 + lambda) and the full step contracts once
  // lambda <= 1/4; no function-value comparisons are needed (at large t
  // they would drown in rounding noise), only domain membership.
  bool center(std::vector<double>& x, double t, BarrierOutcome* out) {
    double prev1 = std::numeric_limits<double>::infinity();
    double prev2 = prev1;
    for (int iter = 0; iter < opts_.max_newton_per_stage; ++iter) {
      double phi;
      std::vector<double> grad;
      Matrix hess;
      if (!derivatives(x, t, &phi, &grad, &hess))
        throw NumericalFailure("barrier iterate left the feasible region");
      const std::vector<double> step = solve_newton(hess, grad);
      double lambda2 = 0.0;
      for (int a = 0; a < c_.ncoord; ++a) lambda2 -= grad[a] * step[a];
      if (lambda2 < 0.0) lambda2 = 0.0;
      if (0.5 * lambda2 <= opts_.newton_tol) return true;
      // decrement no longer shrinking near the floor set by gradient
      // rounding: the point is centered to numerical precision
      if (0.5 * lambda2 <= 1e4 * opts_.newton_tol && lambda2 >= 0.9 * std::min(prev1, prev2))
        return true;
      prev2 = prev1;
      prev1 = lambda2;
      ++out->newton_iterations;

      const double lambda = std::sqrt(lambda2);
      double alpha = lambda > 0.25 ? 1.0 / (1.0 + lambda) : 1.0;
      bool moved = false;
      std::vector<double> trial(c_.ncoord);
      while (alpha >= 1e-18) {
        for (int a = 0; a < c_.ncoord; ++a) trial[a] = x[a] + alpha * step[a];
        if (value(trial, t).has_value()) {
          x = trial;
          moved = true;
          break;
        }
        alpha *= 0.6;
      }
      if (!moved) {
        if (0.5 * lambda2 <= 1e4 * opts_.newton_tol) return true;  // at numerical precision
        throw NumericalFailure("barrier line search stalled");
      }
    }
    return false;  // stage iteration budget exhausted
  }

  BarrierOutcome run(std::vector<double> x, double stop_tol) {
    BarrierOutcome out;
    double t = 1.0;
    while (true) {
      if (!center(x, t, &out)) {
        out.status = SolveStatus::kMaxIterations;
        break;
      }
      out.stage_objectives.push_back(objective(x));
      if (nu_ == 0.0 || nu_ / t < stop_tol) break;
      t *= 10.0;
      if (t > 1e16) {
        out.status = SolveStatus::kMaxIterations;
        break;
      }
    }
    double phi;
    std::vector<double> grad;
    Matrix hess;
    if (derivatives(x, t, &phi, &grad, &hess)) {
      double gmax = 0.0;
      for (double g : grad) gmax = std::max(gmax, std::fabs(g));
      out.kkt = gmax / t;
    }
    out.x = std::move(x);
    return out;
  }

 private:
  std::vector<double> solve_newton(const Matrix& hess, const std::vector<double>& grad) const {
    const int n = c_.ncoord;
    Matrix rhs(n, 1);
    for (int a = 0; a < n; ++a) rhs(a, 0) = -grad[a];
    double dmax = 0.0;
    for (int a = 0; a < n; ++a) dmax = std::max(dmax, std::fabs(hess(a, a)));
    double ridge = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Matrix H = hess;
      if (ridge > 0.0)
        for (int a = 0; a < n; ++a) H(a, a) += ridge;
      Matrix L;
      if (try_cholesky(H, L)) {
        const Matrix s = solve_spd(H, rhs);
        std::vector<double> step(n);
        for (int a = 0; a < n; ++a) step[a] = s(a, 0);
        return step;
      }
      ridge = ridge == 0.0 ? 1e-12 * (1.0 + dmax) : ridge * 100.0;
    }
    throw NumericalFailure("Newton system is numerically indefinite");
  }

  const Compiled& c_;
  double shift_ = 0.0;
  SolveOptions opts_;
  double nu_ = 0.0;
};

// Margin maximization: one extra coordinate t, constraints
// L_j(x) + shift I >= t I, S_k(x) >= t I, g_j(x) <= -t, t <= cap,
// objective t. Started at x = 0 with t below every slack.
Compiled build_phase1(const Compiled& c, double shift) {
  Compiled p;
  p.layout = c.layout;
  p.ncoord = c.ncoord + 1;
  const int tc = c.ncoord;
  auto with_margin = [&](const LinMat& f, double extra_shift) {
    LinMat g = f;
    for (int i = 0; i < g.dim; ++i) g.M0(i, i) += extra_shift;
    Matrix negI(g.dim, g.dim);
    for (int i = 0; i < g.dim; ++i) negI(i, i) = -1.0;
    g.jac.emplace_back(tc, negI);
    return g;
  };
  for (const auto& f : c.lmis) p.lmis.push_back(with_margin(f, shift));
  for (const auto& f : c.objectives) p.lmis.push_back(with_margin(f, 0.0));
  for (const auto& f : c.ineqs) {
    LinScalar g = f;
    g.coef.emplace_back(tc, 1.0);
    p.ineqs.push_back(g);
  }
  LinScalar cap;
  cap.c0 = -kPhase1Cap;
  cap.coef.emplace_back(tc, 1.0);
  p.ineqs.push_back(cap);
  p.lin.assign(p.ncoord, 0.0);
  p.lin[tc] = 1.0;
  return p;
}

std::vector<double> phase1_start(const Compiled& p) {
  // at x = 0 each block's slack is its constant term's smallest eigenvalue
  const int tc = p.ncoord - 1;
  double tmin = kPhase1Cap;
  for (const auto& f : p.lmis) tmin = std::min(tmin, min_eig_sym(f.M0));
  for (const auto& f : p.ineqs) tmin = std::min(tmin, -f.c0);
  std::vector<double> x(p.ncoord, 0.0);
  x[tc] = tmin - 1.0;
  return x;
}

struct Phase1Result {
  double margin = 0.0;
  std::vector<double> x;  // without the margin coordinate
};

Phase1Result run_phase1(const Compiled& c, const SolveOptions& opts) {
  const Compiled p1 = build_phase1(c, opts.lmi_shift);
  // Polish is wasted on the margin search: any point with a solidly
  // positive margin serves as a start, so the search runs at the default
  // centering tolerance even when the caller polishes the main solve.
  SolveOptions relaxed = opts;
  relaxed.newton_tol = std::max(opts.newton_tol, 1e-9);
  BarrierEngine engine(p1, 0.0, relaxed);
  const double stop_tol = std::min(1e-10, opts.tol);
  BarrierOutcome out = engine.run(phase1_start(p1), stop_tol);
  Phase1Result res;
  res.margin = out.x[c.ncoord];
  res.x.assign(out.x.begin(), out.x.begin() + c.ncoord);
  // A search that stalls after certifying a strictly feasible point has
  // still done its job; only an inconclusive stall is an error.
  if (out.status != SolveStatus::kOptimal && res.margin <= 1e3 * opts.lmi_shift)
    throw NumericalFailure("feasibility search did not converge");
  return res;
}

// min slack of the original (unshifted) constraints at x
double constraint_margin(const Compiled& c, const std::vector<double>& x) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& f : c.lmis) margin = std::min(margin, min_eig_sym(eval_mat(f, x)));
  for (const auto& f : c.ineqs) margin = std::min(margin, -eval_scalar(f, x));
  return margin;
}

std::vector<double> pack_coords(const std::vector<Layout>& layout, int ncoord,
                                const std::vector<VariableSpec>& vars,
                                const std::vector<Matrix>& point) {
  if (point.size() != vars.size())
    throw DimensionMismatch("point has the wrong number of variables");
  std::vector<double> x(ncoord, 0.0);
  for (size_t v = 0; v < vars.size(); ++v) {
    const VariableSpec& spec = vars[v];
    const Layout& l = layout[v];
    if (point[v].rows() != spec.rows || point[v].cols() != spec.cols)
      throw DimensionMismatch("point entry for " + spec.name + " has the wrong shape");
    if (!spec.symmetric) {
      for (int i = 0; i < spec.rows; ++i)
        for (int j = 0; j < spec.cols; ++j) x[coord_index(l, i, j)] = point[v](i, j);
    } else {
      for (int i = 0; i < spec.rows; ++i)
        for (int j = i; j < spec.cols; ++j)
          x[coord_index(l, i, j)] = 0.5 * (point[v](i, j) + point[v](j, i));
    }
  }
  return x;
}

std::vector<Matrix> unpack_coords(const std::vector<Layout>& layout,
                                  const std::vector<VariableSpec>& vars,
                                  const std::vector<double>& x) {
  std::vector<Matrix> point;
  point.reserve(vars.size());
  for (size_t v = 0; v < vars.size(); ++v) {
    const VariableSpec& spec = vars[v];
    const Layout& l = layout[v];
    Matrix M(spec.rows, spec.cols);
    for (int i = 0; i < spec.rows; ++i)
      for (int j = 0; j < spec.cols; ++j) M(i, j) = x[coord_index(l, i, j)];
    point.push_back(M);
  }
  return point;
}

}  // namespace

FeasibilityReport check_feasibility(const MaxDetProblem& prob, const SolveOptions& opts) {
  Compiled c = compile(prob);
  const Compiled original = c;
  Elimination elim;
  FeasibilityReport report;
  if (!eliminate_equalities(c, elim)) {
    report.feasible = false;
    report.margin = -std::numeric_limits<double>::infinity();
    return report;
  }
  if (c.lmis.empty() && c.ineqs.empty() && c.objectives.empty()) {
    report.feasible = true;
    report.margin = std::numeric_limits<double>::infinity();
    report.point = unpack_coords(original.layout, prob.variables(), elim.x0);
    return report;
  }
  const Phase1Result p1 = run_phase1(c, opts);
  const std::vector<double> x = restore(elim, p1.x);
  report.margin = constraint_margin(original, x);
  report.feasible = report.margin > opts.feas_tol;
  report.point = unpack_coords(original.layout, prob.variables(), x);
  return report;
}

MaxDetSolution solve_maxdet(const MaxDetProblem& prob, const std::vector<Matrix>* start,
                            const SolveOptions& opts) {
  Compiled c = compile(prob);
  const Compiled original = c;
  Elimination elim;
  if (!eliminate_equalities(c, elim)) throw Infeasible("equality constraints are inconsistent");

  BarrierEngine engine(c, opts.lmi_shift, opts);
  std::vector<double> z0;
  bool have_start = false;
  if (start != nullptr) {
    std::vector<double> x = pack_coords(original.layout, original.ncoord, prob.variables(), *start);
    bool eq_ok = true;
    for (const auto& h : original.eqs)
      if (std::fabs(eval_scalar(h, x)) > 1e-8 * (1.0 + std::fabs(h.c0))) eq_ok = false;
    if (eq_ok) {
      if (elim.trivial) {
        z0 = x;
      } else {
        z0.assign(c.ncoord, 0.0);
        for (int b = 0; b < c.ncoord; ++b)
          for (int a = 0; a < original.ncoord; ++a)
            z0[b] += elim.N(a, b) * (x[a] - elim.x0[a]);
      }
      have_start = engine.value(z0, 1.0).has_value();
    }
  }
  if (!have_start) {
    const Phase1Result p1 = run_phase1(c, opts);
    if (p1.margin <= 0.01 * opts.lmi_shift)
      throw Infeasible("problem has no strictly feasible point");
    z0 = p1.x;
    if (!engine.value(z0, 1.0).has_value())
      throw NumericalFailure("feasibility point fails strict feasibility");
  }

  BarrierOutcome out = engine.run(std::move(z0), opts.tol);
  const std::vector<double> x = restore(elim, out.x);

  MaxDetSolution sol;
  sol.values = unpack_coords(original.layout, prob.variables(), x);
  sol.status = out.status;
  sol.kkt_residual = out.kkt;
  sol.newton_iterations = out.newton_iterations;
  sol.stage_objectives = std::move(out.stage_objectives);
  sol.min_lmi_eig = std::numeric_limits<double>::infinity();
  for (const auto& f : original.lmis)
    sol.min_lmi_eig = std::min(sol.min_lmi_eig, min_eig_sym(eval_mat(f, x)));
  if (original.lmis.empty()) sol.min_lmi_eig = 0.0;
  double obj = original.obj_const;
  for (int a = 0; a < original.ncoord; ++a) obj += original.lin[a] * x[a];
  for (const auto& s : original.objectives) obj += 0.5 * logdet_pd(eval_mat(s, x));
  sol.objective = obj;
  return sol;
}

BarrierEval eval_barrier(const MaxDetProblem& prob, const std::vector<Matrix>& point, double t,
                         const SolveOptions& opts) {
  if (!prob.scalar_eqs().empty())
    throw UserError("eval_barrier does not support equality-constrained problems");
  const Compiled c = compile(prob);
  BarrierEngine engine(c, opts.lmi_shift, opts);
  const std::vector<double> x = pack_coords(c.layout, c.ncoord, prob.variables(), point);
  BarrierEval out;
  Matrix hess;
  if (!engine.derivatives(x, t, &out.value, &out.gradient, &hess))
    throw NotPositiveDefinite("eval_barrier requires a strictly feasible point");
  return out;
}

std::vector<double> pack_point(const MaxDetProblem& prob, const std::vector<Matrix>& point) {
  int total = 0;
  const std::vector<Layout> layout = make_layout(prob.variables(), &total);
  return pack_coords(layout, total, prob.variables(), point);
}

std::vector<Matrix> unpack_point(const MaxDetProblem& prob, const std::vector<double>& coords) {
  int total = 0;
  const std::vector<Layout> layout = make_layout(prob.variables(), &total);
  if (static_cast<int>(coords.size()) != total)
    throw DimensionMismatch("coordinate vector has the wrong length");
  return unpack_coords(layout, prob.variables(), coords);
}

}  // namespace fbcap
