#include "fbcap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fbcap/detect.hpp"
#include "fbcap/errors.hpp"
#include "fbcap/matops.hpp"

namespace fbcap {

namespace {

// Variable handles for one time step of the program. A negative handle
// means the corresponding block is identically zero (the first step has
// SigmaHat_1 = 0, which also forces Gamma_1 = 0).
struct StepRefs {
  int vGamma = -1;
  int vPi = -1;
  int vSigma = -1;      // SigmaHat at the current step
  int vSigmaNext = -1;  // SigmaHat after the step; equals vSigma when stationary
};

// [[Pi, Gamma], [Gamma^T, SigmaHat]] >= 0. Also carries SigmaHat >= 0 and
// Pi >= 0 as principal blocks.
AffineMatrixExpr coupling_lmi(int m, int n, const StepRefs& r) {
  const Matrix Em = vcat(Matrix::identity(m), Matrix::zeros(n, m));
  const Matrix En = vcat(Matrix::zeros(m, n), Matrix::identity(n));
  AffineMatrixExpr e(m + n);
  e.add_term(r.vPi, Em, Em.transpose());
  e.add_sym_pair(r.vGamma, Em, En.transpose());
  e.add_term(r.vSigma, En, En.transpose());
  return e;
}

// Psi_Y = H SigmaHat H^T + J Pi J^T + H Gamma^T J^T + J Gamma H^T + Psi,
// the output innovation covariance under the policy. Also the objective
// argument.
AffineMatrixExpr innovation_expr(const ChannelModel& mod, const Matrix& Psi, const StepRefs& r) {
  AffineMatrixExpr e(mod.p);
  e.set_constant(Psi);
  e.add_term(r.vPi, mod.J, mod.J.transpose());
  if (r.vSigma >= 0) e.add_term(r.vSigma, mod.H, mod.H.transpose());
  if (r.vGamma >= 0) e.add_sym_pair(r.vGamma, mod.J, mod.H.transpose());
  return e;
}

// [[Omega, Ky Psi_Y], [Psi_Y Ky^T, Psi_Y]] >= 0, the Schur-complement form
// of the decoder covariance recursion SigmaHat_next >= f(Gamma, Pi,
// SigmaHat). Every block is affine; the decoder gain Ky itself is
// recovered only after the solve.
AffineMatrixExpr recursion_lmi(const ChannelModel& mod, const Matrix& Kp, const Matrix& Psi,
                               const StepRefs& r) {
  const int n = mod.n;
  const int p = mod.p;
  const Matrix E1 = vcat(Matrix::identity(n), Matrix::zeros(p, n));
  const Matrix E2 = vcat(Matrix::zeros(n, p), Matrix::identity(p));
  const Matrix E1t = E1.transpose();
  const Matrix E2t = E2.transpose();
  const Matrix Ft = mod.F.transpose();
  const Matrix Gt = mod.G.transpose();
  const Matrix Ht = mod.H.transpose();
  const Matrix Jt = mod.J.transpose();
  const Matrix KpPsi = Kp * Psi;

  AffineMatrixExpr big(n + p);
  Matrix C(n + p, n + p);
  C += E1 * (KpPsi * Kp.transpose()) * E1t;
  C += E1 * KpPsi * E2t;
  C += E2 * KpPsi.transpose() * E1t;
  C += E2 * Psi * E2t;
  big.set_constant(C);

  // Omega block
  if (r.vSigma >= 0) big.add_term(r.vSigma, E1 * mod.F, Ft * E1t);
  big.add_term(r.vPi, E1 * mod.G, Gt * E1t);
  if (r.vGamma >= 0) big.add_sym_pair(r.vGamma, E1 * mod.G, Ft * E1t);
  big.add_term(r.vSigmaNext, -1.0 * E1, E1t);

  // Ky Psi_Y block and its transpose
  if (r.vSigma >= 0) big.add_sym_pair(r.vSigma, E1 * mod.F, Ht * E2t);
  if (r.vGamma >= 0) {
    big.add_term(r.vGamma, E1 * mod.F, Jt * E2t, TermOp::kTransposed);
    big.add_term(r.vGamma, E2 * mod.J, Ft * E1t);
    big.add_sym_pair(r.vGamma, E1 * mod.G, Ht * E2t);
  }
  big.add_sym_pair(r.vPi, E1 * mod.G, Jt * E2t);

  // Psi_Y block
  if (r.vSigma >= 0) big.add_term(r.vSigma, E2 * mod.H, Ht * E2t);
  big.add_term(r.vPi, E2 * mod.J, Jt * E2t);
  if (r.vGamma >= 0) big.add_sym_pair(r.vGamma, E2 * mod.J, Ht * E2t);
  return big;
}

Matrix eval_innovation(const ChannelModel& mod, const Matrix& Psi, const Matrix& Gamma,
                       const Matrix& Pi, const Matrix& SigmaHat) {
  Matrix out = Psi + mod.J * Pi * mod.J.transpose() + mod.H * SigmaHat * mod.H.transpose();
  const Matrix X = mod.J * Gamma * mod.H.transpose();
  out += X + X.transpose();
  return out.symmetrized();
}

// Strips boundary-relaxation noise from a solved policy: SigmaHat
// eigenvalues at rounding level are zeroed and Gamma is projected onto
// the range of the result, which the coupling constraint forces at any
// exact optimum. Without this, SigmaHat^+ amplifies O(shift) residue
// into O(1) garbage gains whenever the true optimum is singular.
void clean_policy(Matrix& Gamma, Matrix& SigmaHat) {
  SigmaHat = SigmaHat.symmetrized();
  const int n = SigmaHat.rows();
  const double floor = 1e-8 * (1.0 + SigmaHat.max_abs());
  const SymmetricEig eig = eig_symmetric(SigmaHat);
  Matrix cleaned(n, n);
  Matrix range(n, n);
  for (int k = 0; k < n; ++k) {
    if (eig.values[k] <= floor) continue;
    Matrix v(n, 1);
    for (int i = 0; i < n; ++i) v(i, 0) = eig.vectors(i, k);
    const Matrix outer = v * v.transpose();
    cleaned += eig.values[k] * outer;
    range += outer;
  }
  SigmaHat = cleaned;
  Gamma = Gamma * range;
}

// Pi - Gamma SigmaHat^+ Gamma^T projected onto the PSD cone. Rounding-level
// negative eigenvalues are clipped; anything materially negative means the
// solved point violates the coupling constraint.
Matrix recover_dither(const Matrix& Pi, const Matrix& Gamma, const Matrix& SigmaHat) {
  // M is the Schur complement of SigmaHat in [[Pi, Gamma], [Gamma^T,
  // SigmaHat]]. When the coupling block is PSD only up to a slack -eta
  // (barrier boundary noise), congruence with [I, -X] for X = Gamma
  // SigmaHat^+ bounds the damage: M >= -eta (1 + ||X||^2) I. Anything more
  // negative than that certified bound is a genuine violation. The
  // amplification is real: an active coupling block with a small SigmaHat
  // eigenvalue turns a 1e-9 slack into a visible negative M eigenvalue.
  const Matrix X = Gamma * pinv(SigmaHat);
  const int m = Pi.rows();
  const int n = SigmaHat.rows();
  Matrix block(m + n, m + n);
  block.set_block(0, 0, Pi);
  block.set_block(0, m, Gamma);
  block.set_block(m, 0, Gamma.transpose());
  block.set_block(m, m, SigmaHat);
  const double eta = std::max(0.0, -min_eig_sym(block.symmetrized())) + 1e-9;
  const double amp = 1.0 + X.frobenius_norm() * X.frobenius_norm();
  const double tol = eta * amp + 1e-12 * (1.0 + Pi.max_abs());

  const Matrix S =
      (Pi - X * Gamma.transpose() - Gamma * X.transpose() + X * SigmaHat * X.transpose())
          .symmetrized();
  const SymmetricEig eig = eig_symmetric(S);
  Matrix M(m, m);
  for (int k = 0; k < m; ++k) {
    double lam = eig.values[k];
    if (lam < -tol)
      throw NumericalFailure("input covariance does not dominate its feedback part");
    if (lam < 0.0) lam = 0.0;
    Matrix v(m, 1);
    for (int i = 0; i < m; ++i) v(i, 0) = eig.vectors(i, k);
    M += lam * (v * v.transpose());
  }
  return M.symmetrized();
}

}  // namespace

StationaryProgram build_stationary_program(const ChannelModel& model, double power) {
  if (power < 0.0) throw OutOfRange("power budget must be nonnegative");
  StationaryProgram sp;
  sp.stationary = solve_dare(model);

  MaxDetProblem& prob = sp.prob;
  sp.vGamma = prob.add_variable("Gamma", model.m, model.n);
  sp.vPi = prob.add_symmetric_variable("Pi", model.m);
  sp.vSigmaHat = prob.add_symmetric_variable("SigmaHat", model.n);
  const StepRefs r{sp.vGamma, sp.vPi, sp.vSigmaHat, sp.vSigmaHat};

  prob.add_lmi(coupling_lmi(model.m, model.n, r));
  prob.add_lmi(recursion_lmi(model, sp.stationary.Kp, sp.stationary.Psi, r));
  prob.add_objective_logdet(innovation_expr(model, sp.stationary.Psi, r));
  prob.add_objective_constant(-0.5 * logdet_pd(sp.stationary.Psi));

  AffineScalarExpr tr;
  tr.constant = -power;
  tr.terms.emplace_back(sp.vPi, Matrix::identity(model.m));
  prob.add_scalar_ineq(tr);
  return sp;
}

// Capacity solves polish each center harder than the engine default so the
// reported stationarity residual lands well below the 1e-6 the downstream
// diagnostics promise; the extra Newton steps are negligible at these sizes.
SolveOptions polished(SolveOptions opts) {
  opts.newton_tol = std::min(opts.newton_tol, 1e-12);
  return opts;
}

// With no power budget the only feasible input covariance is zero, so the
// program collapses to the zero policy; solving is neither needed nor
// possible (the barrier has no interior point to start from).
CapacitySolution zero_power_solution(const ChannelModel& model) {
  CapacitySolution out;
  out.stationary = solve_dare(model);
  out.solver_status = SolveStatus::kOptimal;
  out.Gamma = Matrix::zeros(model.m, model.n);
  out.Pi = Matrix::zeros(model.m, model.m);
  out.SigmaHat = Matrix::zeros(model.n, model.n);
  out.M = Matrix::zeros(model.m, model.m);
  out.PsiY = out.stationary.Psi;
  out.Ky = out.stationary.Kp;
  out.Omega =
      (out.stationary.Kp * out.stationary.Psi * out.stationary.Kp.transpose()).symmetrized();
  const auto [Acl, Bcl] = closed_loop_pair(model, out.Gamma, out.SigmaHat);
  out.closed_loop_detectable = detectable_pbh(Acl, Bcl).detectable;
  return out;
}

CapacitySolution stationary_capacity(const ChannelModel& model, double power,
                                     const SolveOptions& opts) {
  if (power == 0.0) return zero_power_solution(model);
  StationaryProgram sp = build_stationary_program(model, power);
  const MaxDetSolution sol = solve_maxdet(sp.prob, nullptr, polished(opts));

  CapacitySolution out;
  out.stationary = sp.stationary;
  out.solver_status = sol.status;
  out.kkt_residual = sol.kkt_residual;
  out.min_lmi_eig = sol.min_lmi_eig;
  out.Gamma = sol.values[sp.vGamma];
  out.Pi = sol.values[sp.vPi].symmetrized();
  out.SigmaHat = sol.values[sp.vSigmaHat];
  clean_policy(out.Gamma, out.SigmaHat);
  out.M = recover_dither(out.Pi, out.Gamma, out.SigmaHat);

  const Matrix& Kp = sp.stationary.Kp;
  const Matrix& Psi = sp.stationary.Psi;
  out.PsiY = eval_innovation(model, Psi, out.Gamma, out.Pi, out.SigmaHat);
  const Matrix KyPsiY = model.F * out.SigmaHat * model.H.transpose() +
                        model.F * out.Gamma.transpose() * model.J.transpose() +
                        model.G * out.Gamma * model.H.transpose() +
                        model.G * out.Pi * model.J.transpose() + Kp * Psi;
  out.Ky = solve_spd(out.PsiY, KyPsiY.transpose()).transpose();
  const Matrix cross = model.G * out.Gamma * model.F.transpose();
  out.Omega = (model.F * out.SigmaHat * model.F.transpose() +
               model.G * out.Pi * model.G.transpose() + cross + cross.transpose() +
               Kp * Psi * Kp.transpose() - out.SigmaHat)
                  .symmetrized();
  out.rate_nats = 0.5 * (logdet_pd(out.PsiY) - logdet_pd(Psi));
  out.rate_bits = out.rate_nats / std::log(2.0);

  const auto [Acl, Bcl] = closed_loop_pair(model, out.Gamma, out.SigmaHat);
  out.closed_loop_detectable = detectable_pbh(Acl, Bcl).detectable;
  return out;
}

FiniteHorizonSolution finite_horizon_capacity(const ChannelModel& model, double power,
                                              int n_steps, const SolveOptions& opts) {
  if (n_steps < 1) throw OutOfRange("horizon must be at least one step");
  if (power < 0.0) throw OutOfRange("power budget must be nonnegative");
  if (power == 0.0) {
    FiniteHorizonSolution out;
    out.n_steps = n_steps;
    out.solver_status = SolveStatus::kOptimal;
    out.per_step.assign(n_steps, FiniteHorizonStep{Matrix::zeros(model.m, model.n),
                                                   Matrix::zeros(model.m, model.m),
                                                   Matrix::zeros(model.n, model.n), 0.0});
    return out;
  }

  // Time-varying predictor quantities along the horizon, starting from the
  // known initial state covariance.
  std::vector<Matrix> Kp(n_steps);
  std::vector<Matrix> Psi(n_steps);
  Matrix Sigma = model.Sigma1;
  for (int i = 0; i < n_steps; ++i) {
    const EncoderStep st = encoder_step(model, Sigma);
    Kp[i] = st.Kp;
    Psi[i] = st.Psi;
    Sigma = st.Sigma_next;
  }

  MaxDetProblem prob;
  std::vector<int> vGamma(n_steps, -1);
  std::vector<int> vPi(n_steps, -1);
  // vSigma[i] holds SigmaHat_{i+1}; SigmaHat_1 = 0 is not a variable.
  std::vector<int> vSigma(n_steps + 1, -1);
  for (int i = 0; i < n_steps; ++i) {
    const std::string tag = std::to_string(i + 1);
    if (i > 0) vGamma[i] = prob.add_variable("Gamma" + tag, model.m, model.n);
    vPi[i] = prob.add_symmetric_variable("Pi" + tag, model.m);
  }
  for (int i = 1; i <= n_steps; ++i)
    vSigma[i] = prob.add_symmetric_variable("SigmaHat" + std::to_string(i + 1), model.n);

  for (int i = 0; i < n_steps; ++i) {
    const StepRefs r{vGamma[i], vPi[i], vSigma[i], vSigma[i + 1]};
    if (i == 0) {
      AffineMatrixExpr pi_psd(model.m);
      pi_psd.add_term(vPi[0], Matrix::identity(model.m), Matrix::identity(model.m));
      prob.add_lmi(pi_psd);
    } else {
      prob.add_lmi(coupling_lmi(model.m, model.n, r));
    }
    prob.add_lmi(recursion_lmi(model, Kp[i], Psi[i], r));
    prob.add_objective_logdet(innovation_expr(model, Psi[i], r));
    prob.add_objective_constant(-0.5 * logdet_pd(Psi[i]));
  }
  AffineMatrixExpr last_psd(model.n);
  last_psd.add_term(vSigma[n_steps], Matrix::identity(model.n), Matrix::identity(model.n));
  prob.add_lmi(last_psd);

  AffineScalarExpr tr;
  tr.constant = -power;
  for (int i = 0; i < n_steps; ++i)
    tr.terms.emplace_back(vPi[i], (1.0 / n_steps) * Matrix::identity(model.m));
  prob.add_scalar_ineq(tr);

  const MaxDetSolution sol = solve_maxdet(prob, nullptr, polished(opts));

  FiniteHorizonSolution out;
  out.n_steps = n_steps;
  out.solver_status = sol.status;
  out.kkt_residual = sol.kkt_residual;
  out.min_lmi_eig = sol.min_lmi_eig;
  out.per_step.resize(n_steps);
  Matrix SigmaHat(model.n, model.n);  // SigmaHat_1 = 0
  for (int i = 0; i < n_steps; ++i) {
    FiniteHorizonStep& step = out.per_step[i];
    step.Gamma = i > 0 ? sol.values[vGamma[i]] : Matrix::zeros(model.m, model.n);
    step.Pi = sol.values[vPi[i]].symmetrized();
    step.SigmaHat_next = sol.values[vSigma[i + 1]].symmetrized();
    const Matrix PsiY = eval_innovation(model, Psi[i], step.Gamma, step.Pi, SigmaHat);
    step.rate_nats = 0.5 * (logdet_pd(PsiY) - logdet_pd(Psi[i]));
    out.total_rate_nats += step.rate_nats;
    SigmaHat = step.SigmaHat_next;
  }
  out.normalized_rate_nats = out.total_rate_nats / n_steps;
  out.normalized_rate_bits = out.normalized_rate_nats / std::log(2.0);
  return out;
}

double waterfill_nofb(double beta, double power, double noise_var, double input_gain,
                      int grid_size) {
  if (noise_var <= 0.0) throw OutOfRange("noise variance must be positive");
  if (input_gain == 0.0) throw OutOfRange("input gain must be nonzero");
  if (power < 0.0) throw OutOfRange("power budget must be nonnegative");
  if (grid_size < 16) throw OutOfRange("spectrum grid too coarse");
  if (std::abs(std::abs(beta) - 1.0) < 1e-12)
    throw UnitCircleNoise("noise pole on the unit circle, spectrum not integrable");
  if (power == 0.0) return 0.0;

  // Noise spectrum referred to a unit-gain input, on a uniform grid over
  // [0, pi] (the spectrum is even).
  const double g2 = input_gain * input_gain;
  const double pi = std::acos(-1.0);
  std::vector<double> noise(grid_size);
  for (int k = 0; k < grid_size; ++k) {
    const double w = pi * k / (grid_size - 1);
    noise[k] = noise_var / ((1.0 - 2.0 * beta * std::cos(w) + beta * beta) * g2);
  }
  const auto weight = [&](int k) { return (k == 0 || k == grid_size - 1) ? 0.5 : 1.0; };
  const auto spent = [&](double level) {
    double acc = 0.0;
    for (int k = 0; k < grid_size; ++k) acc += weight(k) * std::max(0.0, level - noise[k]);
    return acc / (grid_size - 1);
  };

  // The spent power is 1-Lipschitz and increasing in the water level, so
  // plain bisection pins it to the budget.
  double lo = *std::min_element(noise.begin(), noise.end());
  double hi = *std::max_element(noise.begin(), noise.end()) + 2.0 * power + 1.0;
  double level = lo;
  for (int it = 0; it < 200; ++it) {
    level = 0.5 * (lo + hi);
    const double p = spent(level);
    if (std::abs(p - power) <= 1e-9) break;
    (p > power ? hi : lo) = level;
  }

  double rate = 0.0;
  for (int k = 0; k < grid_size; ++k) {
    const double s = std::max(0.0, level - noise[k]);
    rate += weight(k) * 0.5 * std::log1p(s / noise[k]);
  }
  return rate / (grid_size - 1);
}

double ar1_capacity_oracle(double beta, double power) {
  if (beta < 0.0 || beta >= 1.0) throw OutOfRange("closed form needs 0 <= beta < 1");
  if (power <= 0.0) throw OutOfRange("power budget must be positive");
  // power x^2 (1 + beta x)^2 - (1 - x^2) is negative at 0, positive at 1,
  // and increasing on (0, 1), so the root is unique.
  const auto f = [&](double x) {
    const double a = 1.0 + beta * x;
    return power * x * x * a * a - (1.0 - x * x);
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return -std::log2(0.5 * (lo + hi));
}

namespace {

Matrix randn(std::mt19937& gen, int r, int c) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix A(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) A(i, j) = d(gen);
  return A;
}

ChannelModel sample_probe_model(std::mt19937& gen, const ProbeConfig& cfg) {
  std::uniform_real_distribution<double> urad(cfg.radius_min, cfg.radius_max);
  std::uniform_real_distribution<double> ucoin(0.0, 1.0);
  std::uniform_real_distribution<double> uscale(0.5, 1.5);
  std::uniform_int_distribution<int> udim(1, std::max(1, cfg.max_io_dim));
  const int n = cfg.state_dim;
  const int m = udim(gen);
  const int p = udim(gen);
  for (;;) {
    Matrix F = randn(gen, n, n);
    const double rho = spectral_radius(F);
    if (rho > 1e-9) F *= urad(gen) / rho;
    Matrix H = randn(gen, p, n);
    if (ucoin(gen) < 0.15) H = Matrix::zeros(p, n);  // blind channels, stable F only
    if (!detectable_pbh(F, H).detectable) continue;
    const Matrix G = randn(gen, n, m);
    const Matrix J = randn(gen, p, m);
    const Matrix C = randn(gen, n + p, n + p);
    const Matrix joint =
        (uscale(gen) * (C * C.transpose()) + 0.05 * Matrix::identity(n + p)).symmetrized();
    return build_model(F, G, H, J, joint.block(0, 0, n, n), joint.block(0, n, n, p),
                       joint.block(n, n, p, p));
  }
}

}  // namespace

ProbeReport conjecture_probe(const ProbeConfig& config, int trials, unsigned seed) {
  if (trials < 0) throw OutOfRange("trial count must be nonnegative");
  if (config.state_dim < 1 || config.max_io_dim < 1)
    throw OutOfRange("probe dimensions must be positive");
  ProbeReport rep;
  rep.trials = trials;
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> upow(config.power_min, config.power_max);
  for (int t = 0; t < trials; ++t) {
    ProbeInstance inst;
    inst.model = sample_probe_model(gen, config);
    inst.power = upow(gen);
    try {
      const CapacitySolution sol = stationary_capacity(inst.model, inst.power);
      if (sol.solver_status != SolveStatus::kOptimal) {
        inst.note = "barrier stopped before reaching tolerance";
        ++rep.solver_failures;
        rep.offenders.push_back(inst);
        continue;
      }
      inst.solved = true;
      inst.detectable = sol.closed_loop_detectable;
      if (!inst.detectable) {
        ++rep.violations;
        rep.offenders.push_back(inst);
      }
    } catch (const Error& err) {
      inst.note = err.what();
      ++rep.solver_failures;
      rep.offenders.push_back(inst);
    }
  }
  return rep;
}

}  // namespace fbcap
