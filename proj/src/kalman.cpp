#include "fbcap/kalman.hpp"

#include <cmath>
#include <sstream>

#include "fbcap/detect.hpp"
#include "fbcap/errors.hpp"
#include "fbcap/matops.hpp"

namespace fbcap {

namespace {

constexpr double kInnovationFloor = 1e-10;
constexpr double kDivergenceNorm = 1e12;

}  // namespace

EncoderStep encoder_step(const ChannelModel& model, const Matrix& Sigma) {
  if (Sigma.rows() != model.n || Sigma.cols() != model.n)
    throw DimensionMismatch("Sigma must match the state dimension");
  const Matrix S = Sigma.symmetrized();
  EncoderStep step;
  step.Psi = (model.H * S * model.H.transpose() + model.V).symmetrized();
  if (min_eig_sym(step.Psi) <= kInnovationFloor)
    throw SingularInnovation("innovation covariance is numerically singular");
  const Matrix cross = model.F * S * model.H.transpose() + model.L;
  step.Kp = solve_spd(step.Psi, cross.transpose()).transpose();
  step.Sigma_next =
      (model.F * S * model.F.transpose() + model.W - step.Kp * step.Psi * step.Kp.transpose())
          .symmetrized();
  return step;
}

RiccatiSolution solve_dare(const ChannelModel& model, double tol, int max_iter) {
  if (!detectable_pbh(model.F, model.H).detectable)
    throw NotDetectable("(F, H) is not detectable; no stationary covariance exists");

  // Start far above the maximal solution so the iteration descends onto it.
  const double rho = spectral_radius(model.F);
  const double gap = std::max(0.0, 1.0 - rho);
  const double c = 10.0 * (1.0 + model.W.frobenius_norm()) / (gap * gap + 0.01);
  Matrix Sigma = c * Matrix::identity(model.n);

  RiccatiSolution sol;
  sol.residual = HUGE_VAL;
  for (int it = 1; it <= max_iter; ++it) {
    const EncoderStep step = encoder_step(model, Sigma);
    sol.residual = (step.Sigma_next - Sigma).frobenius_norm();
    Sigma = step.Sigma_next;
    sol.iterations = it;
    if (Sigma.frobenius_norm() > kDivergenceNorm)
      throw RiccatiDivergence("Riccati iteration diverged");
    if (sol.residual < tol) break;
  }
  if (sol.residual >= tol) {
    std::ostringstream msg;
    msg << "Riccati iteration missed tolerance " << tol << " after " << sol.iterations
        << " iterations (residual " << sol.residual << ")";
    throw RiccatiDivergence(msg.str());
  }

  const EncoderStep fixed = encoder_step(model, Sigma);
  sol.Sigma = Sigma;
  sol.Kp = fixed.Kp;
  sol.Psi = fixed.Psi;
  sol.closed_loop_radius = spectral_radius(model.F - fixed.Kp * model.H);
  if (sol.closed_loop_radius >= 1.0 + 1e-8)
    throw RiccatiDivergence("Riccati solution is not stabilizing");
  return sol;
}

DecoderStep decoder_step(const ChannelModel& model, const EncoderStep& enc, const Matrix& Gamma,
                         const Matrix& M, const Matrix& SigmaHat) {
  if (Gamma.rows() != model.m || Gamma.cols() != model.n)
    throw DimensionMismatch("Gamma must be m x n");
  if (M.rows() != model.m || M.cols() != model.m) throw DimensionMismatch("M must be m x m");
  if (SigmaHat.rows() != model.n || SigmaHat.cols() != model.n)
    throw DimensionMismatch("SigmaHat must be n x n");

  const Matrix Shat = SigmaHat.symmetrized();
  const Matrix Spinv = pinv(Shat, 1e-9);
  // The policy must not steer along directions the decoder cannot see:
  // Gamma has to vanish on the kernel of SigmaHat.
  const Matrix leak = Gamma - Gamma * Shat * Spinv;
  if (leak.max_abs() > 1e-8)
    throw OrthogonalityViolated("Gamma acts outside the range of SigmaHat");

  const Matrix K = Gamma * Spinv;
  const Matrix Acl = model.F + model.G * K;
  const Matrix Ccl = model.H + model.J * K;
  const Matrix Msym = M.symmetrized();

  DecoderStep step;
  step.PsiY = (Ccl * Shat * Ccl.transpose() + model.J * Msym * model.J.transpose() + enc.Psi)
                  .symmetrized();
  if (min_eig_sym(step.PsiY) <= 1e-12)
    throw SingularOutputCovariance("output covariance is numerically singular");
  const Matrix cross = Acl * Shat * Ccl.transpose() + model.G * Msym * model.J.transpose() +
                       enc.Kp * enc.Psi;
  step.KY = solve_spd(step.PsiY, cross.transpose()).transpose();
  step.SigmaHat_next = (Acl * Shat * Acl.transpose() + model.G * Msym * model.G.transpose() +
                        enc.Kp * enc.Psi * enc.Kp.transpose() -
                        step.KY * step.PsiY * step.KY.transpose())
                           .symmetrized();
  return step;
}

}  // namespace fbcap
