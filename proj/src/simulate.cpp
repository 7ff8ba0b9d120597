#include "fbcap/simulate.hpp"

#include <cmath>
#include <cstdint>

#include "fbcap/errors.hpp"
#include "fbcap/kalman.hpp"
#include "fbcap/matops.hpp"

namespace fbcap {

namespace {

// 64-bit finalizer with full avalanche; chaining it over the counter words
// gives an independent stream per (trial, step, draw) triple.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// uniform on the open interval (0, 1); the offset keeps log() finite
double uniform01(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t h = mix64(mix64(mix64(seed) ^ a) ^ b);
  return static_cast<double>(h >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// counter-based Gaussian: every draw consumes its own Box-Muller pair, so
// there is no generator state to carry between trials or steps
double normal(std::uint64_t seed, std::uint64_t trial, std::uint64_t step, std::uint64_t purpose,
              int k) {
  const std::uint64_t a = (trial << 24) ^ step;
  const std::uint64_t b = (purpose << 56) ^ static_cast<std::uint64_t>(2 * k);
  const double u1 = uniform01(seed, a, b);
  const double u2 = uniform01(seed, a, b + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::acos(-1.0) * u2);
}

// column vector of independent Gaussians mapped through a factor: F z has
// covariance F F^T, which is how rank-deficient covariances are sampled
Matrix sample(const Matrix& factor, std::uint64_t seed, std::uint64_t trial, std::uint64_t step,
              std::uint64_t purpose) {
  Matrix z(factor.cols(), 1);
  for (int k = 0; k < factor.cols(); ++k) z(k, 0) = normal(seed, trial, step, purpose, k);
  return factor * z;
}

// Deterministic second-order recursion of the closed loop under a fixed
// gap gain X and dither covariance M:
//   PsiY_i      = (H + JX) SigmaHat_i (H + JX)^T + J M J^T + Psi_i
//   KY_i PsiY_i = (F + GX) SigmaHat_i (H + JX)^T + G M J^T + Kp_i Psi_i
//   SigmaHat_+  = (F + GX) SigmaHat_i (F + GX)^T + G M G^T
//                 + Kp_i Psi_i Kp_i^T - KY_i PsiY_i KY_i^T
// with the encoder pair (Kp_i, Psi_i) evolving independently of the policy.
struct LoopStep {
  Matrix Kp, Psi;    // encoder filter
  Matrix KY, PsiY;   // decoder filter
  double rate_nats;  // 1/2 (log det PsiY - log det Psi)
};

std::vector<LoopStep> closed_loop_recursion(const ChannelModel& mod, const Matrix& gain,
                                            const Matrix& M, int horizon) {
  if (gain.rows() != mod.m || gain.cols() != mod.n)
    throw DimensionMismatch("feedback gain must be m x n");
  if (M.rows() != mod.m || M.cols() != mod.m)
    throw DimensionMismatch("dither covariance must be m x m");
  if (min_eig_sym(M.symmetrized()) < -1e-8 * (1.0 + M.max_abs()))
    throw JointNoiseNotPSD("dither covariance must be positive semidefinite");

  const Matrix Fx = mod.F + mod.G * gain;
  const Matrix Hx = mod.H + mod.J * gain;
  const Matrix JMJ = mod.J * M * mod.J.transpose();
  const Matrix GMJ = mod.G * M * mod.J.transpose();
  const Matrix GMG = mod.G * M * mod.G.transpose();

  std::vector<LoopStep> steps;
  steps.reserve(horizon);
  Matrix Sigma = mod.Sigma1;
  Matrix SigmaHat(mod.n, mod.n);  // the decoder starts with no gap information
  for (int i = 0; i < horizon; ++i) {
    const EncoderStep enc = encoder_step(mod, Sigma);
    LoopStep st;
    st.Kp = enc.Kp;
    st.Psi = enc.Psi;
    st.PsiY = (Hx * SigmaHat * Hx.transpose() + JMJ + enc.Psi).symmetrized();
    const Matrix C = Fx * SigmaHat * Hx.transpose() + GMJ + enc.Kp * enc.Psi;
    st.KY = solve_spd(st.PsiY, C.transpose()).transpose();
    st.rate_nats = 0.5 * (logdet_pd(st.PsiY) - logdet_pd(enc.Psi));
    SigmaHat = (Fx * SigmaHat * Fx.transpose() + GMG + enc.Kp * enc.Psi * enc.Kp.transpose() -
                st.KY * st.PsiY * st.KY.transpose())
                   .symmetrized();
    Sigma = enc.Sigma_next;
    steps.push_back(std::move(st));
  }
  return steps;
}

}  // namespace

SimPolicy policy_from(const CapacitySolution& solution) {
  return SimPolicy{solution.Gamma, solution.M, solution.SigmaHat};
}

std::vector<double> analytic_rate_trajectory(const ChannelModel& model, const Matrix& gain,
                                             const Matrix& M, int horizon) {
  if (horizon < 1) throw OutOfRange("horizon must be at least one step");
  std::vector<double> rates;
  rates.reserve(horizon);
  for (const LoopStep& st : closed_loop_recursion(model, gain, M, horizon))
    rates.push_back(st.rate_nats);
  return rates;
}

SimResult simulate_policy(const ChannelModel& model, const SimConfig& config) {
  if (config.horizon < 1) throw OutOfRange("horizon must be at least one step");
  if (config.trials < 1) throw OutOfRange("trial count must be at least one");
  const SimPolicy& pol = config.policy;
  if (pol.SigmaHat.rows() != model.n || pol.SigmaHat.cols() != model.n)
    throw DimensionMismatch("policy covariance must be n x n");

  const int n = model.n;
  const int p = model.p;
  const int horizon = config.horizon;
  const Matrix gain = pol.Gamma * pinv(pol.SigmaHat);
  const std::vector<LoopStep> loop = closed_loop_recursion(model, gain, pol.M, horizon);

  // factors for the three random sources; columns = rank actually sampled
  Matrix joint(n + p, n + p);
  joint.set_block(0, 0, model.W);
  joint.set_block(0, n, model.L);
  joint.set_block(n, 0, model.L.transpose());
  joint.set_block(n, n, model.V);
  const Matrix Fjoint = psd_factor(joint);
  const Matrix Fdither = psd_factor(pol.M);
  const Matrix Finit = psd_factor(model.Sigma1);

  constexpr int kMaxLag = 10;
  double power = 0.0;
  Matrix enc_cov(p, p);
  Matrix dec_cov(p, p);
  std::vector<double> lag_num(kMaxLag, 0.0);
  std::vector<double> lag_den(p, 0.0);

  for (int trial = 0; trial < config.trials; ++trial) {
    const auto t = static_cast<std::uint64_t>(trial);
    Matrix s = sample(Finit, config.seed, t, 0, 2);
    Matrix shat(n, 1);
    Matrix shathat(n, 1);
    std::vector<Matrix> recent;  // innovations of the last kMaxLag steps

    for (int i = 0; i < horizon; ++i) {
      const LoopStep& st = loop[i];
      const auto step = static_cast<std::uint64_t>(i + 1);
      const Matrix m_i = sample(Fdither, config.seed, t, step, 0);
      const Matrix wv = sample(Fjoint, config.seed, t, step, 1);
      const Matrix w = wv.block(0, 0, n, 1);
      const Matrix v = wv.block(n, 0, p, 1);

      const Matrix x = gain * (shat - shathat) + m_i;
      const Matrix y = model.H * s + model.J * x + v;
      const Matrix eps = y - model.H * shat - model.J * x;
      const Matrix ytil = y - model.H * shathat;

      for (int c = 0; c < x.rows(); ++c) power += x(c, 0) * x(c, 0);
      enc_cov += eps * eps.transpose();
      dec_cov += ytil * ytil.transpose();
      for (int c = 0; c < p; ++c) lag_den[c] += eps(c, 0) * eps(c, 0);
      for (int lag = 1; lag <= static_cast<int>(recent.size()); ++lag) {
        const Matrix& past = recent[recent.size() - lag];
        for (int c = 0; c < p; ++c) lag_num[lag - 1] += eps(c, 0) * past(c, 0);
      }
      recent.push_back(eps);
      if (static_cast<int>(recent.size()) > kMaxLag) recent.erase(recent.begin());

      s = model.F * s + model.G * x + w;
      shathat = model.F * shathat + st.KY * ytil;
      shat = model.F * shat + model.G * x + st.Kp * eps;
    }
  }

  const double samples = static_cast<double>(config.trials) * horizon;
  SimResult out;
  out.empirical_power = power / samples;
  out.encoder_innovation_cov = (1.0 / samples) * enc_cov.symmetrized();
  out.empirical_innovation_cov = (1.0 / samples) * dec_cov.symmetrized();
  double den = 0.0;
  for (int c = 0; c < p; ++c) den += lag_den[c];
  for (int lag = 0; lag < kMaxLag; ++lag)
    out.whiteness_maxlag_corr =
        std::max(out.whiteness_maxlag_corr, den > 0.0 ? std::fabs(lag_num[lag]) / den : 0.0);
  double total = 0.0;
  for (const LoopStep& st : loop) total += st.rate_nats;
  out.analytic_rate_nats = total / horizon;
  return out;
}

}  // namespace fbcap
