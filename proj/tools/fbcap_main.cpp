// Command-line front end: model ingestion, Riccati and detectability
// reports, capacity solves, delay sweeps with CSV emission, policy
// simulation, and the closed-loop detectability probe.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fbcap/capacity.hpp"
#include "fbcap/detect.hpp"
#include "fbcap/errors.hpp"
#include "fbcap/kalman.hpp"
#include "fbcap/model.hpp"
#include "fbcap/simulate.hpp"

namespace {

using namespace fbcap;

constexpr double kLn2 = 0.6931471805599453;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string sci3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

const char* yesno(bool b) { return b ? "true" : "false"; }

void kv(const char* key, const std::string& value) {
  std::printf("%s: %s\n", key, value.c_str());
}

std::string matrix_text(const Matrix& A) {
  std::string out = "[";
  for (int i = 0; i < A.rows(); ++i) {
    out += "[";
    for (int j = 0; j < A.cols(); ++j) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.9g", A(i, j));
      out += buf;
      if (j + 1 < A.cols()) out += ", ";
    }
    out += "]";
    if (i + 1 < A.rows()) out += ", ";
  }
  out += "]";
  return out;
}

// Shared model selection: a JSON file, the AR(1) noise family, or the
// memoryless white channel. --snr on the white channel sets the power
// budget directly (unit noise).
struct ModelArgs {
  std::string path;
  bool ar1 = false;
  bool awgn = false;
  double beta = 0.5;
  double noise_var = 1.0;
  double input_gain = 1.0;
  double snr = 1.0;
};

void add_model_flags(CLI::App* cmd, ModelArgs& args) {
  cmd->add_option("--model", args.path, "model JSON file")->check(CLI::ExistingFile);
  cmd->add_flag("--ar1", args.ar1, "first-order autoregressive noise channel");
  cmd->add_option("--beta", args.beta, "AR(1) noise coefficient (default 0.5)");
  cmd->add_option("--noise-var", args.noise_var, "AR(1) innovation variance (default 1)");
  cmd->add_option("--input-gain", args.input_gain, "AR(1) direct input gain (default 1)");
  cmd->add_flag("--awgn", args.awgn, "memoryless white Gaussian channel");
  cmd->add_option("--snr", args.snr, "white-channel signal-to-noise ratio; sets --power");
}

ChannelModel resolve_model(const CLI::App* cmd, const ModelArgs& args, double* power) {
  const int picked = (args.path.empty() ? 0 : 1) + (args.ar1 ? 1 : 0) + (args.awgn ? 1 : 0);
  if (picked == 0) throw OutOfRange("no model given: pass --model <path>, --ar1, or --awgn");
  if (picked > 1) throw OutOfRange("pass exactly one of --model, --ar1, --awgn");
  if (!args.path.empty()) return load_model(args.path);
  if (args.ar1) return make_ar1_channel(args.beta, args.noise_var, args.input_gain);
  const Matrix z = Matrix::zeros(1, 1);
  const Matrix one = Matrix::identity(1);
  if (power != nullptr && cmd->count("--snr") > 0) *power = args.snr;
  return build_model(z, z, z, one, z, z, one, std::nullopt, "awgn");
}

// Rate-unit selection; the sweep CSV is always in bits per the fixed
// column schema.
struct UnitArgs {
  bool nats = false;
};

void add_unit_flags(CLI::App* cmd, UnitArgs& units) {
  auto* bits = cmd->add_flag("--bits", "report rates in bits (default)");
  auto* nats = cmd->add_flag("--nats", units.nats, "report rates in nats");
  bits->excludes(nats);
  nats->excludes(bits);
}

void print_rate(const UnitArgs& units, const char* stem, double nats) {
  std::string key = std::string(stem) + (units.nats ? "_nats" : "_bits");
  kv(key.c_str(), fixed6(units.nats ? nats : nats / kLn2));
}

// The stationary noise spectrum has a non-integrable pole at |beta| = 1,
// where the water-filling routine throws by contract. The filled rate
// still has a finite two-sided limit there (the pole band is never
// watered), so sweeps evaluate the unit-circle grid point as the average
// of the two one-sided rates just off the circle. Offsets much below
// 1e-7 are unusable: (1 - beta)^2 in the spectrum denominator cancels
// catastrophically.
double nofb_rate_nats(double beta, double power, double noise_var, double input_gain) {
  if (std::abs(std::abs(beta) - 1.0) < 1e-12) {
    const double lo = waterfill_nofb(beta * (1.0 - 1e-7), power, noise_var, input_gain);
    const double hi = waterfill_nofb(beta * (1.0 + 1e-7), power, noise_var, input_gain);
    return 0.5 * (lo + hi);
  }
  return waterfill_nofb(beta, power, noise_var, input_gain);
}

void run_validate(const CLI::App* cmd, const ModelArgs& margs) {
  const ChannelModel model = resolve_model(cmd, margs, nullptr);
  const StationaryAssumptions checks = validate_stationary_assumptions(model);
  kv("name", model.name.empty() ? "(unnamed)" : model.name);
  kv("state_dim", std::to_string(model.n));
  kv("input_dim", std::to_string(model.m));
  kv("output_dim", std::to_string(model.p));
  kv("detectable", yesno(checks.detectable));
  kv("sigma1_dominates", yesno(checks.sigma1_dominates));
}

void run_riccati(const CLI::App* cmd, const ModelArgs& margs, double tol) {
  const ChannelModel model = resolve_model(cmd, margs, nullptr);
  const RiccatiSolution sol = solve_dare(model, tol);
  kv("iterations", std::to_string(sol.iterations));
  kv("residual", sci3(sol.residual));
  kv("closed_loop_radius", fixed6(sol.closed_loop_radius));
  kv("sigma", matrix_text(sol.Sigma));
  kv("kp", matrix_text(sol.Kp));
  kv("psi", matrix_text(sol.Psi));
}

void run_detect(const CLI::App* cmd, const ModelArgs& margs) {
  const ChannelModel model = resolve_model(cmd, margs, nullptr);
  const PbhReport pbh = detectable_pbh(model.F, model.H);
  const LmiReport lmi = detectable_lmi(model.F, model.H);
  kv("pbh_detectable", yesno(pbh.detectable));
  kv("lmi_detectable", yesno(lmi.detectable));
  kv("agree", yesno(pbh.detectable == lmi.detectable));
  kv("lmi_margin", sci3(lmi.margin));
}

void run_capacity(const CLI::App* cmd, const ModelArgs& margs, double power, double tol,
                  const UnitArgs& units) {
  const ChannelModel model = resolve_model(cmd, margs, &power);
  SolveOptions opts;
  opts.tol = tol;
  const CapacitySolution sol = stationary_capacity(model, power, opts);
  print_rate(units, "rate", sol.rate_nats);
  double planned = 0.0;
  for (int i = 0; i < sol.Pi.rows(); ++i) planned += sol.Pi(i, i);
  kv("power_used", fixed6(planned));
  kv("closed_loop_detectable", yesno(sol.closed_loop_detectable));
  kv("kkt_residual", sci3(sol.kkt_residual));
  kv("min_lmi_eig", sci3(sol.min_lmi_eig));
  kv("status", to_string(sol.solver_status));
  if (sol.solver_status != SolveStatus::kOptimal)
    throw NumericalFailure("solver stopped before reaching tolerance");
}

void run_finite_horizon(const CLI::App* cmd, const ModelArgs& margs, double power, double tol,
                        int n, const UnitArgs& units) {
  const ChannelModel model = resolve_model(cmd, margs, &power);
  SolveOptions opts;
  opts.tol = tol;
  const FiniteHorizonSolution sol = finite_horizon_capacity(model, power, n, opts);
  kv("n", std::to_string(sol.n_steps));
  print_rate(units, "total_rate", sol.total_rate_nats);
  print_rate(units, "rate_per_symbol", sol.normalized_rate_nats);
  kv("kkt_residual", sci3(sol.kkt_residual));
  kv("min_lmi_eig", sci3(sol.min_lmi_eig));
  kv("status", to_string(sol.solver_status));
  if (sol.solver_status != SolveStatus::kOptimal)
    throw NumericalFailure("solver stopped before reaching tolerance");
}

struct SweepArgs {
  std::string beta_range = "0.1:3.0:0.1";
  std::vector<int> delays = {1};
  bool nofeedback = false;
  double noise_var = 1.0;
  double input_gain = 1.0;
  std::string out_path;
};

void run_sweep(const SweepArgs& args, double power, double tol) {
  double start = 0.0, stop = 0.0, step = 0.0;
  if (std::sscanf(args.beta_range.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3)
    throw OutOfRange("--beta expects start:stop:step");
  if (step <= 0.0) throw OutOfRange("--beta step must be positive");
  if (start > stop) throw OutOfRange("--beta start must not exceed stop");
  std::vector<int> delays = args.delays;
  for (size_t i = 0; i < delays.size(); ++i) {
    if (delays[i] < 1) throw InvalidDelay("delays must be at least 1");
    for (size_t j = i + 1; j < delays.size(); ++j)
      if (delays[i] == delays[j]) throw OutOfRange("delays must be distinct");
  }

  std::vector<double> betas;
  const int count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (int k = 0; k < count; ++k) betas.push_back(start + k * step);

  SolveOptions opts;
  opts.tol = tol;
  std::string csv = "beta,scheme,rate_bits\n";
  for (double beta : betas) {
    const ChannelModel base = make_ar1_channel(beta, args.noise_var, args.input_gain);
    for (int d : delays) {
      const CapacitySolution sol = stationary_capacity(make_delayed(base, d), power, opts);
      const std::string scheme = d == 1 ? "fb" : "delay" + std::to_string(d);
      csv += fixed6(beta) + "," + scheme + "," + fixed6(sol.rate_bits) + "\n";
    }
    if (args.nofeedback) {
      const double nats = nofb_rate_nats(beta, power, args.noise_var, args.input_gain);
      csv += fixed6(beta) + ",nofb," + fixed6(nats / kLn2) + "\n";
    }
  }

  if (args.out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
    return;
  }
  std::ofstream out(args.out_path);
  if (!out) throw OutOfRange("cannot open output file: " + args.out_path);
  out << csv;
  const size_t schemes = delays.size() + (args.nofeedback ? 1 : 0);
  kv("rows", std::to_string(betas.size() * schemes));
  kv("out", args.out_path);
}

void run_waterfill(double beta, double power, double noise_var, double input_gain,
                   const UnitArgs& units) {
  print_rate(units, "rate", waterfill_nofb(beta, power, noise_var, input_gain));
}

void run_simulate(const CLI::App* cmd, const ModelArgs& margs, double power, double tol,
                  int horizon, int trials, std::uint64_t seed, const UnitArgs& units) {
  const ChannelModel model = resolve_model(cmd, margs, &power);
  SolveOptions opts;
  opts.tol = tol;
  const CapacitySolution sol = stationary_capacity(model, power, opts);
  SimConfig config;
  config.horizon = horizon;
  config.trials = trials;
  config.seed = seed;
  config.policy = policy_from(sol);
  const SimResult result = simulate_policy(model, config);

  print_rate(units, "rate", sol.rate_nats);
  print_rate(units, "analytic_rate", result.analytic_rate_nats);
  double planned = 0.0;
  for (int i = 0; i < sol.Pi.rows(); ++i) planned += sol.Pi(i, i);
  kv("planned_power", fixed6(planned));
  kv("empirical_power", fixed6(result.empirical_power));
  const Matrix& psi = sol.stationary.Psi;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < psi.rows(); ++i)
    for (int j = 0; j < psi.cols(); ++j) {
      const double d = result.encoder_innovation_cov(i, j) - psi(i, j);
      num += d * d;
      den += psi(i, j) * psi(i, j);
    }
  kv("innovation_cov_rel_err", sci3(std::sqrt(num) / std::sqrt(den)));
  kv("whiteness_maxlag_corr", sci3(result.whiteness_maxlag_corr));
  kv("whiteness_bound", sci3(4.0 / std::sqrt(static_cast<double>(trials) * horizon)));
}

void run_probe(int trials, int dims, std::uint64_t seed) {
  ProbeConfig config;
  config.state_dim = dims;
  config.max_io_dim = dims;
  const ProbeReport report = conjecture_probe(config, trials, static_cast<unsigned>(seed));
  kv("trials", std::to_string(report.trials));
  kv("violations", std::to_string(report.violations));
  kv("solver_failures", std::to_string(report.solver_failures));
  for (const ProbeInstance& inst : report.offenders) {
    std::string line = "power=" + fixed6(inst.power);
    line += inst.solved ? (inst.detectable ? " solved" : " undetectable") : " unsolved";
    if (!inst.note.empty()) line += " note=" + inst.note;
    kv("offender", line);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feedback capacity of Gaussian channels with linear state-space memory"};
  app.require_subcommand(1);

  double power = 1.0;
  double tol = 1e-8;
  std::uint64_t seed = 0;

  auto* validate = app.add_subcommand("validate", "check model dimensions and assumptions");
  ModelArgs validate_model;
  add_model_flags(validate, validate_model);
  validate->callback([&] { run_validate(validate, validate_model); });

  auto* riccati = app.add_subcommand("riccati", "stationary one-step predictor of the noise");
  ModelArgs riccati_model;
  add_model_flags(riccati, riccati_model);
  riccati->add_option("--tol", tol, "fixed-point tolerance (default 1e-8)");
  riccati->callback([&] { run_riccati(riccati, riccati_model, tol); });

  auto* detect = app.add_subcommand("detect", "detectability of (F, H) by two methods");
  ModelArgs detect_model;
  add_model_flags(detect, detect_model);
  detect->callback([&] { run_detect(detect, detect_model); });

  auto* capacity = app.add_subcommand("capacity", "stationary feedback capacity");
  ModelArgs capacity_model;
  UnitArgs capacity_units;
  add_model_flags(capacity, capacity_model);
  add_unit_flags(capacity, capacity_units);
  capacity->add_option("--power", power, "average input power budget (default 1)");
  capacity->add_option("--tol", tol, "solver duality-gap tolerance (default 1e-8)");
  capacity->callback([&] { run_capacity(capacity, capacity_model, power, tol, capacity_units); });

  auto* finite = app.add_subcommand("finite-horizon", "n-step capacity upper bound");
  ModelArgs finite_model;
  UnitArgs finite_units;
  int horizon_n = 1;
  add_model_flags(finite, finite_model);
  add_unit_flags(finite, finite_units);
  finite->add_option("--n", horizon_n, "horizon length")->required()->check(CLI::PositiveNumber);
  finite->add_option("--power", power, "average input power budget (default 1)");
  finite->add_option("--tol", tol, "solver duality-gap tolerance (default 1e-8)");
  finite->callback(
      [&] { run_finite_horizon(finite, finite_model, power, tol, horizon_n, finite_units); });

  auto* sweep = app.add_subcommand("sweep", "AR(1) rate curves over a noise-coefficient grid");
  SweepArgs sweep_args;
  bool sweep_ar1 = false;
  sweep->add_flag("--ar1", sweep_ar1, "sweep the AR(1) family (the only supported family)");
  sweep->add_option("--beta", sweep_args.beta_range, "grid start:stop:step (default 0.1:3.0:0.1)");
  sweep->add_option("--delays", sweep_args.delays, "feedback delays, comma-separated (default 1)")
      ->delimiter(',');
  sweep->add_flag("--nofeedback", sweep_args.nofeedback, "append the water-filling benchmark");
  sweep->add_option("--noise-var", sweep_args.noise_var, "AR(1) innovation variance (default 1)");
  sweep->add_option("--input-gain", sweep_args.input_gain, "AR(1) direct input gain (default 1)");
  sweep->add_option("--power", power, "average input power budget (default 1)");
  sweep->add_option("--tol", tol, "solver duality-gap tolerance (default 1e-8)");
  sweep->add_option("--out", sweep_args.out_path, "CSV output path (default: standard output)");
  sweep->callback([&] { run_sweep(sweep_args, power, tol); });

  auto* waterfill = app.add_subcommand("waterfill", "no-feedback AR(1) capacity by water-filling");
  UnitArgs waterfill_units;
  double wf_beta = 0.5, wf_noise_var = 1.0, wf_input_gain = 1.0;
  add_unit_flags(waterfill, waterfill_units);
  waterfill->add_option("--beta", wf_beta, "AR(1) noise coefficient (default 0.5)");
  waterfill->add_option("--noise-var", wf_noise_var, "AR(1) innovation variance (default 1)");
  waterfill->add_option("--input-gain", wf_input_gain, "AR(1) direct input gain (default 1)");
  waterfill->add_option("--power", power, "average input power budget (default 1)");
  waterfill->callback(
      [&] { run_waterfill(wf_beta, power, wf_noise_var, wf_input_gain, waterfill_units); });

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of the optimal policy");
  ModelArgs simulate_model;
  UnitArgs simulate_units;
  int sim_horizon = 1000, sim_trials = 1;
  add_model_flags(simulate, simulate_model);
  add_unit_flags(simulate, simulate_units);
  simulate->add_option("--horizon", sim_horizon, "steps per trial (default 1000)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--trials", sim_trials, "independent trials (default 1)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--power", power, "average input power budget (default 1)");
  simulate->add_option("--tol", tol, "solver duality-gap tolerance (default 1e-8)");
  simulate->add_option("--seed", seed, "random seed (default 0)");
  simulate->callback([&] {
    run_simulate(simulate, simulate_model, power, tol, sim_horizon, sim_trials, seed,
                 simulate_units);
  });

  auto* probe = app.add_subcommand("probe-conjecture",
                                   "search for policies with undetectable closed loops");
  int probe_trials = 20, probe_dims = 1;
  probe->add_option("--trials", probe_trials, "random instances (default 20)")
      ->check(CLI::NonNegativeNumber);
  probe->add_option("--dims", probe_dims, "state and max input/output dimension (default 1)")
      ->check(CLI::PositiveNumber);
  probe->add_option("--seed", seed, "random seed (default 0)");
  probe->callback([&] { run_probe(probe_trials, probe_dims, seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UserError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
