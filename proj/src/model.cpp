#include "fbcap/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fbcap/detect.hpp"
#include "fbcap/errors.hpp"
#include "fbcap/kalman.hpp"
#include "fbcap/matops.hpp"

namespace fbcap {

namespace {

constexpr double kPsdTol = 1e-9;

void require_shape(const Matrix& A, int r, int c, const char* field) {
  if (A.rows() != r || A.cols() != c) {
    std::ostringstream msg;
    msg << field << " must be " << r << "x" << c << ", got " << A.rows() << "x" << A.cols();
    throw DimensionMismatch(msg.str());
  }
}

Matrix joint_noise(const ChannelModel& model) {
  Matrix joint(model.n + model.p, model.n + model.p);
  joint.set_block(0, 0, model.W);
  joint.set_block(0, model.n, model.L);
  joint.set_block(model.n, 0, model.L.transpose());
  joint.set_block(model.n, model.n, model.V);
  return joint;
}

}  // namespace

ChannelModel build_model(const Matrix& F, const Matrix& G, const Matrix& H, const Matrix& J,
                         const Matrix& W, const Matrix& L, const Matrix& V,
                         std::optional<Matrix> sigma1, const std::string& name) {
  if (!F.square() || F.rows() < 1) throw DimensionMismatch("F must be square and nonempty");
  const int n = F.rows();
  if (G.rows() != n || G.cols() < 1) throw DimensionMismatch("G must be n x m with m >= 1");
  const int m = G.cols();
  if (H.cols() != n || H.rows() < 1) throw DimensionMismatch("H must be p x n with p >= 1");
  const int p = H.rows();
  require_shape(J, p, m, "J");
  require_shape(W, n, n, "W");
  require_shape(L, n, p, "L");
  require_shape(V, p, p, "V");
  const double scale = 1.0 + std::max(W.max_abs(), V.max_abs());
  if (W.asymmetry() > kPsdTol * scale) throw JointNoiseNotPSD("W is not symmetric");
  if (V.asymmetry() > kPsdTol * scale) throw JointNoiseNotPSD("V is not symmetric");

  ChannelModel model;
  model.n = n;
  model.m = m;
  model.p = p;
  model.F = F;
  model.G = G;
  model.H = H;
  model.J = J;
  model.W = W.symmetrized();
  model.L = L;
  model.V = V.symmetrized();
  model.name = name;

  if (min_eig_sym(joint_noise(model)) < -kPsdTol * scale)
    throw JointNoiseNotPSD("joint noise covariance has a negative eigenvalue");

  if (sigma1.has_value()) {
    require_shape(*sigma1, n, n, "Sigma1");
    if (sigma1->asymmetry() > kPsdTol * (1.0 + sigma1->max_abs()))
      throw Sigma1NotPSD("Sigma1 is not symmetric");
    if (min_eig_sym(*sigma1) < -kPsdTol * (1.0 + sigma1->max_abs()))
      throw Sigma1NotPSD("Sigma1 has a negative eigenvalue");
    model.Sigma1 = sigma1->symmetrized();
  } else {
    model.Sigma1 = Matrix::zeros(n, n);  // placeholder so solve_dare sees a full model
    model.Sigma1 = solve_dare(model).Sigma;
  }
  return model;
}

ChannelModel make_ar1_channel(double beta, double noise_var, double input_gain) {
  if (!(noise_var > 0.0)) throw OutOfRange("noise_var must be positive");
  std::ostringstream name;
  name << "ar1(beta=" << beta << ")";
  // The observation y_i = input_gain * x_i + z_i with z_i = beta z_{i-1} + w_i
  // fits the state-space form with state s_i = z_{i-1}: the fresh noise w_i
  // enters both the next state and the current output, so W = V = L.
  const Matrix B{{beta}};
  const Matrix var{{noise_var}};
  return build_model(B, Matrix{{0.0}}, B, Matrix{{input_gain}}, var, var, var, std::nullopt,
                     name.str());
}

ChannelModel make_delayed(const ChannelModel& model, int d) {
  if (d < 1) throw InvalidDelay("delay must be at least 1");
  if (d == 1) return model;
  const int n = model.n;
  const int m = model.m;
  const int p = model.p;
  const int na = n + (d - 1) * m;  // state plus d-1 input shift registers

  // Register u^1 latches x_i, registers shift downstream, and the oldest
  // register u^{d-1} drives the original input ports G and J.
  Matrix F(na, na);
  F.set_block(0, 0, model.F);
  F.set_block(0, na - m, model.G);
  for (int k = 2; k < d; ++k) F.set_block(n + (k - 1) * m, n + (k - 2) * m, Matrix::identity(m));
  Matrix G(na, m);
  G.set_block(n, 0, Matrix::identity(m));
  Matrix H(p, na);
  H.set_block(0, 0, model.H);
  H.set_block(0, na - m, model.J);
  const Matrix J = Matrix::zeros(p, m);
  Matrix W(na, na);
  W.set_block(0, 0, model.W);
  Matrix L(na, p);
  L.set_block(0, 0, model.L);
  Matrix Sigma1(na, na);
  Sigma1.set_block(0, 0, model.Sigma1);

  std::ostringstream name;
  name << model.name << "+delay" << d;
  return build_model(F, G, H, J, W, L, model.V, Sigma1, name.str());
}

StationaryAssumptions validate_stationary_assumptions(const ChannelModel& model) {
  StationaryAssumptions report;
  report.detectable = detectable_pbh(model.F, model.H).detectable;
  if (!report.detectable) return report;
  const Matrix Sigma = solve_dare(model).Sigma;
  report.sigma1_dominates = min_eig_sym(model.Sigma1 - Sigma) >= -kPsdTol * (1.0 + Sigma.max_abs());
  return report;
}

namespace {

Matrix matrix_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw DimensionMismatch(field + " must be a nonempty array of rows");
  const int rows = static_cast<int>(j.size());
  if (!j[0].is_array() || j[0].empty())
    throw DimensionMismatch(field + " rows must be nonempty arrays");
  const int cols = static_cast<int>(j[0].size());
  Matrix A(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      throw DimensionMismatch(field + " rows have inconsistent lengths");
    for (int k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw DimensionMismatch(field + " entries must be numbers");
      A(i, k) = j[i][k].get<double>();
    }
  }
  return A;
}

nlohmann::json matrix_to_json(const Matrix& A) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < A.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ChannelModel parse_model_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UserError(std::string("model JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw UserError("model JSON must be an object");
  for (const char* field : {"F", "G", "H", "J", "W", "V"})
    if (!j.contains(field)) throw UserError(std::string("model JSON is missing field ") + field);

  const Matrix F = matrix_from_json(j["F"], "F");
  const Matrix G = matrix_from_json(j["G"], "G");
  const Matrix H = matrix_from_json(j["H"], "H");
  const Matrix J = matrix_from_json(j["J"], "J");
  const Matrix W = matrix_from_json(j["W"], "W");
  const Matrix V = matrix_from_json(j["V"], "V");
  const Matrix L =
      j.contains("L") ? matrix_from_json(j["L"], "L") : Matrix::zeros(F.rows(), H.rows());
  std::optional<Matrix> sigma1;
  if (j.contains("Sigma1")) sigma1 = matrix_from_json(j["Sigma1"], "Sigma1");
  std::string name;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw UserError("model name must be a string");
    name = j["name"].get<std::string>();
  }
  return build_model(F, G, H, J, W, L, V, sigma1, name);
}

ChannelModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_json(buf.str());
}

std::string model_to_json(const ChannelModel& model) {
  nlohmann::json j;
  if (!model.name.empty()) j["name"] = model.name;
  j["F"] = matrix_to_json(model.F);
  j["G"] = matrix_to_json(model.G);
  j["H"] = matrix_to_json(model.H);
  j["J"] = matrix_to_json(model.J);
  j["W"] = matrix_to_json(model.W);
  j["L"] = matrix_to_json(model.L);
  j["V"] = matrix_to_json(model.V);
  j["Sigma1"] = matrix_to_json(model.Sigma1);
  return j.dump(2);
}

}  // namespace fbcap
