#include "sncert/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "sncert/errors.hpp"

namespace sncert {

std::string to_string(NormalizationMode mode) {
  switch (mode) {
    case NormalizationMode::None:
      return "none";
    case NormalizationMode::Pre:
      return "pre";
    case NormalizationMode::Post:
      return "post";
  }
  return "none";
}

NormalizationMode parse_mode(const std::string& text) {
  if (text == "none") return NormalizationMode::None;
  if (text == "pre") return NormalizationMode::Pre;
  if (text == "post") return NormalizationMode::Post;
  throw ParseError("unknown normalization mode '" + text +
                   "' (valid: none, pre, post)");
}

MlpPolicy::MlpPolicy(std::vector<Matrix> weights, std::vector<double> deltas,
                     NormalizationMode mode, Activation activation)
    : weights_(std::move(weights)),
      deltas_(std::move(deltas)),
      mode_(mode),
      activation_(activation) {
  if (weights_.empty()) throw ContractViolation("policy: no layers");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i].size() == 0) {
      throw ContractViolation("policy: layer " + std::to_string(i + 1) +
                              " is empty");
    }
    if (i > 0 && weights_[i].cols() != weights_[i - 1].rows()) {
      throw ContractViolation(
          "policy: layer " + std::to_string(i + 1) + " expects " +
          std::to_string(weights_[i].cols()) + " inputs but layer " +
          std::to_string(i) + " produces " +
          std::to_string(weights_[i - 1].rows()));
    }
    if (!weights_[i].allFinite()) {
      throw ContractViolation("policy: layer " + std::to_string(i + 1) +
                              " has non-finite entries");
    }
  }
  const auto hidden = weights_.size() - 1;
  std::size_t expected = 0;
  switch (mode_) {
    case NormalizationMode::None:
      expected = 0;
      break;
    case NormalizationMode::Pre:
      expected = hidden + 1;
      break;
    case NormalizationMode::Post:
      expected = hidden;
      break;
  }
  if (deltas_.size() != expected) {
    throw ContractViolation("policy: mode " + to_string(mode_) + " needs " +
                            std::to_string(expected) + " deltas, got " +
                            std::to_string(deltas_.size()));
  }
  for (double d : deltas_) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw ContractViolation("policy: deltas must be positive and finite");
    }
  }
}

int MlpPolicy::neuron_count() const {
  int n = 0;
  for (int i = 0; i < hidden_layers(); ++i) n += static_cast<int>(weights_[i].rows());
  return n;
}

std::vector<int> MlpPolicy::hidden_sizes() const {
  std::vector<int> sizes;
  for (int i = 0; i < hidden_layers(); ++i) {
    sizes.push_back(static_cast<int>(weights_[i].rows()));
  }
  return sizes;
}

std::vector<int> MlpPolicy::normalized_layers() const {
  std::vector<int> layers;
  for (std::size_t i = 0; i < deltas_.size(); ++i) layers.push_back(static_cast<int>(i));
  return layers;
}

double MlpPolicy::delta_for_layer(int layer) const {
  return deltas_.at(static_cast<std::size_t>(layer));
}

MlpPolicy MlpPolicy::with_weights(std::vector<Matrix> weights) const {
  return MlpPolicy(std::move(weights), deltas_, mode_, activation_);
}

ForwardPass forward(const MlpPolicy& policy, const Vector& x) {
  if (x.size() != policy.state_dim()) {
    throw ContractViolation("forward: state dimension mismatch");
  }
  if (!x.allFinite()) throw ContractViolation("forward: non-finite input");
  ForwardPass pass;
  const auto& w = policy.weights();
  Vector h = x;
  for (int i = 0; i < policy.hidden_layers(); ++i) {
    Vector v = w[static_cast<std::size_t>(i)] * h;
    h = v.array().tanh().matrix();
    pass.pre.push_back(std::move(v));
    pass.post.push_back(h);
  }
  pass.u = w.back() * h;
  return pass;
}

Vector act(const MlpPolicy& policy, const Vector& x) {
  if (x.size() != policy.state_dim()) {
    throw ContractViolation("act: state dimension mismatch");
  }
  const auto& w = policy.weights();
  Vector h = x;
  for (int i = 0; i < policy.hidden_layers(); ++i) {
    h = (w[static_cast<std::size_t>(i)] * h).array().tanh().matrix();
  }
  return w.back() * h;
}

double spectral_norm(const Matrix& w, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ContractViolation("spectral_norm: tol must be positive");
  const Matrix gram = w.rows() < w.cols() ? Matrix(w * w.transpose())
                                          : Matrix(w.transpose() * w);
  const auto n = gram.rows();

  std::mt19937_64 gen(0x5eedULL);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = static_cast<double>(gen() >> 11) * 0x1.0p-53 + 0.5;
  }
  v.normalize();

  // Lanczos on the Gram matrix: the Krylov space of the power iterates from v.
  // The Ritz residual bounds the eigenvalue error, so the stop test is a
  // guarantee rather than a stagnation heuristic.
  const Eigen::Index cap = std::min<Eigen::Index>(max_iter, n);
  Matrix q(n, cap);
  Vector alpha(cap), beta(cap);
  q.col(0) = v;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < max_iter; ++k) {
    if (k >= cap) break;
    Vector y = gram * q.col(k);
    alpha(k) = q.col(k).dot(y);
    // Full reorthogonalisation, twice.
    for (int pass = 0; pass < 2; ++pass) y -= q.leftCols(k + 1) * (q.leftCols(k + 1).transpose() * y);
    beta(k) = y.norm();

    Matrix t = Matrix::Zero(k + 1, k + 1);
    t.diagonal() = alpha.head(k + 1);
    if (k > 0) {
      t.diagonal(1) = beta.head(k);
      t.diagonal(-1) = beta.head(k);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    theta = es.eigenvalues()(k);
    if (theta <= 0.0) return 0.0;
    const double residual = beta(k) * std::abs(es.eigenvectors()(k, k));
    if (k + 1 == n || beta(k) <= 1e-14 * theta || (k > 0 && residual <= tol * theta)) {
      return std::sqrt(theta);
    }
    if (k + 1 < cap) q.col(k + 1) = y / beta(k);
  }
  throw NumericError("spectral_norm: power iteration did not converge in " +
                         std::to_string(max_iter) + " iterations",
                     max_iter, std::sqrt(theta));
}

namespace {

double robust_spectral_norm(const Matrix& w) {
  try {
    return spectral_norm(w);
  } catch (const NumericError&) {
    // Near-degenerate top singular pair: fall back to a full SVD.
    Eigen::JacobiSVD<Matrix> svd(w);
    return svd.singularValues()(0);
  }
}

}  // namespace

MlpPolicy normalize(const MlpPolicy& policy) {
  std::vector<Matrix> weights = policy.weights();
  for (int layer : policy.normalized_layers()) {
    auto& w = weights[static_cast<std::size_t>(layer)];
    const double sigma = robust_spectral_norm(w);
    if (!(sigma > 0.0)) {
      throw NormalizationError("normalize: layer " + std::to_string(layer + 1) +
                               " has zero spectral norm");
    }
    const double delta = policy.delta_for_layer(layer);
    if (std::abs(sigma - delta) <= 1e-9 * delta) continue;
    w *= delta / sigma;
  }
  return policy.with_weights(std::move(weights));
}

bool is_normalized(const MlpPolicy& policy, double tol) {
  for (int layer : policy.normalized_layers()) {
    const double sigma =
        robust_spectral_norm(policy.weights()[static_cast<std::size_t>(layer)]);
    if (std::abs(sigma - policy.delta_for_layer(layer)) >= tol) return false;
  }
  return true;
}

double gain_upper_bound(const MlpPolicy& policy) {
  double bound = 1.0;
  if (policy.mode() == NormalizationMode::Pre) {
    for (double d : policy.deltas()) bound *= d;
    return bound;
  }
  for (const auto& w : policy.weights()) bound *= robust_spectral_norm(w);
  return bound;
}

NMatrix assemble_n_matrix(const MlpPolicy& policy) {
  const int nx = policy.state_dim();
  const int nu = policy.input_dim();
  const int nphi = policy.neuron_count();
  const int hidden = policy.hidden_layers();
  const auto& w = policy.weights();

  NMatrix n{Matrix::Zero(nu, nx), Matrix::Zero(nu, nphi), Matrix::Zero(nphi, nx),
            Matrix::Zero(nphi, nphi)};
  if (hidden == 0) {
    n.ux = w.front();
    return n;
  }

  std::vector<int> offset(static_cast<std::size_t>(hidden), 0);
  for (int i = 1; i < hidden; ++i) {
    offset[static_cast<std::size_t>(i)] =
        offset[static_cast<std::size_t>(i - 1)] +
        static_cast<int>(w[static_cast<std::size_t>(i - 1)].rows());
  }

  n.vx.topRows(w.front().rows()) = w.front();
  for (int i = 1; i < hidden; ++i) {
    const auto& wi = w[static_cast<std::size_t>(i)];
    n.vw.block(offset[static_cast<std::size_t>(i)],
               offset[static_cast<std::size_t>(i - 1)], wi.rows(), wi.cols()) = wi;
  }
  const auto& last = w.back();
  n.uw.rightCols(last.cols()) = last;
  return n;
}

nlohmann::json policy_to_json(const MlpPolicy& policy) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& w : policy.weights()) layers.push_back(matrix_to_json(w));
  return {{"mode", to_string(policy.mode())},
          {"activation", "tanh"},
          {"deltas", policy.deltas()},
          {"weights", std::move(layers)}};
}

MlpPolicy policy_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("policy: expected a JSON object");
  for (const char* key : {"mode", "weights"}) {
    if (!j.contains(key)) throw ParseError(std::string("policy: missing \"") + key + "\"");
  }
  const std::string activation = j.value("activation", std::string("tanh"));
  if (activation != "tanh") {
    throw ParseError("policy: unsupported activation '" + activation + "'");
  }
  if (j.contains("biases")) {
    for (const auto& b : j.at("biases")) {
      for (const auto& e : b) {
        if (e.get<double>() != 0.0) {
          throw ParseError("policy: nonzero biases are not supported");
        }
      }
    }
  }
  const NormalizationMode mode = parse_mode(j.at("mode").get<std::string>());
  std::vector<double> deltas;
  if (j.contains("deltas")) {
    if (!j.at("deltas").is_array()) throw ParseError("policy: \"deltas\" must be an array");
    for (const auto& d : j.at("deltas")) {
      if (!d.is_number()) throw ParseError("policy: \"deltas\" entries must be numbers");
      deltas.push_back(d.get<double>());
    }
  }
  const auto& layers = j.at("weights");
  if (!layers.is_array() || layers.empty()) {
    throw ParseError("policy: \"weights\" must be a non-empty array");
  }
  std::vector<Matrix> weights;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string what = "policy.weights[" + std::to_string(i) + "]";
    weights.push_back(matrix_from_json(layers[i], what.c_str()));
  }
  try {
    return MlpPolicy(std::move(weights), std::move(deltas), mode);
  } catch (const ContractViolation& e) {
    throw ParseError(e.what());
  }
}

void save_policy(const MlpPolicy& policy, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  out << policy_to_json(policy).dump(2) << "\n";
}

MlpPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open policy file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return policy_from_json(j);
}

}  // namespace sncert
