#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sncert/plant.hpp"

namespace sncert {

enum class NormalizationMode { None, Pre, Post };
enum class Activation { Tanh };

std::string to_string(NormalizationMode mode);
NormalizationMode parse_mode(const std::string& text);

// Zero-bias tanh MLP u = W^{l+1} tanh(W^l ... tanh(W^1 x)).
//
// weights[i] has shape n_{i+1} x n_i with n_0 = state dim and the last entry
// mapping the final hidden layer to the input. deltas holds the target
// spectral norms of the normalized layers: l+1 entries in pre mode, l in post
// mode, none in none mode.
class MlpPolicy {
 public:
  MlpPolicy(std::vector<Matrix> weights, std::vector<double> deltas,
            NormalizationMode mode, Activation activation = Activation::Tanh);

  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<double>& deltas() const { return deltas_; }
  NormalizationMode mode() const { return mode_; }
  Activation activation() const { return activation_; }

  int hidden_layers() const { return static_cast<int>(weights_.size()) - 1; }
  int state_dim() const { return static_cast<int>(weights_.front().cols()); }
  int input_dim() const { return static_cast<int>(weights_.back().rows()); }
  // n_phi: total hidden neurons.
  int neuron_count() const;
  std::vector<int> hidden_sizes() const;

  // Indices of layers that the mode keeps at a prescribed spectral norm.
  std::vector<int> normalized_layers() const;
  // delta for a normalized layer index.
  double delta_for_layer(int layer) const;

  MlpPolicy with_weights(std::vector<Matrix> weights) const;

 private:
  std::vector<Matrix> weights_;
  std::vector<double> deltas_;
  NormalizationMode mode_;
  Activation activation_;
};

struct ForwardPass {
  Vector u;
  std::vector<Vector> pre;   // v^1 .. v^l
  std::vector<Vector> post;  // w^1 .. w^l
};

ForwardPass forward(const MlpPolicy& policy, const Vector& x);
Vector act(const MlpPolicy& policy, const Vector& x);

// Power iteration on W'W (or WW', whichever is smaller) from a fixed seeded
// start. Throws NumericError carrying the last estimate if max_iter runs out.
double spectral_norm(const Matrix& w, double tol = 1e-9, int max_iter = 200);

// Rescales each normalized layer to W * delta / sigma(W). Layers already within
// tolerance of their delta are left untouched, so the projection is idempotent.
MlpPolicy normalize(const MlpPolicy& policy);

// True if every normalized layer sits at its delta within tol.
bool is_normalized(const MlpPolicy& policy, double tol = 1e-6);

// Pre mode: product of deltas. Otherwise product of actual layer norms.
double gain_upper_bound(const MlpPolicy& policy);

// Linear part of the network with the activations cut out:
//   [u; v] = [N_ux N_uw; N_vx N_vw] [x; w],  w = phi(v).
struct NMatrix {
  Matrix ux, uw, vx, vw;

  int state_dim() const { return static_cast<int>(ux.cols()); }
  int input_dim() const { return static_cast<int>(ux.rows()); }
  int neuron_count() const { return static_cast<int>(vw.rows()); }
};

NMatrix assemble_n_matrix(const MlpPolicy& policy);

nlohmann::json policy_to_json(const MlpPolicy& policy);
MlpPolicy policy_from_json(const nlohmann::json& j);
void save_policy(const MlpPolicy& policy, const std::filesystem::path& path);
MlpPolicy load_policy(const std::filesystem::path& path);

}  // namespace sncert
