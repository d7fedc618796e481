#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "sncert/envs.hpp"
#include "sncert/policy.hpp"

namespace sncert {

struct PpoConfig {
  std::int64_t total_steps = 200000;
  int rollout_length = 2048;
  int minibatch_size = 64;
  int epochs_per_update = 10;
  double clip_ratio = 0.2;
  double discount = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  double value_coeff = 0.5;
  double entropy_coeff = 0.0;
  double initial_log_std = 0.0;
  std::uint64_t seed = 0;

  // Rollout workers. Each owns a sub-seeded generator, so results do not
  // depend on how many threads execute them.
  int num_envs = 8;
  double max_grad_norm = 0.5;
  // Divide rewards by a running estimate of the discounted-return std.
  bool scale_rewards = true;
  // Evaluate after every update whose step count crosses a multiple of this.
  std::int64_t eval_interval = 2048;
  std::vector<int> value_hidden{64, 64};

  // Throws ContractViolation naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const PpoConfig& c);
// Missing fields keep their defaults; unknown fields raise ParseError.
PpoConfig ppo_config_from_json(const nlohmann::json& j);

struct CurvePoint {
  std::int64_t env_steps = 0;
  double mean_return = 0.0;
  double min_return = 0.0;
  double max_return = 0.0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
};

struct TrainResult {
  MlpPolicy policy;
  LearningCurve curve;
  Vector log_std;
  int updates = 0;
  int gradient_steps = 0;
};

// hidden: widths of the hidden layers; the output layer maps to n_u.
// deltas: pre mode needs hidden.size() + 1 entries, post mode hidden.size().
TrainResult train(const EnvSpec& env, const std::vector<int>& hidden, NormalizationMode mode,
                  const std::vector<double>& deltas, const PpoConfig& config);

struct EvalResult {
  std::vector<double> returns;
  std::vector<TrajectoryRecord> trajectories;
};

// Noise-free rollouts of the mean action.
EvalResult evaluate(const EnvSpec& env, const MlpPolicy& policy,
                    const std::vector<Vector>& starts, int horizon);

// ---- Loss and gradients on a frozen minibatch (exposed for testing) ----

struct Minibatch {
  Matrix states;     // n_x x M
  Matrix actions;    // n_u x M
  Vector old_log_prob;
  Vector advantages;
  Vector returns;
};

struct PolicyLoss {
  double value = 0.0;  // clipped surrogate (to be minimized) minus entropy bonus
  std::vector<Matrix> weight_grads;
  Vector log_std_grad;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

PolicyLoss policy_loss(const MlpPolicy& policy, const Vector& log_std, const Minibatch& batch,
                       double clip_ratio, double entropy_coeff);

// Fully connected tanh critic with biases; never normalized.
struct ValueNet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  Vector predict(const Matrix& states) const;
};

struct ValueLoss {
  double value = 0.0;  // mean squared error
  std::vector<Matrix> weight_grads;
  std::vector<Vector> bias_grads;
};

ValueLoss value_loss(const ValueNet& net, const Matrix& states, const Vector& targets);

// Log density of a diagonal Gaussian, one entry per column.
Vector gaussian_log_prob(const Matrix& mean, const Vector& log_std, const Matrix& actions);

}  // namespace sncert
