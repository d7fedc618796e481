#include "sncert/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "sncert/errors.hpp"

namespace sncert {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct Trace {
  std::vector<Matrix> h;  // h[0] = input, h[i] = tanh(pre-activation of layer i)
  Matrix out;
};

Trace policy_trace(const std::vector<Matrix>& w, const Matrix& x) {
  Trace tr;
  tr.h.push_back(x);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    tr.h.push_back((w[i] * tr.h.back()).array().tanh().matrix());
  }
  tr.out = w.back() * tr.h.back();
  return tr;
}

std::vector<Matrix> policy_backward(const std::vector<Matrix>& w, const Trace& tr,
                                    const Matrix& d_out) {
  std::vector<Matrix> grads(w.size());
  Matrix d = d_out;
  for (std::size_t i = w.size(); i-- > 0;) {
    grads[i] = d * tr.h[i].transpose();
    if (i > 0) {
      d = (w[i].transpose() * d).cwiseProduct((1.0 - tr.h[i].array().square()).matrix());
    }
  }
  return grads;
}

Trace value_trace(const ValueNet& net, const Matrix& x) {
  Trace tr;
  tr.h.push_back(x);
  for (std::size_t i = 0; i + 1 < net.weights.size(); ++i) {
    Matrix pre = net.weights[i] * tr.h.back();
    pre.colwise() += net.biases[i];
    tr.h.push_back(pre.array().tanh().matrix());
  }
  tr.out = net.weights.back() * tr.h.back();
  tr.out.colwise() += net.biases.back();
  return tr;
}

// Flat parameter layout: policy weights, log-std, critic weights, critic biases.
struct Layout {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> policy;
  Eigen::Index log_std = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> value_w;
  std::vector<Eigen::Index> value_b;

  Eigen::Index size() const {
    Eigen::Index n = log_std;
    for (const auto& [r, c] : policy) n += r * c;
    for (const auto& [r, c] : value_w) n += r * c;
    for (auto b : value_b) n += b;
    return n;
  }
};

Layout layout_of(const MlpPolicy& policy, const Vector& log_std, const ValueNet& net) {
  Layout l;
  for (const auto& w : policy.weights()) l.policy.emplace_back(w.rows(), w.cols());
  l.log_std = log_std.size();
  for (const auto& w : net.weights) l.value_w.emplace_back(w.rows(), w.cols());
  for (const auto& b : net.biases) l.value_b.push_back(b.size());
  return l;
}

Vector pack(const std::vector<Matrix>& pw, const Vector& log_std, const std::vector<Matrix>& vw,
            const std::vector<Vector>& vb, Eigen::Index total) {
  Vector flat(total);
  Eigen::Index at = 0;
  const auto put = [&](const auto& m) {
    flat.segment(at, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
    at += m.size();
  };
  for (const auto& m : pw) put(m);
  put(log_std);
  for (const auto& m : vw) put(m);
  for (const auto& b : vb) put(b);
  return flat;
}

void unpack(const Vector& flat, std::vector<Matrix>& pw, Vector& log_std, std::vector<Matrix>& vw,
            std::vector<Vector>& vb) {
  Eigen::Index at = 0;
  const auto get = [&](auto& m) {
    Eigen::Map<Vector>(m.data(), m.size()) = flat.segment(at, m.size());
    at += m.size();
  };
  for (auto& m : pw) get(m);
  get(log_std);
  for (auto& m : vw) get(m);
  for (auto& b : vb) get(b);
}

struct Adam {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int t = 0;
  Vector m, v;

  Adam(double learning_rate, Eigen::Index n)
      : lr(learning_rate), m(Vector::Zero(n)), v(Vector::Zero(n)) {}

  void step(Vector& params, const Vector& grad) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

// Welford estimate of the variance of the running discounted return.
struct RunningVariance {
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t count = 0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 1.0; }
};

Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = scale * n(rng);
  }
  return m;
}

Vector sample_box(std::mt19937_64& rng, const Vector& lo, const Vector& hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = lo(i) + u(rng) * (hi(i) - lo(i));
  return x;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void require(bool ok, const char* field, const char* rule) {
  if (!ok) throw ContractViolation(std::string("PpoConfig.") + field + ": " + rule);
}

}  // namespace

void PpoConfig::validate() const {
  require(rollout_length >= 1, "rollout_length", "must be >= 1");
  require(total_steps >= rollout_length, "total_steps", "must be >= rollout_length");
  require(minibatch_size >= 1 && minibatch_size <= rollout_length, "minibatch_size",
          "must lie in [1, rollout_length]");
  require(epochs_per_update >= 1, "epochs_per_update", "must be >= 1");
  require(clip_ratio > 0.0 && clip_ratio < 1.0, "clip_ratio", "must lie in (0, 1)");
  require(discount > 0.0 && discount <= 1.0, "discount", "must lie in (0, 1]");
  require(gae_lambda > 0.0 && gae_lambda <= 1.0, "gae_lambda", "must lie in (0, 1]");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate", "must be positive");
  require(value_coeff >= 0.0 && std::isfinite(value_coeff), "value_coeff", "must be >= 0");
  require(entropy_coeff >= 0.0 && std::isfinite(entropy_coeff), "entropy_coeff", "must be >= 0");
  require(std::isfinite(initial_log_std), "initial_log_std", "must be finite");
  require(num_envs >= 1, "num_envs", "must be >= 1");
  require(rollout_length % num_envs == 0, "rollout_length", "must be a multiple of num_envs");
  require(max_grad_norm > 0.0, "max_grad_norm", "must be positive");
  require(eval_interval >= 1, "eval_interval", "must be >= 1");
  require(!value_hidden.empty(), "value_hidden", "needs at least one layer");
  for (int h : value_hidden) require(h >= 1, "value_hidden", "widths must be >= 1");
}

nlohmann::json to_json(const PpoConfig& c) {
  return {{"total_steps", c.total_steps},       {"rollout_length", c.rollout_length},
          {"minibatch_size", c.minibatch_size}, {"epochs_per_update", c.epochs_per_update},
          {"clip_ratio", c.clip_ratio},         {"discount", c.discount},
          {"gae_lambda", c.gae_lambda},         {"learning_rate", c.learning_rate},
          {"value_coeff", c.value_coeff},       {"entropy_coeff", c.entropy_coeff},
          {"initial_log_std", c.initial_log_std}, {"seed", c.seed},
          {"num_envs", c.num_envs},             {"max_grad_norm", c.max_grad_norm},
          {"scale_rewards", c.scale_rewards},   {"eval_interval", c.eval_interval},
          {"value_hidden", c.value_hidden}};
}

PpoConfig ppo_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("ppo config must be a JSON object");
  PpoConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "total_steps") c.total_steps = value.get<std::int64_t>();
      else if (key == "rollout_length") c.rollout_length = value.get<int>();
      else if (key == "minibatch_size") c.minibatch_size = value.get<int>();
      else if (key == "epochs_per_update") c.epochs_per_update = value.get<int>();
      else if (key == "clip_ratio") c.clip_ratio = value.get<double>();
      else if (key == "discount") c.discount = value.get<double>();
      else if (key == "gae_lambda") c.gae_lambda = value.get<double>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "value_coeff") c.value_coeff = value.get<double>();
      else if (key == "entropy_coeff") c.entropy_coeff = value.get<double>();
      else if (key == "initial_log_std") c.initial_log_std = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "num_envs") c.num_envs = value.get<int>();
      else if (key == "max_grad_norm") c.max_grad_norm = value.get<double>();
      else if (key == "scale_rewards") c.scale_rewards = value.get<bool>();
      else if (key == "eval_interval") c.eval_interval = value.get<std::int64_t>();
      else if (key == "value_hidden") c.value_hidden = value.get<std::vector<int>>();
      else throw ParseError("ppo config: unknown field '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("ppo config: field '" + key + "' has the wrong type (" + e.what() + ")");
    }
  }
  return c;
}

Vector gaussian_log_prob(const Matrix& mean, const Vector& log_std, const Matrix& actions) {
  const Vector inv_std = (-log_std).array().exp();
  const Matrix z = (actions - mean).array().colwise() * inv_std.array();
  const double norm = log_std.sum() + 0.5 * kLog2Pi * static_cast<double>(log_std.size());
  return (-0.5 * z.array().square().colwise().sum()).matrix().transpose().array() - norm;
}

PolicyLoss policy_loss(const MlpPolicy& policy, const Vector& log_std, const Minibatch& batch,
                       double clip_ratio, double entropy_coeff) {
  const auto m = batch.states.cols();
  if (m == 0 || batch.actions.cols() != m || batch.old_log_prob.size() != m ||
      batch.advantages.size() != m || log_std.size() != policy.input_dim()) {
    throw ContractViolation("policy_loss: inconsistent minibatch");
  }
  const auto& w = policy.weights();
  const Trace tr = policy_trace(w, batch.states);
  const Vector logp = gaussian_log_prob(tr.out, log_std, batch.actions);
  const Vector ratio = (logp - batch.old_log_prob).array().exp();
  const Vector inv_var = (-2.0 * log_std).array().exp();
  const Matrix diff = batch.actions - tr.out;

  PolicyLoss out;
  Vector g(m);  // d loss / d logp
  double surrogate = 0.0;
  int clipped = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = ratio(i);
    const double a = batch.advantages(i);
    const double rc = std::clamp(r, 1.0 - clip_ratio, 1.0 + clip_ratio);
    const double s1 = r * a;
    const double s2 = rc * a;
    surrogate += std::min(s1, s2);
    g(i) = s1 <= s2 ? -s1 / static_cast<double>(m) : 0.0;
    if (std::abs(r - 1.0) > clip_ratio) ++clipped;
  }
  const double entropy =
      log_std.sum() + 0.5 * (1.0 + kLog2Pi) * static_cast<double>(log_std.size());
  out.value = -surrogate / static_cast<double>(m) - entropy_coeff * entropy;
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(m);
  out.approx_kl = (batch.old_log_prob - logp).mean();

  // d logp / d mean = (a - mean) / sigma^2, d logp / d log_std = z^2 - 1.
  const Matrix d_mean = (diff.array().colwise() * inv_var.array()).rowwise() * g.transpose().array();
  out.weight_grads = policy_backward(w, tr, d_mean);
  const Matrix z2 = diff.array().square().colwise() * inv_var.array();
  out.log_std_grad = ((z2.array() - 1.0).rowwise() * g.transpose().array()).rowwise().sum().matrix();
  out.log_std_grad.array() -= entropy_coeff;
  return out;
}

Vector ValueNet::predict(const Matrix& states) const {
  return value_trace(*this, states).out.row(0).transpose();
}

ValueLoss value_loss(const ValueNet& net, const Matrix& states, const Vector& targets) {
  const auto m = states.cols();
  if (m == 0 || targets.size() != m) throw ContractViolation("value_loss: inconsistent batch");
  const Trace tr = value_trace(net, states);
  const Vector err = tr.out.row(0).transpose() - targets;
  ValueLoss out;
  out.value = err.squaredNorm() / static_cast<double>(m);
  Matrix d = (2.0 / static_cast<double>(m)) * err.transpose();
  const std::size_t layers = net.weights.size();
  out.weight_grads.resize(layers);
  out.bias_grads.resize(layers);
  for (std::size_t i = layers; i-- > 0;) {
    out.weight_grads[i] = d * tr.h[i].transpose();
    out.bias_grads[i] = d.rowwise().sum();
    if (i > 0) {
      d = (net.weights[i].transpose() * d).cwiseProduct((1.0 - tr.h[i].array().square()).matrix());
    }
  }
  return out;
}

EvalResult evaluate(const EnvSpec& env, const MlpPolicy& policy,
                    const std::vector<Vector>& starts, int horizon) {
  if (policy.state_dim() != env.plant.state_dim() || policy.input_dim() != env.plant.input_dim()) {
    throw ContractViolation("evaluate: policy does not match the environment");
  }
  EvalResult out;
  for (const auto& x0 : starts) {
    TrajectoryRecord rec =
        rollout(env, [&](const Vector& x) { return act(policy, x); }, x0, horizon);
    out.returns.push_back(std::accumulate(rec.rewards.begin(), rec.rewards.end(), 0.0));
    out.trajectories.push_back(std::move(rec));
  }
  return out;
}

TrainResult train(const EnvSpec& env, const std::vector<int>& hidden, NormalizationMode mode,
                  const std::vector<double>& deltas, const PpoConfig& config) {
  config.validate();
  if (hidden.empty()) throw ContractViolation("train: need at least one hidden layer");
  const int nx = env.plant.state_dim();
  const int nu = env.plant.input_dim();
  const int n_envs = config.num_envs;
  const int horizon = config.rollout_length / n_envs;

  std::mt19937_64 rng(derive_seed(config.seed, 1, 0));

  // Actor: N(0, 1/fan_in) layers, small output layer; normalized layers are
  // projected onto their spectral sphere before the first rollout.
  std::vector<Matrix> pw;
  int fan_in = nx;
  for (int h : hidden) {
    if (h < 1) throw ContractViolation("train: hidden widths must be >= 1");
    pw.push_back(gaussian_matrix(rng, h, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in))));
    fan_in = h;
  }
  pw.push_back(gaussian_matrix(rng, nu, fan_in, 0.01 / std::sqrt(static_cast<double>(fan_in))));
  MlpPolicy policy = normalize(MlpPolicy(pw, deltas, mode));
  Vector log_std = Vector::Constant(nu, config.initial_log_std);

  ValueNet critic;
  fan_in = nx;
  for (int h : config.value_hidden) {
    critic.weights.push_back(gaussian_matrix(rng, h, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in))));
    critic.biases.push_back(Vector::Zero(h));
    fan_in = h;
  }
  critic.weights.push_back(gaussian_matrix(rng, 1, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in))));
  critic.biases.push_back(Vector::Zero(1));

  const Layout layout = layout_of(policy, log_std, critic);
  const Eigen::Index n_params = layout.size();
  Adam adam(config.learning_rate, n_params);

  std::vector<std::mt19937_64> env_rng;
  std::vector<std::normal_distribution<double>> env_noise(static_cast<std::size_t>(n_envs));
  for (int e = 0; e < n_envs; ++e) env_rng.emplace_back(derive_seed(config.seed, 2, static_cast<std::uint64_t>(e)));

  Matrix x(nx, n_envs);
  std::vector<int> ep_len(static_cast<std::size_t>(n_envs), 0);
  std::vector<double> disc_return(static_cast<std::size_t>(n_envs), 0.0);
  for (int e = 0; e < n_envs; ++e) x.col(e) = sample_box(env_rng[static_cast<std::size_t>(e)], env.reset_low, env.reset_high);
  RunningVariance return_stats;

  const int total = config.rollout_length;
  Matrix obs(nx, total), acts(nu, total);
  Vector logp_buf(total), value_buf(total), reward_buf(total), boot_buf(total);
  std::vector<char> ended(static_cast<std::size_t>(total));

  TrainResult result{policy, {}, log_std, 0, 0};
  const std::int64_t updates = config.total_steps / config.rollout_length;
  std::int64_t steps_done = 0;
  std::int64_t next_eval = config.eval_interval;

  for (std::int64_t update = 0; update < updates; ++update) {
    // ---- Collect a rollout: all workers step in lockstep, index t * n_envs + e.
    const Vector sigma = log_std.array().exp();
    for (int t = 0; t < horizon; ++t) {
      const Matrix mean = policy_trace(policy.weights(), x).out;
      const Vector values = critic.predict(x);
      Matrix a(nu, n_envs);
      for (int e = 0; e < n_envs; ++e) {
        auto& g = env_rng[static_cast<std::size_t>(e)];
        auto& nd = env_noise[static_cast<std::size_t>(e)];
        for (int k = 0; k < nu; ++k) a(k, e) = mean(k, e) + sigma(k) * nd(g);
      }
      const Vector logp = gaussian_log_prob(mean, log_std, a);
      const Matrix next = env.plant.a() * x + env.plant.b() * a;
      for (int e = 0; e < n_envs; ++e) {
        const auto idx = static_cast<Eigen::Index>(t) * n_envs + e;
        const auto se = static_cast<std::size_t>(e);
        obs.col(idx) = x.col(e);
        acts.col(idx) = a.col(e);
        logp_buf(idx) = logp(e);
        value_buf(idx) = values(e);
        const double r = reward(env.reward, x.col(e), a.col(e));
        double scaled = r;
        if (config.scale_rewards) {
          disc_return[se] = config.discount * disc_return[se] + r;
          return_stats.add(disc_return[se]);
          scaled = r / std::sqrt(return_stats.variance() + 1e-8);
        }
        reward_buf(idx) = scaled;
        ++ep_len[se];
        const Vector xn = next.col(e);
        const bool done = !xn.allFinite() || env.terminated(xn) || ep_len[se] >= env.max_episode_steps;
        ended[static_cast<std::size_t>(idx)] = done ? 1 : 0;
        boot_buf(idx) = 0.0;
        if (done) {
          // Leaving the state box or hitting the step limit both cut the
          // episode short of the infinite-horizon cost, so bootstrap either way.
          boot_buf(idx) = xn.allFinite() ? critic.predict(xn)(0) : value_buf(idx);
          x.col(e) = sample_box(env_rng[se], env.reset_low, env.reset_high);
          ep_len[se] = 0;
          disc_return[se] = 0.0;
        } else {
          x.col(e) = xn;
        }
      }
    }
    steps_done += config.rollout_length;

    // ---- Generalized advantage estimation per worker.
    const Vector last_values = critic.predict(x);
    Vector adv(total);
    for (int e = 0; e < n_envs; ++e) {
      double gae = 0.0;
      double next_value = last_values(e);
      for (int t = horizon - 1; t >= 0; --t) {
        const auto idx = static_cast<Eigen::Index>(t) * n_envs + e;
        double delta = 0.0;
        if (ended[static_cast<std::size_t>(idx)]) {
          delta = reward_buf(idx) + config.discount * boot_buf(idx) - value_buf(idx);
          gae = delta;
        } else {
          delta = reward_buf(idx) + config.discount * next_value - value_buf(idx);
          gae = delta + config.discount * config.gae_lambda * gae;
        }
        adv(idx) = gae;
        next_value = value_buf(idx);
      }
    }
    const Vector returns = adv + value_buf;

    // ---- Optimize.
    std::vector<int> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (int start = 0; start < total; start += config.minibatch_size) {
        const int size = std::min(config.minibatch_size, total - start);
        Minibatch mb;
        mb.states.resize(nx, size);
        mb.actions.resize(nu, size);
        mb.old_log_prob.resize(size);
        mb.advantages.resize(size);
        mb.returns.resize(size);
        for (int i = 0; i < size; ++i) {
          const int idx = order[static_cast<std::size_t>(start + i)];
          mb.states.col(i) = obs.col(idx);
          mb.actions.col(i) = acts.col(idx);
          mb.old_log_prob(i) = logp_buf(idx);
          mb.advantages(i) = adv(idx);
          mb.returns(i) = returns(idx);
        }
        if (size > 1) {
          const double mean = mb.advantages.mean();
          const double sd = std::sqrt((mb.advantages.array() - mean).square().sum() / (size - 1));
          mb.advantages = (mb.advantages.array() - mean) / (sd + 1e-8);
        }

        const PolicyLoss pl = policy_loss(policy, log_std, mb, config.clip_ratio, config.entropy_coeff);
        const ValueLoss vl = value_loss(critic, mb.states, mb.returns);
        if (!std::isfinite(pl.value) || !std::isfinite(vl.value)) {
          std::ostringstream msg;
          msg << "train: non-finite loss at update " << update << " epoch " << epoch
              << " (policy " << pl.value << ", value " << vl.value << ", log_std "
              << log_std.transpose() << ")";
          throw NumericError(msg.str());
        }
        std::vector<Matrix> vw_grads = vl.weight_grads;
        std::vector<Vector> vb_grads = vl.bias_grads;
        for (auto& g : vw_grads) g *= config.value_coeff;
        for (auto& g : vb_grads) g *= config.value_coeff;
        Vector grad = pack(pl.weight_grads, pl.log_std_grad, vw_grads, vb_grads, n_params);
        const double gnorm = grad.norm();
        if (!std::isfinite(gnorm)) {
          throw NumericError("train: non-finite gradient at update " + std::to_string(update));
        }
        if (gnorm > config.max_grad_norm) grad *= config.max_grad_norm / gnorm;

        std::vector<Matrix> new_pw = policy.weights();
        Vector params = pack(new_pw, log_std, critic.weights, critic.biases, n_params);
        adam.step(params, grad);
        unpack(params, new_pw, log_std, critic.weights, critic.biases);
        policy = normalize(policy.with_weights(std::move(new_pw)));
        ++result.gradient_steps;
      }
    }
    ++result.updates;

    if (steps_done >= next_eval || update + 1 == updates) {
      while (next_eval <= steps_done) next_eval += config.eval_interval;
      const EvalResult ev = evaluate(env, policy, env.eval_starts, env.max_episode_steps);
      CurvePoint p;
      p.env_steps = steps_done;
      p.mean_return = std::accumulate(ev.returns.begin(), ev.returns.end(), 0.0) /
                      static_cast<double>(ev.returns.size());
      p.min_return = *std::min_element(ev.returns.begin(), ev.returns.end());
      p.max_return = *std::max_element(ev.returns.begin(), ev.returns.end());
      result.curve.points.push_back(p);
    }
  }

  result.policy = policy;
  result.log_std = log_std;
  return result;
}

}  // namespace sncert
