#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sncert/envs.hpp"
#include "sncert/errors.hpp"
#include "sncert/trainer.hpp"

using namespace sncert;
using testutil::gaussian;

namespace {

PpoConfig small_config(std::uint64_t seed) {
  PpoConfig c;
  c.total_steps = 4096;
  c.rollout_length = 1024;
  c.minibatch_size = 64;
  c.epochs_per_update = 2;
  c.eval_interval = 1024;
  c.seed = seed;
  return c;
}

Minibatch frozen_batch(const MlpPolicy& pol, const Vector& log_std, std::mt19937_64& rng, int m) {
  Minibatch b;
  b.states = gaussian(pol.state_dim(), m, rng);
  Matrix mean(pol.input_dim(), m);
  for (int i = 0; i < m; ++i) mean.col(i) = act(pol, b.states.col(i));
  b.actions = mean + gaussian(pol.input_dim(), m, rng, 0.8);
  // Old log-probs from a nearby distribution so ratios spread around 1.
  b.old_log_prob = gaussian_log_prob(mean, log_std, b.actions) + gaussian(m, 1, rng, 0.15);
  b.advantages = gaussian(m, 1, rng);
  b.returns = gaussian(m, 1, rng);
  return b;
}

}  // namespace

TEST_CASE("policy loss gradients match central differences") {
  std::mt19937_64 rng(2);
  const auto pol = testutil::random_post_policy(3, {8, 8}, 2, 1.0, 3);
  Vector log_std(2);
  log_std << -0.3, 0.2;
  const Minibatch batch = frozen_batch(pol, log_std, rng, 64);
  const double clip = 0.2, ent = 0.01;
  const auto base = policy_loss(pol, log_std, batch, clip, ent);
  CHECK(base.clip_fraction > 0.0);
  CHECK(base.clip_fraction < 1.0);

  const double h = 1e-6;
  double err2 = 0.0, ref2 = 0.0;
  for (std::size_t l = 0; l < pol.weights().size(); ++l) {
    for (Eigen::Index k = 0; k < pol.weights()[l].size(); ++k) {
      auto plus = pol.weights(), minus = pol.weights();
      plus[l].reshaped()(k) += h;
      minus[l].reshaped()(k) -= h;
      const double fd = (policy_loss(pol.with_weights(plus), log_std, batch, clip, ent).value -
                         policy_loss(pol.with_weights(minus), log_std, batch, clip, ent).value) /
                        (2 * h);
      const double an = base.weight_grads[l].reshaped()(k);
      err2 += (fd - an) * (fd - an);
      ref2 += an * an;
    }
  }
  for (int k = 0; k < 2; ++k) {
    Vector lp = log_std, lm = log_std;
    lp(k) += h;
    lm(k) -= h;
    const double fd = (policy_loss(pol, lp, batch, clip, ent).value -
                       policy_loss(pol, lm, batch, clip, ent).value) / (2 * h);
    err2 += (fd - base.log_std_grad(k)) * (fd - base.log_std_grad(k));
    ref2 += base.log_std_grad(k) * base.log_std_grad(k);
  }
  CHECK(ref2 > 0.0);
  CHECK(std::sqrt(err2) <= 1e-4 * std::sqrt(ref2));
}

TEST_CASE("value loss gradients match central differences") {
  std::mt19937_64 rng(4);
  ValueNet net;
  net.weights = {gaussian(6, 3, rng, 0.5), gaussian(6, 6, rng, 0.4), gaussian(1, 6, rng, 0.4)};
  net.biases = {gaussian(6, 1, rng, 0.1), gaussian(6, 1, rng, 0.1), gaussian(1, 1, rng, 0.1)};
  const Matrix states = gaussian(3, 40, rng);
  const Vector targets = gaussian(40, 1, rng);
  const auto base = value_loss(net, states, targets);
  const double h = 1e-6;
  double err2 = 0.0, ref2 = 0.0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (Eigen::Index k = 0; k < net.weights[l].size(); ++k) {
      ValueNet p = net, m = net;
      p.weights[l].reshaped()(k) += h;
      m.weights[l].reshaped()(k) -= h;
      const double fd = (value_loss(p, states, targets).value - value_loss(m, states, targets).value) / (2 * h);
      const double an = base.weight_grads[l].reshaped()(k);
      err2 += (fd - an) * (fd - an);
      ref2 += an * an;
    }
    for (Eigen::Index k = 0; k < net.biases[l].size(); ++k) {
      ValueNet p = net, m = net;
      p.biases[l](k) += h;
      m.biases[l](k) -= h;
      const double fd = (value_loss(p, states, targets).value - value_loss(m, states, targets).value) / (2 * h);
      const double an = base.bias_grads[l](k);
      err2 += (fd - an) * (fd - an);
      ref2 += an * an;
    }
  }
  CHECK(std::sqrt(err2) <= 1e-4 * std::sqrt(ref2));
}

TEST_CASE("gaussian log density") {
  Matrix mean = Matrix::Zero(1, 2), actions(1, 2);
  actions << 0.0, 1.0;
  const Vector lp = gaussian_log_prob(mean, Vector::Zero(1), actions);
  CHECK(lp(0) == doctest::Approx(-0.5 * std::log(2 * M_PI)));
  CHECK(lp(1) == doctest::Approx(-0.5 * std::log(2 * M_PI) - 0.5));
}

TEST_CASE("config validation names the field") {
  PpoConfig c;
  CHECK_NOTHROW(c.validate());
  c.clip_ratio = 1.0;
  try {
    c.validate();
    FAIL("expected ContractViolation");
  } catch (const ContractViolation& e) {
    CHECK(std::string(e.what()).find("PpoConfig.clip_ratio") != std::string::npos);
  }
  c = PpoConfig{};
  c.total_steps = 100;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c = PpoConfig{};
  c.discount = 0.0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c = PpoConfig{};
  c.gae_lambda = 1.0;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config JSON round-trip and unknown fields") {
  PpoConfig c;
  c.learning_rate = 1e-3;
  c.seed = 42;
  const auto back = ppo_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_AS(ppo_config_from_json(nlohmann::json::parse(R"({"lr": 0.1})")), ParseError);
  CHECK_THROWS_AS(ppo_config_from_json(nlohmann::json::parse(R"({"clip_ratio": "big"})")), ParseError);
  CHECK(ppo_config_from_json(nlohmann::json::parse(R"({"epochs_per_update": 3})")).epochs_per_update == 3);
}

TEST_CASE("one rollout worth of steps performs exactly one update") {
  PpoConfig c = small_config(0);
  c.total_steps = c.rollout_length;
  const auto r = train(make_pendulum(), {8}, NormalizationMode::Post, {1.0}, c);
  CHECK(r.updates == 1);
  CHECK(r.gradient_steps == c.epochs_per_update * (c.rollout_length / c.minibatch_size));
  REQUIRE(r.curve.points.size() == 1);
  CHECK(r.curve.points[0].env_steps == c.rollout_length);
}

TEST_CASE("training is deterministic per seed") {
  const auto env = make_pendulum();
  const auto a = train(env, {16, 16}, NormalizationMode::Post, {1.0, 1.0}, small_config(7));
  const auto b = train(env, {16, 16}, NormalizationMode::Post, {1.0, 1.0}, small_config(7));
  const auto c = train(env, {16, 16}, NormalizationMode::Post, {1.0, 1.0}, small_config(8));
  REQUIRE(a.curve.points.size() == b.curve.points.size());
  for (std::size_t i = 0; i < a.curve.points.size(); ++i) {
    CHECK(a.curve.points[i].mean_return == b.curve.points[i].mean_return);
    CHECK(a.curve.points[i].min_return == b.curve.points[i].min_return);
  }
  for (std::size_t l = 0; l < a.policy.weights().size(); ++l) {
    CHECK(a.policy.weights()[l] == b.policy.weights()[l]);
  }
  CHECK(a.policy.weights()[0] != c.policy.weights()[0]);
}

TEST_CASE("spectral constraint holds after training") {
  const auto env = make_gtm();
  const auto pre = train(env, {32, 32}, NormalizationMode::Pre, {0.31, 0.31, 0.31}, small_config(1));
  CHECK(is_normalized(pre.policy));
  for (const auto& w : pre.policy.weights()) {
    CHECK(std::abs(Eigen::JacobiSVD<Matrix>(w).singularValues()(0) - 0.31) < 1e-6);
  }
  const auto post = train(make_pendulum(), {16, 16}, NormalizationMode::Post, {1.0, 1.0}, small_config(1));
  CHECK(is_normalized(post.policy));
  // The output layer stays free in post mode.
  CHECK(post.policy.normalized_layers().size() == 2);
}

TEST_CASE("train rejects a delta count that does not fit the mode") {
  CHECK_THROWS_AS(train(make_pendulum(), {8, 8}, NormalizationMode::Pre, {1.0, 1.0}, small_config(0)),
                  ContractViolation);
}

TEST_CASE("evaluate is a deterministic noise-free rollout") {
  const auto env = make_pendulum();
  const auto zero = testutil::zero_policy(2, {4}, 1);
  const auto r0 = evaluate(env, zero, {Vector::Zero(2)}, 200);
  CHECK(r0.returns[0] == 0.0);

  const auto pol = testutil::random_post_policy(2, {8}, 1, 1.0, 4);
  const auto same = pol.with_weights(pol.weights());
  const auto a = evaluate(env, pol, env.eval_starts, 200);
  const auto b = evaluate(env, same, env.eval_starts, 200);
  CHECK(a.returns == b.returns);
  CHECK(a.trajectories[0].steps() <= 200);
}
