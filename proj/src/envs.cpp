#include "sncert/envs.hpp"

#include <cmath>
#include <numbers>

#include "sncert/errors.hpp"

namespace sncert {

namespace {

constexpr double kPi = std::numbers::pi;

// Table parameters for the linearized inverted pendulum.
constexpr double kLength = 0.5;
constexpr double kMass = 0.15;
constexpr double kGravity = 9.8;
constexpr double kFriction = 0.05;
constexpr double kPendulumTs = 0.1;

bool exceeds_limits(EnvKind kind, const Vector& x) {
  switch (kind) {
    case EnvKind::Pendulum:
      return std::abs(x(0)) > 4.0 * kPi;
    case EnvKind::Gtm:
      // x = [u, w, q, theta]
      return std::abs(x(3)) > kPi / 2.0 || std::abs(x(0)) > 5.0 ||
             std::abs(x(1)) > 5.0;
  }
  return false;
}

}  // namespace

bool EnvSpec::terminated(const Vector& x) const { return exceeds_limits(kind, x); }

Termination EnvSpec::termination() const {
  return [k = kind](const Vector& x) { return exceeds_limits(k, x); };
}

EnvSpec make_pendulum() {
  const double ml2 = kMass * kLength * kLength;
  Matrix a(2, 2);
  a << 1.0, kPendulumTs, kPendulumTs * kGravity / kLength,
      1.0 - kPendulumTs * kFriction / ml2;
  Matrix b(2, 1);
  b << 0.0, kPendulumTs / ml2;

  Vector q(2);
  q << 2.0, 2.0;
  Matrix r(1, 1);
  r << 0.001;

  Vector low(2), high(2);
  low << -kPi, -1.0;
  high << kPi, 1.0;
  Vector start(2);
  start << kPi, 0.0;

  return EnvSpec{"pendulum",
                 EnvKind::Pendulum,
                 DiscreteLtiPlant(a, b, kPendulumTs),
                 RewardSpec{q, r},
                 200,
                 low,
                 high,
                 {start},
                 {"theta", "omega"}};
}

EnvSpec make_gtm() {
  Matrix a(4, 4);
  a << 9.968e-1, 1.530e-2, -1.079e-1, -4.891e-1,   //
      -8.300e-3, 7.932e-1, 1.938, -2.090e-2,       //
      1.900e-3, -5.050e-2, 7.436e-1, 2.405e-4,     //
      4.681e-5, -1.362e-3, 4.386e-2, 1.000;
  Matrix b(4, 1);
  b << 3.145e-3, -7.140e-2, -4.969e-2, -1.306e-3;

  Vector q = Vector::Constant(4, 2.0);
  Matrix r(1, 1);
  r << 10.0;

  Vector low = Vector::Constant(4, -1.0);
  Vector high = Vector::Constant(4, 1.0);

  std::vector<Vector> starts;
  for (int i = 0; i < 4; ++i) {
    Vector s = Vector::Zero(4);
    s(i) = i == 3 ? 0.5 : 1.0;
    starts.push_back(s);
  }

  return EnvSpec{"gtm",
                 EnvKind::Gtm,
                 DiscreteLtiPlant(a, b, 0.05),
                 RewardSpec{q, r},
                 200,
                 low,
                 high,
                 std::move(starts),
                 {"u", "w", "q", "theta"}};
}

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names{"pendulum", "gtm"};
  return names;
}

EnvSpec make_env(const std::string& name) {
  if (name == "pendulum") return make_pendulum();
  if (name == "gtm") return make_gtm();
  throw ContractViolation("unknown environment '" + name +
                          "' (valid: pendulum, gtm)");
}

double reward(const RewardSpec& spec, const Vector& x, const Vector& u) {
  if (x.size() != spec.q_diag.size() || u.size() != spec.r.rows()) {
    throw ContractViolation("reward: dimension mismatch");
  }
  const double state_cost = (spec.q_diag.array() * x.array().square()).sum();
  const double input_cost = u.dot(spec.r * u);
  return -(state_cost + input_cost);
}

TrajectoryRecord rollout(const EnvSpec& env, const Controller& controller,
                         const Vector& x0, int horizon) {
  TrajectoryRecord rec =
      simulate(env.plant, controller, x0, horizon, env.termination());
  rec.rewards.reserve(rec.inputs.size());
  for (std::size_t k = 0; k < rec.inputs.size(); ++k) {
    rec.rewards.push_back(reward(env.reward, rec.states[k], rec.inputs[k]));
  }
  return rec;
}

}  // namespace sncert
