#pragma once

#include <string>
#include <vector>

#include "sncert/plant.hpp"

namespace sncert {

// Quadratic stage cost weights; reward is -(x'Qx + u'Ru).
struct RewardSpec {
  Vector q_diag;
  Matrix r;
};

enum class EnvKind { Pendulum, Gtm };

struct EnvSpec {
  std::string name;
  EnvKind kind;
  DiscreteLtiPlant plant;
  RewardSpec reward;
  int max_episode_steps = 200;
  // Episode resets draw x0 uniformly from [reset_low, reset_high].
  Vector reset_low;
  Vector reset_high;
  // Deterministic evaluation starts.
  std::vector<Vector> eval_starts;
  std::vector<std::string> state_names;

  bool terminated(const Vector& x) const;
  Termination termination() const;
};

EnvSpec make_pendulum();
EnvSpec make_gtm();

// "pendulum" | "gtm"; throws ContractViolation listing valid names otherwise.
EnvSpec make_env(const std::string& name);
const std::vector<std::string>& env_names();

double reward(const RewardSpec& spec, const Vector& x, const Vector& u);

// simulate() plus per-step rewards.
TrajectoryRecord rollout(const EnvSpec& env, const Controller& controller,
                         const Vector& x0, int horizon);

}  // namespace sncert
