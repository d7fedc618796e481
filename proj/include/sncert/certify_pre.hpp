#pragma once

#include <string>

#include <json.hpp>

#include "sncert/plant.hpp"
#include "sncert/policy.hpp"

namespace sncert {

// Small-gain check sigma_bar_pi * gamma_G < 1. `product` is an upper bound on
// the loop gain because sigma_bar_pi only bounds the policy gain.
struct SmallGainReport {
  double gamma_plant = 0.0;  // +inf when the plant gain is unbounded
  double sigma_bar_pi = 0.0;
  double product = 0.0;
  bool certified = false;
  std::string reason;
};

SmallGainReport check_small_gain(const DiscreteLtiPlant& plant,
                                 const MlpPolicy& policy, double gain_tol = 1e-4);

// Uniform per-layer delta that satisfies the small-gain condition:
// (1 / gamma_G)^(1 / layers) * (1 - margin).
double max_uniform_delta(const DiscreteLtiPlant& plant, int layers,
                         double margin = 0.01, double gain_tol = 1e-4);
double max_uniform_delta(double gamma_plant, int layers, double margin = 0.01);

nlohmann::json to_json(const SmallGainReport& report);

}  // namespace sncert
