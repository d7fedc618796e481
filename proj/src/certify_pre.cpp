#include "sncert/certify_pre.hpp"

#include <cmath>
#include <limits>

#include "sncert/errors.hpp"

namespace sncert {

SmallGainReport check_small_gain(const DiscreteLtiPlant& plant,
                                 const MlpPolicy& policy, double gain_tol) {
  if (policy.mode() != NormalizationMode::Pre || !is_normalized(policy)) {
    throw ContractViolation("pre-certificate requires all layers normalized");
  }
  if (policy.state_dim() != plant.state_dim() ||
      policy.input_dim() != plant.input_dim()) {
    throw ContractViolation("check_small_gain: plant/policy dimension mismatch");
  }

  SmallGainReport report;
  report.sigma_bar_pi = gain_upper_bound(policy);
  const L2GainResult gain = l2_gain(plant, gain_tol);
  if (!gain.finite) {
    report.gamma_plant = std::numeric_limits<double>::infinity();
    report.product = std::numeric_limits<double>::infinity();
    report.certified = false;
    report.reason = "plant lacks finite L2 gain";
    return report;
  }
  report.gamma_plant = gain.gain;
  report.product = report.sigma_bar_pi * report.gamma_plant;
  report.certified = report.product < 1.0;
  report.reason = report.certified
                      ? "sigma_bar_pi * gamma_G < 1 (upper bound on loop gain)"
                      : "sigma_bar_pi * gamma_G >= 1";
  return report;
}

double max_uniform_delta(double gamma_plant, int layers, double margin) {
  if (!std::isfinite(gamma_plant) || !(gamma_plant > 0.0)) {
    throw ContractViolation("max_uniform_delta: plant gain must be finite and positive");
  }
  if (layers < 1) throw ContractViolation("max_uniform_delta: layers must be >= 1");
  if (margin < 0.0 || margin >= 1.0) {
    throw ContractViolation("max_uniform_delta: margin must lie in [0, 1)");
  }
  return std::pow(1.0 / gamma_plant, 1.0 / layers) * (1.0 - margin);
}

double max_uniform_delta(const DiscreteLtiPlant& plant, int layers,
                         double margin, double gain_tol) {
  const L2GainResult gain = l2_gain(plant, gain_tol);
  if (!gain.finite) {
    throw ContractViolation("max_uniform_delta: plant lacks finite L2 gain");
  }
  return max_uniform_delta(gain.gain, layers, margin);
}

nlohmann::json to_json(const SmallGainReport& report) {
  nlohmann::json j;
  j["gamma_plant"] = std::isfinite(report.gamma_plant)
                         ? nlohmann::json(report.gamma_plant)
                         : nlohmann::json(nullptr);
  j["sigma_bar_pi"] = report.sigma_bar_pi;
  j["product"] = std::isfinite(report.product) ? nlohmann::json(report.product)
                                               : nlohmann::json(nullptr);
  j["product_is_upper_bound"] = true;
  j["certified"] = report.certified;
  j["reason"] = report.reason;
  return j;
}

}  // namespace sncert
