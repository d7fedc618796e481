#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sncert/policy.hpp"
#include "sncert/trainer.hpp"

namespace sncert::cli {

struct CertifyOptions {
  double mu_min = 0.01;
  double mu_max = 5.0;
  double rel_tol = 1e-3;
  std::string grid;  // empty: derived from the environment
};

struct RunConfig {
  std::string env = "pendulum";
  std::vector<int> hidden{64, 64};
  NormalizationMode mode = NormalizationMode::Post;
  std::vector<double> deltas{1.0, 1.0};
  // One training run per seed; each overrides ppo.seed.
  std::vector<std::uint64_t> seeds{0};
  PpoConfig ppo;
  CertifyOptions certify;
  std::string out = "run";

  // Throws ParseError naming the first invalid field.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
// Unknown fields are rejected. "seed" is accepted as shorthand for a
// one-element "seeds" list.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Hash of the canonical (sorted-key, 2-space) JSON form. The output directory
// is left out so identical runs in different places share a hash.
std::string config_hash(const RunConfig& cfg);
std::string config_hash(const nlohmann::json& canonical);

// Grid used when the config leaves it empty.
std::string default_grid(const std::string& env);

}  // namespace sncert::cli
