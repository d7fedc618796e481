#include "cli/config.hpp"

#include <cmath>
#include <fstream>

#include "cli/content_hash.hpp"
#include "sncert/envs.hpp"
#include "sncert/errors.hpp"
#include "sncert/roa.hpp"

namespace sncert::cli {

namespace {

template <typename T>
T field(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("config: field '" + key + "' has the wrong type");
  }
}

CertifyOptions certify_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("config: 'certify' must be an object");
  CertifyOptions c;
  for (const auto& [key, value] : j.items()) {
    if (key == "mu_min") c.mu_min = field<double>(value, "certify.mu_min");
    else if (key == "mu_max") c.mu_max = field<double>(value, "certify.mu_max");
    else if (key == "rel_tol") c.rel_tol = field<double>(value, "certify.rel_tol");
    else if (key == "grid") c.grid = field<std::string>(value, "certify.grid");
    else throw ParseError("config: unknown field 'certify." + key + "'");
  }
  return c;
}

}  // namespace

std::string default_grid(const std::string& env) {
  if (env == "gtm") return "q:-1:1:41,theta:-1:1:41";
  return "theta:-3:3:61,omega:-3:3:61";
}

void RunConfig::validate() const {
  bool known = false;
  for (const auto& n : env_names()) known = known || n == env;
  if (!known) {
    std::string valid;
    for (const auto& n : env_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ParseError("config: unknown env '" + env + "' (valid: " + valid + ")");
  }
  if (hidden.empty()) throw ParseError("config: 'hidden' needs at least one layer");
  for (int h : hidden) {
    if (h < 1) throw ParseError("config: 'hidden' widths must be >= 1");
  }
  std::size_t expected = 0;
  if (mode == NormalizationMode::Pre) expected = hidden.size() + 1;
  if (mode == NormalizationMode::Post) expected = hidden.size();
  if (deltas.size() != expected) {
    throw ParseError("config: mode '" + to_string(mode) + "' with " +
                     std::to_string(hidden.size()) + " hidden layers needs " +
                     std::to_string(expected) + " deltas, got " + std::to_string(deltas.size()));
  }
  for (double d : deltas) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ParseError("config: deltas must be positive");
  }
  if (seeds.empty()) throw ParseError("config: 'seeds' must not be empty");
  try {
    ppo.validate();
  } catch (const ContractViolation& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!(certify.mu_min > 0.0) || !(certify.mu_max >= certify.mu_min) ||
      !std::isfinite(certify.mu_max)) {
    throw ParseError("config: need 0 < certify.mu_min <= certify.mu_max");
  }
  if (!(certify.rel_tol > 0.0) || certify.rel_tol >= 1.0) {
    throw ParseError("config: certify.rel_tol must lie in (0, 1)");
  }
  parse_grid_spec(certify.grid.empty() ? default_grid(env) : certify.grid,
                  make_env(env).state_names);
  if (out.empty()) throw ParseError("config: 'out' must not be empty");
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json ppo = to_json(cfg.ppo);
  ppo.erase("seed");
  return {{"env", cfg.env},
          {"hidden", cfg.hidden},
          {"mode", to_string(cfg.mode)},
          {"deltas", cfg.deltas},
          {"seeds", cfg.seeds},
          {"ppo", ppo},
          {"certify",
           {{"mu_min", cfg.certify.mu_min},
            {"mu_max", cfg.certify.mu_max},
            {"rel_tol", cfg.certify.rel_tol},
            {"grid", cfg.certify.grid.empty() ? default_grid(cfg.env) : cfg.certify.grid}}},
          {"out", cfg.out}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  if (j.contains("seed") && j.contains("seeds")) {
    throw ParseError("config: give either 'seed' or 'seeds', not both");
  }
  RunConfig cfg;
  bool deltas_given = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "env") cfg.env = field<std::string>(value, key);
    else if (key == "hidden") cfg.hidden = field<std::vector<int>>(value, key);
    else if (key == "mode") {
      try {
        cfg.mode = parse_mode(field<std::string>(value, key));
      } catch (const ContractViolation& e) {
        throw ParseError(std::string("config: ") + e.what());
      }
    } else if (key == "deltas") {
      cfg.deltas = field<std::vector<double>>(value, key);
      deltas_given = true;
    } else if (key == "seed") cfg.seeds = {field<std::uint64_t>(value, key)};
    else if (key == "seeds") cfg.seeds = field<std::vector<std::uint64_t>>(value, key);
    else if (key == "ppo") {
      if (value.contains("seed")) throw ParseError("config: set seeds at top level, not in 'ppo'");
      cfg.ppo = ppo_config_from_json(value);
    } else if (key == "certify") cfg.certify = certify_from_json(value);
    else if (key == "out") cfg.out = field<std::string>(value, key);
    else throw ParseError("config: unknown field '" + key + "'");
  }
  if (!deltas_given) {
    // Unit deltas sized to the chosen mode.
    std::size_t n = 0;
    if (cfg.mode == NormalizationMode::Pre) n = cfg.hidden.size() + 1;
    if (cfg.mode == NormalizationMode::Post) n = cfg.hidden.size();
    cfg.deltas.assign(n, 1.0);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string config_hash(const nlohmann::json& canonical) {
  return git_blob_hash(canonical.dump(2) + "\n");
}

std::string config_hash(const RunConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  j.erase("out");
  return config_hash(j);
}

}  // namespace sncert::cli
