#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

namespace sncert::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitInfeasible = 3,
  kExitNumericFailure = 4,
};

// Exactly one of the two should be set; an env name also supplies reward,
// termination and state names.
struct PlantSource {
  std::string plant_path;
  std::string env;
};

struct TrainOptions {
  std::string config_path;
  std::string env;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct GainOptions {
  PlantSource source;
  std::string out;
};

struct CertifyPreOptions {
  PlantSource source;
  std::string policy_path;
  std::string out;
};

struct CertifyPostOptions {
  PlantSource source;
  std::string policy_path;
  double mu_min = 0.01;
  double mu_max = 5.0;
  double rel_tol = 1e-3;
  std::string out;
};

struct SimulateOptions {
  PlantSource source;
  std::string policy_path;
  std::string x0;  // "pi,0"; empty: the env's first evaluation start
  int steps = 200;
  std::string out;
};

struct RoaGridOptions {
  PlantSource source;
  std::string policy_path;
  std::string grid;
  std::string certificate_path;
  int horizon = 400;
  double tol = 1e-3;
  std::string out;
};

struct ReportOptions {
  std::string run_dir;
};

int cmd_train(const TrainOptions& opt, std::ostream& out);
int cmd_gain(const GainOptions& opt, std::ostream& out);
int cmd_certify_pre(const CertifyPreOptions& opt, std::ostream& out);
int cmd_certify_post(const CertifyPostOptions& opt, std::ostream& out);
int cmd_simulate(const SimulateOptions& opt, std::ostream& out);
int cmd_roa_grid(const RoaGridOptions& opt, std::ostream& out);
int cmd_report(const ReportOptions& opt, std::ostream& out);

// Runs a command and maps library exceptions onto exit codes, printing the
// message to err.
int run_guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace sncert::cli
