#pragma once

// A-posteriori local stability certificate for a zero-bias tanh policy in
// feedback with a discrete LTI plant. Local sectors are derived from a box on
// the first-layer preactivations; a quadratic Lyapunov function is found by
// semidefinite programming and its sublevel set {x : x'Px <= 1} is an inner
// approximation of the region of attraction.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sncert/errors.hpp"
#include "sncert/plant.hpp"
#include "sncert/policy.hpp"
#include "sncert/sdp.hpp"

namespace sncert {

struct SectorBounds {
  std::vector<Vector> vbar;   // per hidden layer, symmetric box [-vbar, vbar]
  std::vector<Vector> alpha;  // per hidden layer, tanh(vbar) / vbar
  std::vector<Vector> beta;   // per hidden layer, all ones for tanh

  Vector stacked_alpha() const;
  Vector stacked_beta() const;
};

// Interval propagation of the first-layer box through |W|.
SectorBounds propagate_bounds(const MlpPolicy& policy, const Vector& vbar1);

// Lower sector slope of tanh on [-v, v]; 1 in the limit v -> 0.
double tanh_sector_slope(double v);

struct LmiProblem {
  int state_dim = 0;
  int input_dim = 0;
  int neuron_count = 0;
  Matrix a, b;
  NMatrix n;
  Matrix r_v;    // (n_x + n_u) x (n_x + n_phi)
  Matrix r_phi;  // 2 n_phi x (n_x + n_phi)
  Matrix psi;    // 2 n_phi x 2 n_phi
  Vector alpha, beta;
  std::vector<Matrix> weights;
  Matrix w1;     // first-layer weights, n_1 x n_x
  Vector vbar1;

  int lmi1_size() const { return state_dim + neuron_count; }

  // R_V' [A'PA - P, A'PB; B'PA, B'PB] R_V + R_phi' Psi' M(lambda) Psi R_phi.
  Matrix lmi1(const Matrix& p, const Vector& lambda) const;
  // [vbar1_i^2, W1_i; W1_i', P].
  Matrix lmi2_block(int row, const Matrix& p) const;
};

LmiProblem build_lmi(const DiscreteLtiPlant& plant, const MlpPolicy& policy,
                     const SectorBounds& sectors);

struct StabilityCertificate {
  Matrix p;
  Vector lambda;
  Vector vbar1;
  Vector x_star;
  double lmi1_margin = 0.0;   // largest eigenvalue of the LMI-1 matrix, < 0
  double lmi2_min_eig = 0.0;  // smallest eigenvalue across LMI-2 blocks, >= -1e-9
  double p_min_eig = 0.0;
  double lambda_min = 0.0;
  std::string objective;
};

struct Ellipsoid {
  Matrix p;
  Vector center;

  // (x - center)' P (x - center) <= 1
  bool contains(const Vector& x) const;
};

Ellipsoid ellipsoid_of(const StabilityCertificate& cert);

struct CertificateMargins {
  double lmi1_max_eig = 0.0;
  double lmi2_min_eig = 0.0;
  double p_min_eig = 0.0;
  double lambda_min = 0.0;
};

enum class CertificateObjective { Feasibility, MinTraceP };

// Backend failure that is not a proof of infeasibility.
class SolverFailure : public NumericError {
 public:
  SolverFailure(const std::string& what, sdp::Status status)
      : NumericError(what), status_(status) {}
  sdp::Status status() const { return status_; }

 private:
  sdp::Status status_;
};

struct CertificateOutcome {
  bool feasible = false;
  std::optional<StabilityCertificate> certificate;
  double feasibility_margin = 0.0;  // optimal s of the normalized phase-I problem
  std::string message;
};

// Throws SolverFailure when the backend neither solves nor proves infeasibility.
CertificateOutcome solve_certificate(const LmiProblem& problem,
                                     CertificateObjective objective,
                                     const sdp::Options& options = {});

// Rebuilds both LMIs from the raw weights and checks every inequality with a
// symmetric eigensolver. Throws CertificateRejected naming the first failure.
CertificateMargins verify_certificate(const DiscreteLtiPlant& plant,
                                      const MlpPolicy& policy,
                                      const SectorBounds& sectors,
                                      const StabilityCertificate& cert);

inline constexpr double kLmi2Tolerance = 1e-9;

struct FrontierPoint {
  double mu = 0.0;
  bool feasible = false;
};

struct VbarSearchResult {
  bool feasible = false;
  double mu = 0.0;
  std::optional<StabilityCertificate> certificate;
  SectorBounds sectors;
  std::vector<FrontierPoint> frontier;  // in evaluation order
  std::string message;
};

// Bisection on a uniform first-layer bound vbar1 = mu * 1 for the largest
// feasible mu in [mu_lo, mu_hi]; the winner is re-solved with min trace(P).
VbarSearchResult search_vbar(const DiscreteLtiPlant& plant, const MlpPolicy& policy,
                             double mu_lo, double mu_hi, double rel_tol = 1e-3,
                             const sdp::Options& options = {});

// Single mu feasibility test (phase I only).
bool lmi_feasible(const DiscreteLtiPlant& plant, const MlpPolicy& policy, double mu,
                  const sdp::Options& options = {});

// W1_i P^-1 W1_i' <= vbar1_i^2 for every first-layer row.
bool ellipsoid_in_polytope(const StabilityCertificate& cert, const Matrix& w1);

nlohmann::json to_json(const StabilityCertificate& cert);

}  // namespace sncert
