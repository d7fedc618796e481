#pragma once

// Data-parallel inner loops. Every kernel exists twice: an OpenMP version
// used by the library and a serial reference kept for tests and benchmarks.
// Both produce identical results for any thread count: outputs are written
// per index and reductions are over integer counts or max.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sncert/plant.hpp"
#include "sncert/policy.hpp"

namespace sncert::kernels {

struct ClosedLoopOutcome {
  double final_norm = 0.0;
  bool diverged = false;
};

struct SectorAudit {
  std::int64_t samples = 0;
  std::int64_t out_of_box = 0;     // |v^i_j| > vbar^i_j
  std::int64_t out_of_sector = 0;  // tanh(v)/v outside [alpha, 1]
};

struct LyapunovAudit {
  std::int64_t samples = 0;
  std::int64_t violations = 0;
  // max over samples of (V(x+) - V(x)) / V(x)
  double max_relative_change = -std::numeric_limits<double>::infinity();
};

// Round-off allowance for the box and sector comparisons.
inline constexpr double kAuditSlack = 1e-12;

// Sample matrices (x0s, xs) hold one state per column.
namespace serial {

std::vector<double> frequency_sweep(const Matrix& a, const Matrix& b,
                                    std::span<const double> omegas);

std::vector<ClosedLoopOutcome> closed_loop_final(const DiscreteLtiPlant& plant,
                                                 const MlpPolicy& policy,
                                                 const Matrix& x0s, int horizon);

SectorAudit sector_audit(const MlpPolicy& policy, const std::vector<Vector>& vbar,
                         const std::vector<Vector>& alpha, const Matrix& xs);

std::int64_t gain_violations(const MlpPolicy& policy, double bound,
                             const Matrix& xs);

// A sample violates when V(x+) - V(x) >= max_relative_change * V(x).
LyapunovAudit lyapunov_decrease(const DiscreteLtiPlant& plant,
                                const MlpPolicy& policy, const Matrix& p,
                                const Matrix& xs, double max_relative_change);

}  // namespace serial

namespace parallel {

std::vector<double> frequency_sweep(const Matrix& a, const Matrix& b,
                                    std::span<const double> omegas);

std::vector<ClosedLoopOutcome> closed_loop_final(const DiscreteLtiPlant& plant,
                                                 const MlpPolicy& policy,
                                                 const Matrix& x0s, int horizon);

SectorAudit sector_audit(const MlpPolicy& policy, const std::vector<Vector>& vbar,
                         const std::vector<Vector>& alpha, const Matrix& xs);

std::int64_t gain_violations(const MlpPolicy& policy, double bound,
                             const Matrix& xs);

LyapunovAudit lyapunov_decrease(const DiscreteLtiPlant& plant,
                                const MlpPolicy& policy, const Matrix& p,
                                const Matrix& xs, double max_relative_change);

}  // namespace parallel

}  // namespace sncert::kernels
