#include "sncert/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace sncert::kernels {

namespace {

ClosedLoopOutcome run_closed_loop(const DiscreteLtiPlant& plant,
                                  const MlpPolicy& policy, const Vector& x0,
                                  int horizon) {
  Vector x = x0;
  for (int k = 0; k < horizon; ++k) {
    x = plant.a() * x + plant.b() * act(policy, x);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceBound) {
      return {std::numeric_limits<double>::infinity(), true};
    }
  }
  return {x.norm(), false};
}

void audit_one(const MlpPolicy& policy, const std::vector<Vector>& vbar,
               const std::vector<Vector>& alpha, const Vector& x,
               SectorAudit& out) {
  const ForwardPass pass = forward(policy, x);
  for (std::size_t layer = 0; layer < pass.pre.size(); ++layer) {
    const Vector& v = pass.pre[layer];
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double bound = vbar[layer](j);
      if (std::abs(v(j)) > bound * (1.0 + kAuditSlack) + kAuditSlack) ++out.out_of_box;
      const double ratio = std::abs(v(j)) < 1e-8 ? 1.0 : std::tanh(v(j)) / v(j);
      if (ratio < alpha[layer](j) - kAuditSlack || ratio > 1.0 + kAuditSlack) {
        ++out.out_of_sector;
      }
    }
  }
  ++out.samples;
}

double relative_lyapunov_change(const DiscreteLtiPlant& plant,
                                const MlpPolicy& policy, const Matrix& p,
                                const Vector& x) {
  const Vector next = plant.a() * x + plant.b() * act(policy, x);
  const double v_now = x.dot(p * x);
  const double v_next = next.dot(p * next);
  return (v_next - v_now) / v_now;
}

}  // namespace

namespace serial {

std::vector<double> frequency_sweep(const Matrix& a, const Matrix& b,
                                    std::span<const double> omegas) {
  std::vector<double> out(omegas.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    out[i] = frequency_gain(a, b, omegas[i]);
  }
  return out;
}

std::vector<ClosedLoopOutcome> closed_loop_final(const DiscreteLtiPlant& plant,
                                                 const MlpPolicy& policy,
                                                 const Matrix& x0s, int horizon) {
  std::vector<ClosedLoopOutcome> out(static_cast<std::size_t>(x0s.cols()));
  for (Eigen::Index i = 0; i < x0s.cols(); ++i) {
    out[static_cast<std::size_t>(i)] =
        run_closed_loop(plant, policy, x0s.col(i), horizon);
  }
  return out;
}

SectorAudit sector_audit(const MlpPolicy& policy, const std::vector<Vector>& vbar,
                         const std::vector<Vector>& alpha, const Matrix& xs) {
  SectorAudit total;
  for (Eigen::Index i = 0; i < xs.cols(); ++i) {
    audit_one(policy, vbar, alpha, xs.col(i), total);
  }
  return total;
}

std::int64_t gain_violations(const MlpPolicy& policy, double bound,
                             const Matrix& xs) {
  std::int64_t violations = 0;
  for (Eigen::Index i = 0; i < xs.cols(); ++i) {
    const Vector x = xs.col(i);
    if (act(policy, x).norm() > bound * x.norm() * (1.0 + 1e-12)) ++violations;
  }
  return violations;
}

LyapunovAudit lyapunov_decrease(const DiscreteLtiPlant& plant,
                                const MlpPolicy& policy, const Matrix& p,
                                const Matrix& xs, double max_relative_change) {
  LyapunovAudit audit;
  for (Eigen::Index i = 0; i < xs.cols(); ++i) {
    const double change = relative_lyapunov_change(plant, policy, p, xs.col(i));
    if (!(change < max_relative_change)) ++audit.violations;
    audit.max_relative_change = std::max(audit.max_relative_change, change);
    ++audit.samples;
  }
  return audit;
}

}  // namespace serial

namespace parallel {

std::vector<double> frequency_sweep(const Matrix& a, const Matrix& b,
                                    std::span<const double> omegas) {
  std::vector<double> out(omegas.size());
  const auto n = static_cast<std::int64_t>(omegas.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        frequency_gain(a, b, omegas[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<ClosedLoopOutcome> closed_loop_final(const DiscreteLtiPlant& plant,
                                                 const MlpPolicy& policy,
                                                 const Matrix& x0s, int horizon) {
  std::vector<ClosedLoopOutcome> out(static_cast<std::size_t>(x0s.cols()));
  const auto n = static_cast<std::int64_t>(x0s.cols());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        run_closed_loop(plant, policy, x0s.col(i), horizon);
  }
  return out;
}

SectorAudit sector_audit(const MlpPolicy& policy, const std::vector<Vector>& vbar,
                         const std::vector<Vector>& alpha, const Matrix& xs) {
  std::int64_t samples = 0;
  std::int64_t out_of_box = 0;
  std::int64_t out_of_sector = 0;
  const auto n = static_cast<std::int64_t>(xs.cols());
#pragma omp parallel for schedule(static) reduction(+ : samples, out_of_box, out_of_sector)
  for (std::int64_t i = 0; i < n; ++i) {
    SectorAudit local;
    audit_one(policy, vbar, alpha, xs.col(i), local);
    samples += local.samples;
    out_of_box += local.out_of_box;
    out_of_sector += local.out_of_sector;
  }
  return {samples, out_of_box, out_of_sector};
}

std::int64_t gain_violations(const MlpPolicy& policy, double bound,
                             const Matrix& xs) {
  std::int64_t violations = 0;
  const auto n = static_cast<std::int64_t>(xs.cols());
#pragma omp parallel for schedule(static) reduction(+ : violations)
  for (std::int64_t i = 0; i < n; ++i) {
    const Vector x = xs.col(i);
    if (act(policy, x).norm() > bound * x.norm() * (1.0 + 1e-12)) ++violations;
  }
  return violations;
}

LyapunovAudit lyapunov_decrease(const DiscreteLtiPlant& plant,
                                const MlpPolicy& policy, const Matrix& p,
                                const Matrix& xs, double max_relative_change) {
  std::int64_t violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::int64_t>(xs.cols());
#pragma omp parallel for schedule(static) reduction(+ : violations) reduction(max : worst)
  for (std::int64_t i = 0; i < n; ++i) {
    const double change = relative_lyapunov_change(plant, policy, p, xs.col(i));
    if (!(change < max_relative_change)) ++violations;
    worst = std::max(worst, change);
  }
  LyapunovAudit audit;
  audit.samples = n;
  audit.violations = violations;
  audit.max_relative_change = worst;
  return audit;
}

}  // namespace parallel

}  // namespace sncert::kernels
