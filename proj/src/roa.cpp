#include "sncert/roa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sncert/errors.hpp"
#include "sncert/kernels.hpp"

namespace sncert {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s, const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("grid spec: '" + s + "' is not a number in " + field);
  }
  if (used != s.size() || !std::isfinite(v)) {
    throw ParseError("grid spec: '" + s + "' is not a number in " + field);
  }
  return v;
}

int resolve_axis(const std::string& name, const std::vector<std::string>& state_names) {
  for (std::size_t i = 0; i < state_names.size(); ++i) {
    if (state_names[i] == name) return static_cast<int>(i);
  }
  std::string digits = name;
  if (!digits.empty() && digits.front() == 'x') digits.erase(0, 1);
  if (!digits.empty() && std::all_of(digits.begin(), digits.end(),
                                     [](unsigned char c) { return std::isdigit(c) != 0; })) {
    const int idx = std::stoi(digits);
    if (idx < static_cast<int>(state_names.size())) return idx;
  }
  std::string valid;
  for (const auto& n : state_names) valid += (valid.empty() ? "" : ", ") + n;
  throw ParseError("grid spec: unknown axis '" + name + "' (states: " + valid + ")");
}

}  // namespace

std::size_t GridSpec::point_count() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
  return n;
}

Matrix GridSpec::points() const {
  const std::size_t total = point_count();
  Matrix pts = Matrix::Zero(state_dim, static_cast<Eigen::Index>(total));
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
      const auto idx = rest % static_cast<std::size_t>(it->count);
      rest /= static_cast<std::size_t>(it->count);
      const double t = static_cast<double>(idx) / static_cast<double>(it->count - 1);
      pts(it->state_index, static_cast<Eigen::Index>(k)) = it->lo + t * (it->hi - it->lo);
    }
  }
  return pts;
}

GridSpec parse_grid_spec(const std::string& text, const std::vector<std::string>& state_names) {
  GridSpec spec;
  spec.state_dim = static_cast<int>(state_names.size());
  for (const auto& raw : split(text, ',')) {
    const std::string part = trim(raw);
    const auto fields = split(part, ':');
    if (fields.size() != 4) {
      throw ParseError("grid spec: axis '" + part + "' must look like name:lo:hi:count");
    }
    GridAxis axis;
    axis.state_index = resolve_axis(trim(fields[0]), state_names);
    axis.lo = parse_number(trim(fields[1]), part);
    axis.hi = parse_number(trim(fields[2]), part);
    const double count = parse_number(trim(fields[3]), part);
    if (count != std::floor(count) || count < 2 || count > 1e6) {
      throw ParseError("grid spec: resolution must be an integer >= 2 in '" + part + "'");
    }
    axis.count = static_cast<int>(count);
    if (!(axis.hi > axis.lo)) throw ParseError("grid spec: need lo < hi in '" + part + "'");
    for (const auto& other : spec.axes) {
      if (other.state_index == axis.state_index) {
        throw ParseError("grid spec: axis '" + trim(fields[0]) + "' listed twice");
      }
    }
    spec.axes.push_back(axis);
  }
  if (spec.axes.empty()) throw ParseError("grid spec: no axes given");
  return spec;
}

std::size_t RoaGridReport::converged_count() const {
  std::size_t n = 0;
  for (bool c : converged) n += c ? 1 : 0;
  return n;
}

RoaGridReport empirical_roa(const DiscreteLtiPlant& plant, const MlpPolicy& policy,
                            const GridSpec& grid, int horizon, double tol) {
  if (grid.state_dim != plant.state_dim()) {
    throw ContractViolation("empirical_roa: grid dimension does not match the plant");
  }
  for (const auto& a : grid.axes) {
    if (a.count < 2) throw ContractViolation("empirical_roa: resolution must be >= 2 per axis");
  }
  if (horizon < 1 || !(tol > 0.0)) {
    throw ContractViolation("empirical_roa: horizon >= 1 and tol > 0 required");
  }
  RoaGridReport report;
  report.horizon = horizon;
  report.tol = tol;
  report.points = grid.points();
  const auto outcomes = kernels::parallel::closed_loop_final(plant, policy, report.points, horizon);
  report.converged.reserve(outcomes.size());
  for (const auto& o : outcomes) report.converged.push_back(!o.diverged && o.final_norm < tol);
  return report;
}

std::vector<std::size_t> soundness_audit(const Ellipsoid& e, const RoaGridReport& report) {
  std::vector<std::size_t> bad;
  for (std::size_t k = 0; k < report.size(); ++k) {
    if (!report.converged[k] && e.contains(report.points.col(static_cast<Eigen::Index>(k)))) {
      bad.push_back(k);
    }
  }
  return bad;
}

std::vector<std::size_t> soundness_audit(const StabilityCertificate& cert,
                                         const RoaGridReport& report) {
  return soundness_audit(ellipsoid_of(cert), report);
}

double volume_proxy(const Ellipsoid& e) {
  if (e.p.rows() != e.p.cols() || e.p.rows() == 0 ||
      (e.p - e.p.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + e.p.cwiseAbs().maxCoeff())) {
    throw ContractViolation("volume_proxy: P must be square and symmetric");
  }
  Eigen::LLT<Matrix> llt(e.p);
  if (llt.info() != Eigen::Success) throw ContractViolation("volume_proxy: P is not positive definite");
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < e.p.rows(); ++i) {
    const double d = llt.matrixL()(i, i);
    if (!(d > 0.0)) throw ContractViolation("volume_proxy: P is not positive definite");
    log_det += 2.0 * std::log(d);
  }
  return std::exp(-0.5 * log_det);
}

Matrix ellipse_boundary(const Ellipsoid& e, int i, int j, int angles) {
  const auto n = e.p.rows();
  if (i < 0 || j < 0 || i >= n || j >= n || i == j || angles < 3) {
    throw ContractViolation("ellipse_boundary: need two distinct coordinates and >= 3 angles");
  }
  Matrix sub(2, 2);
  sub << e.p(i, i), e.p(i, j), e.p(j, i), e.p(j, j);
  Eigen::LLT<Matrix> llt(sub);
  if (llt.info() != Eigen::Success) throw ContractViolation("ellipse_boundary: slice of P is not SPD");
  // With sub = L L', x = L^-T (cos t, sin t) satisfies x' sub x = 1.
  const Matrix lt = llt.matrixU();
  Matrix pts(2, angles);
  for (int k = 0; k < angles; ++k) {
    const double t = 2.0 * std::numbers::pi * k / angles;
    Vector c(2);
    c << std::cos(t), std::sin(t);
    const Vector x = lt.triangularView<Eigen::Upper>().solve(c);
    pts(0, k) = e.center(i) + x(0);
    pts(1, k) = e.center(j) + x(1);
  }
  return pts;
}

void write_roa_csv(std::ostream& os, const RoaGridReport& report,
                   const std::vector<std::string>& state_names) {
  for (const auto& n : state_names) os << n << ',';
  os << "converged\n";
  os.precision(17);
  for (std::size_t k = 0; k < report.size(); ++k) {
    for (Eigen::Index r = 0; r < report.points.rows(); ++r) {
      os << report.points(r, static_cast<Eigen::Index>(k)) << ',';
    }
    os << (report.converged[k] ? 1 : 0) << '\n';
  }
}

void write_boundary_csv(std::ostream& os, const Matrix& boundary,
                        const std::vector<std::string>& axis_names) {
  for (std::size_t i = 0; i < axis_names.size(); ++i) os << (i ? "," : "") << axis_names[i];
  os << '\n';
  os.precision(17);
  for (Eigen::Index k = 0; k < boundary.cols(); ++k) {
    for (Eigen::Index r = 0; r < boundary.rows(); ++r) os << (r ? "," : "") << boundary(r, k);
    os << '\n';
  }
}

void write_frontier_csv(std::ostream& os, const std::vector<FrontierPoint>& frontier) {
  os << "mu,feasible\n";
  os.precision(17);
  for (const auto& f : frontier) os << f.mu << ',' << (f.feasible ? 1 : 0) << '\n';
}

}  // namespace sncert
