#include "sncert/certify_post.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace sncert {

namespace {

double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Vector stack(const std::vector<Vector>& parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.size();
  Vector out(total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

// Maps the packed variable index k to the (row, col) entry of symmetric P.
std::vector<std::pair<int, int>> p_basis(int n) {
  std::vector<std::pair<int, int>> out;
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r <= c; ++r) out.emplace_back(r, c);
  }
  return out;
}

Matrix p_from_vars(const Vector& y, int n) {
  Matrix p = Matrix::Zero(n, n);
  int k = 0;
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r <= c; ++r, ++k) {
      p(r, c) = y(k);
      p(c, r) = y(k);
    }
  }
  return p;
}

Matrix unit_sym(int n, int r, int c) {
  Matrix e = Matrix::Zero(n, n);
  e(r, c) = 1.0;
  e(c, r) = 1.0;
  return e;
}

// Coefficient matrices of LMI-1 for each P entry and each multiplier.
struct Lmi1Basis {
  std::vector<Matrix> p_terms;
  std::vector<Matrix> lambda_terms;
};

Lmi1Basis lmi1_basis(const LmiProblem& prob) {
  const int nx = prob.state_dim;
  const int nphi = prob.neuron_count;
  const int n = nx + nphi;
  Matrix ab(nx, nx + prob.input_dim);
  ab << prob.a, prob.b;
  const Matrix f = ab * prob.r_v;
  Matrix g = Matrix::Zero(nx, n);
  g.leftCols(nx).setIdentity();

  Lmi1Basis basis;
  for (const auto& [r, c] : p_basis(nx)) {
    const Vector fr = f.row(r).transpose();
    const Vector fc = f.row(c).transpose();
    const Vector gr = g.row(r).transpose();
    const Vector gc = g.row(c).transpose();
    Matrix term = fr * fc.transpose() - gr * gc.transpose();
    if (r != c) term += fc * fr.transpose() - gc * gr.transpose();
    basis.p_terms.push_back(0.5 * (term + term.transpose()));
  }
  const Matrix t = prob.psi * prob.r_phi;
  for (int j = 0; j < nphi; ++j) {
    const Vector p = t.row(j).transpose();
    const Vector q = t.row(nphi + j).transpose();
    basis.lambda_terms.push_back(p * q.transpose() + q * p.transpose());
  }
  return basis;
}

// LMI-1 rebuilt from the raw layer maps: x+ = A x + B u, v = V xi, w = S xi
// with xi = (x, w), and the sector terms written out neuron by neuron.
Matrix lmi1_direct(const Matrix& a, const Matrix& b, const std::vector<Matrix>& weights,
                   const Vector& alpha, const Vector& beta, const Matrix& p,
                   const Vector& lambda) {
  const auto nx = a.rows();
  const int layers = static_cast<int>(weights.size()) - 1;
  Eigen::Index nphi = 0;
  for (int i = 0; i < layers; ++i) nphi += weights[static_cast<std::size_t>(i)].rows();
  const auto n = nx + nphi;

  Matrix v_map = Matrix::Zero(nphi, n);
  Matrix w_map = Matrix::Zero(nphi, n);
  w_map.rightCols(nphi).setIdentity();
  Eigen::Index row = 0;
  Eigen::Index prev_col = 0;
  for (int i = 0; i < layers; ++i) {
    const Matrix& w = weights[static_cast<std::size_t>(i)];
    if (i == 0) {
      v_map.block(row, 0, w.rows(), nx) = w;
    } else {
      v_map.block(row, nx + prev_col, w.rows(), w.cols()) = w;
      prev_col += w.cols();
    }
    row += w.rows();
  }
  Matrix u_map = Matrix::Zero(b.cols(), n);
  const Matrix& last = weights.back();
  if (layers == 0) {
    u_map.leftCols(nx) = last;
  } else {
    u_map.rightCols(last.cols()) = last;
  }
  Matrix next = b * u_map;
  next.leftCols(nx) += a;
  Matrix now = Matrix::Zero(nx, n);
  now.leftCols(nx).setIdentity();

  Matrix out = next.transpose() * p * next - now.transpose() * p * now;
  for (Eigen::Index j = 0; j < nphi; ++j) {
    const Vector upper = beta(j) * v_map.row(j).transpose() - w_map.row(j).transpose();
    const Vector lower = w_map.row(j).transpose() - alpha(j) * v_map.row(j).transpose();
    out += lambda(j) * (upper * lower.transpose() + lower * upper.transpose());
  }
  return 0.5 * (out + out.transpose());
}

Matrix lmi2_direct(const Matrix& w1, const Vector& vbar1, int row, const Matrix& p) {
  const auto nx = p.rows();
  Matrix block(nx + 1, nx + 1);
  block(0, 0) = vbar1(row) * vbar1(row);
  block.block(0, 1, 1, nx) = w1.row(row);
  block.block(1, 0, nx, 1) = w1.row(row).transpose();
  block.bottomRightCorner(nx, nx) = p;
  return block;
}

struct RawMargins {
  CertificateMargins margins;
  std::string failure;  // empty if accepted
  double failure_value = 0.0;
};

RawMargins check_raw(const Matrix& a, const Matrix& b, const std::vector<Matrix>& weights,
                     const Vector& alpha, const Vector& beta, const Vector& vbar1,
                     const Matrix& p, const Vector& lambda) {
  RawMargins out;
  auto& m = out.margins;
  m.p_min_eig = min_eig(p);
  m.lambda_min = lambda.size() > 0 ? lambda.minCoeff() : 0.0;
  m.lmi1_max_eig = max_eig(lmi1_direct(a, b, weights, alpha, beta, p, lambda));
  m.lmi2_min_eig = std::numeric_limits<double>::infinity();
  const Matrix& w1 = weights.front();
  if (weights.size() > 1) {
    for (Eigen::Index i = 0; i < w1.rows(); ++i) {
      m.lmi2_min_eig = std::min(m.lmi2_min_eig, min_eig(lmi2_direct(w1, vbar1, static_cast<int>(i), p)));
    }
  }
  if (!std::isfinite(m.lmi2_min_eig)) m.lmi2_min_eig = 0.0;

  if (!p.allFinite() || !lambda.allFinite()) {
    out.failure = "non-finite certificate entries";
    out.failure_value = std::numeric_limits<double>::quiet_NaN();
  } else if (!(m.p_min_eig > 0.0)) {
    out.failure = "P positive definite";
    out.failure_value = m.p_min_eig;
  } else if (m.lambda_min < 0.0) {
    out.failure = "lambda nonnegative";
    out.failure_value = m.lambda_min;
  } else if (!(m.lmi1_max_eig < 0.0)) {
    out.failure = "LMI-1 negative definite";
    out.failure_value = m.lmi1_max_eig;
  } else if (m.lmi2_min_eig < -kLmi2Tolerance) {
    out.failure = "LMI-2 blocks positive semidefinite";
    out.failure_value = m.lmi2_min_eig;
  }
  return out;
}

RawMargins check_problem(const LmiProblem& prob, const Matrix& p, const Vector& lambda) {
  return check_raw(prob.a, prob.b, prob.weights, prob.alpha, prob.beta, prob.vbar1, p, lambda);
}

// Smallest c >= 1 with W1_i (cP)^-1 W1_i' <= vbar_i^2 for all rows.
double lmi2_scale(const LmiProblem& prob, const Matrix& p) {
  if (prob.weights.size() < 2) return 1.0;
  Eigen::LLT<Matrix> llt(p);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < prob.w1.rows(); ++i) {
    const Vector wi = prob.w1.row(i).transpose();
    const double q = wi.dot(llt.solve(wi));
    worst = std::max(worst, q / (prob.vbar1(i) * prob.vbar1(i)));
  }
  return std::max(1.0, worst * (1.0 + 1e-7));
}

StabilityCertificate make_certificate(const LmiProblem& prob, const Matrix& p,
                                      const Vector& lambda, const CertificateMargins& m,
                                      const char* objective) {
  StabilityCertificate cert;
  cert.p = p;
  cert.lambda = lambda;
  cert.vbar1 = prob.vbar1;
  cert.x_star = Vector::Zero(prob.state_dim);
  cert.lmi1_margin = m.lmi1_max_eig;
  cert.lmi2_min_eig = m.lmi2_min_eig;
  cert.p_min_eig = m.p_min_eig;
  cert.lambda_min = m.lambda_min;
  cert.objective = objective;
  return cert;
}

void add_term(sdp::Problem& sp, int variable, int block, const Matrix& coeff) {
  if (coeff.cwiseAbs().maxCoeff() == 0.0) return;
  sp.terms.push_back({variable, block, sdp::svec(coeff)});
}

struct PhaseOne {
  double s = 0.0;
  double scale = 0.0;
  Matrix p;
  Vector lambda;
};

// maximize -s  s.t.  LMI-1(P, lambda) <= s I,  P >= eta I,  lambda >= 0,
// trace(P) + sum(lambda) <= 1. LMI-1 is homogeneous, so s < 0 iff a strict
// solution exists.
PhaseOne phase_one(const LmiProblem& prob, const Lmi1Basis& basis, const sdp::Options& opts) {
  const int nx = prob.state_dim;
  const int nphi = prob.neuron_count;
  const int np = sdp::svec_size(nx);
  const int m = np + nphi + 1;
  const int n = nx + nphi;
  const double eta = 1e-8;

  sdp::Problem sp;
  sp.num_variables = m;
  sp.block_sizes = {n, nx};
  sp.block_constants = {sdp::svec(Matrix::Zero(n, n)), sdp::svec(-eta * Matrix::Identity(nx, nx))};
  const auto pb = p_basis(nx);
  for (int k = 0; k < np; ++k) {
    add_term(sp, k, 0, basis.p_terms[static_cast<std::size_t>(k)]);
    const auto [r, c] = pb[static_cast<std::size_t>(k)];
    add_term(sp, k, 1, -unit_sym(nx, r, c));
  }
  for (int j = 0; j < nphi; ++j) add_term(sp, np + j, 0, basis.lambda_terms[static_cast<std::size_t>(j)]);
  add_term(sp, m - 1, 0, -Matrix::Identity(n, n));

  sp.lp_constant = Vector::Zero(nphi + 1);
  sp.lp_matrix = Matrix::Zero(nphi + 1, m);
  for (int j = 0; j < nphi; ++j) sp.lp_matrix(j, np + j) = -1.0;
  sp.lp_constant(nphi) = 1.0;
  for (int k = 0; k < np; ++k) {
    if (pb[static_cast<std::size_t>(k)].first == pb[static_cast<std::size_t>(k)].second) sp.lp_matrix(nphi, k) = 1.0;
  }
  for (int j = 0; j < nphi; ++j) sp.lp_matrix(nphi, np + j) = 1.0;
  sp.objective = Vector::Zero(m);
  sp.objective(m - 1) = -1.0;

  const sdp::Result res = sdp::solve(sp, opts);
  // An unconverged iterate with s < 0 is still usable because the caller
  // verifies it; with s >= 0 it proves nothing either way.
  const bool usable = res.y.size() == m && res.y.allFinite() && res.y(m - 1) < 0.0;
  if (res.status != sdp::Status::Solved && !usable) {
    throw SolverFailure("phase-I solve failed: " + sdp::to_string(res.status) + " (" +
                            res.message + ")",
                        res.status);
  }
  PhaseOne out;
  out.p = p_from_vars(res.y.head(np), nx);
  out.lambda = res.y.segment(np, nphi).cwiseMax(0.0);
  out.s = res.y(m - 1);
  out.scale = std::max(prob.lmi1(out.p, out.lambda).norm(), std::numeric_limits<double>::min());
  return out;
}

// maximize -trace(P)  s.t.  LMI-1 <= -eps I, LMI-2 blocks, P >= 1e-8 I,
// 0 <= lambda <= lambda_cap.
sdp::Result min_trace(const LmiProblem& prob, const Lmi1Basis& basis, double eps,
                      double lambda_cap, const sdp::Options& opts) {
  const int nx = prob.state_dim;
  const int nphi = prob.neuron_count;
  const int np = sdp::svec_size(nx);
  const int m = np + nphi;
  const int n = nx + nphi;
  const int n1 = nphi > 0 ? static_cast<int>(prob.w1.rows()) : 0;

  sdp::Problem sp;
  sp.num_variables = m;
  sp.block_sizes.push_back(n);
  sp.block_constants.push_back(sdp::svec(-eps * Matrix::Identity(n, n)));
  for (int i = 0; i < n1; ++i) {
    Matrix c = Matrix::Zero(nx + 1, nx + 1);
    c(0, 0) = prob.vbar1(i) * prob.vbar1(i);
    c.block(0, 1, 1, nx) = prob.w1.row(i);
    c.block(1, 0, nx, 1) = prob.w1.row(i).transpose();
    sp.block_sizes.push_back(nx + 1);
    sp.block_constants.push_back(sdp::svec(c));
  }
  sp.block_sizes.push_back(nx);
  sp.block_constants.push_back(sdp::svec(-1e-8 * Matrix::Identity(nx, nx)));

  const auto pb = p_basis(nx);
  for (int k = 0; k < np; ++k) {
    const auto [r, c] = pb[static_cast<std::size_t>(k)];
    const Matrix e = unit_sym(nx, r, c);
    add_term(sp, k, 0, basis.p_terms[static_cast<std::size_t>(k)]);
    for (int i = 0; i < n1; ++i) {
      Matrix big = Matrix::Zero(nx + 1, nx + 1);
      big.bottomRightCorner(nx, nx) = -e;
      add_term(sp, k, 1 + i, big);
    }
    add_term(sp, k, 1 + n1, -e);
  }
  for (int j = 0; j < nphi; ++j) add_term(sp, np + j, 0, basis.lambda_terms[static_cast<std::size_t>(j)]);

  sp.lp_constant = Vector::Zero(2 * nphi);
  sp.lp_matrix = Matrix::Zero(2 * nphi, m);
  for (int j = 0; j < nphi; ++j) {
    sp.lp_matrix(j, np + j) = -1.0;
    sp.lp_matrix(nphi + j, np + j) = 1.0;
    sp.lp_constant(nphi + j) = lambda_cap;
  }
  sp.objective = Vector::Zero(m);
  for (int k = 0; k < np; ++k) {
    if (pb[static_cast<std::size_t>(k)].first == pb[static_cast<std::size_t>(k)].second) sp.objective(k) = -1.0;
  }
  return sdp::solve(sp, opts);
}

}  // namespace

double tanh_sector_slope(double v) {
  if (!(v > 0.0)) throw ContractViolation("tanh_sector_slope: bound must be positive");
  if (v < 1e-6) return 1.0 - v * v / 3.0;
  return std::tanh(v) / v;
}

Vector SectorBounds::stacked_alpha() const { return stack(alpha); }
Vector SectorBounds::stacked_beta() const { return stack(beta); }

SectorBounds propagate_bounds(const MlpPolicy& policy, const Vector& vbar1) {
  const auto& w = policy.weights();
  const int layers = policy.hidden_layers();
  if (layers < 1) throw ContractViolation("propagate_bounds: policy has no hidden layer");
  if (vbar1.size() != w.front().rows()) {
    throw ContractViolation("propagate_bounds: vbar1 length must equal the first layer width");
  }
  if (!vbar1.allFinite() || vbar1.minCoeff() <= 0.0) {
    throw ContractViolation("propagate_bounds: vbar1 entries must be positive");
  }

  SectorBounds s;
  Vector vb = vbar1;
  for (int i = 0; i < layers; ++i) {
    if (i > 0) {
      const Vector wbar = s.vbar.back().array().tanh().matrix();
      vb = w[static_cast<std::size_t>(i)].cwiseAbs() * wbar;
    }
    Vector alpha(vb.size());
    for (Eigen::Index j = 0; j < vb.size(); ++j) {
      // A neuron with all-zero incoming weights sees v = 0, where tanh is tangent to slope 1.
      alpha(j) = vb(j) > 0.0 ? tanh_sector_slope(vb(j)) : 1.0;
    }
    s.vbar.push_back(vb);
    s.alpha.push_back(alpha);
    s.beta.push_back(Vector::Ones(vb.size()));
  }
  return s;
}

Matrix LmiProblem::lmi1(const Matrix& p, const Vector& lambda) const {
  const int nx = state_dim;
  const int nu = input_dim;
  Matrix mid(nx + nu, nx + nu);
  mid << a.transpose() * p * a - p, a.transpose() * p * b, b.transpose() * p * a,
      b.transpose() * p * b;
  Matrix mult = Matrix::Zero(2 * neuron_count, 2 * neuron_count);
  mult.topRightCorner(neuron_count, neuron_count) = lambda.asDiagonal();
  mult.bottomLeftCorner(neuron_count, neuron_count) = lambda.asDiagonal();
  Matrix out = r_v.transpose() * mid * r_v + r_phi.transpose() * psi.transpose() * mult * psi * r_phi;
  return 0.5 * (out + out.transpose());
}

Matrix LmiProblem::lmi2_block(int row, const Matrix& p) const {
  if (row < 0 || row >= w1.rows()) throw ContractViolation("lmi2_block: row out of range");
  return lmi2_direct(w1, vbar1, row, p);
}

LmiProblem build_lmi(const DiscreteLtiPlant& plant, const MlpPolicy& policy,
                     const SectorBounds& sectors) {
  if (policy.state_dim() != plant.state_dim() || policy.input_dim() != plant.input_dim()) {
    throw ContractViolation("build_lmi: plant/policy dimension mismatch");
  }
  const auto sizes = policy.hidden_sizes();
  if (sectors.vbar.size() != sizes.size() || sectors.alpha.size() != sizes.size() ||
      sectors.beta.size() != sizes.size()) {
    throw ContractViolation("build_lmi: sector bounds do not match the hidden layers");
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sectors.vbar[i].size() != sizes[i] || sectors.alpha[i].size() != sizes[i] ||
        sectors.beta[i].size() != sizes[i]) {
      throw ContractViolation("build_lmi: sector bounds do not match the hidden layers");
    }
  }

  LmiProblem prob;
  prob.state_dim = plant.state_dim();
  prob.input_dim = plant.input_dim();
  prob.neuron_count = policy.neuron_count();
  prob.a = plant.a();
  prob.b = plant.b();
  prob.n = assemble_n_matrix(policy);
  prob.weights = policy.weights();
  prob.alpha = sectors.stacked_alpha();
  prob.beta = sectors.stacked_beta();
  prob.w1 = policy.weights().front();
  prob.vbar1 = sectors.vbar.empty() ? Vector() : sectors.vbar.front();

  const int nx = prob.state_dim;
  const int nu = prob.input_dim;
  const int nphi = prob.neuron_count;
  prob.r_v = Matrix::Zero(nx + nu, nx + nphi);
  prob.r_v.topLeftCorner(nx, nx).setIdentity();
  prob.r_v.block(nx, 0, nu, nx) = prob.n.ux;
  prob.r_v.block(nx, nx, nu, nphi) = prob.n.uw;

  prob.r_phi = Matrix::Zero(2 * nphi, nx + nphi);
  prob.r_phi.block(0, 0, nphi, nx) = prob.n.vx;
  prob.r_phi.block(0, nx, nphi, nphi) = prob.n.vw;
  prob.r_phi.block(nphi, nx, nphi, nphi).setIdentity();

  prob.psi = Matrix::Zero(2 * nphi, 2 * nphi);
  prob.psi.topLeftCorner(nphi, nphi) = prob.beta.asDiagonal();
  prob.psi.topRightCorner(nphi, nphi) = -Matrix::Identity(nphi, nphi);
  prob.psi.bottomLeftCorner(nphi, nphi) = -Matrix(prob.alpha.asDiagonal());
  prob.psi.bottomRightCorner(nphi, nphi).setIdentity();
  return prob;
}

CertificateOutcome solve_certificate(const LmiProblem& problem,
                                     CertificateObjective objective,
                                     const sdp::Options& options) {
  if (problem.state_dim < 1 || problem.a.rows() != problem.state_dim ||
      problem.r_v.cols() != problem.lmi1_size() ||
      problem.psi.rows() != 2 * problem.neuron_count) {
    throw ContractViolation("solve_certificate: malformed LMI problem");
  }
  const Lmi1Basis basis = lmi1_basis(problem);

  CertificateOutcome out;
  const PhaseOne p1 = phase_one(problem, basis, options);
  out.feasibility_margin = p1.s;
  const double eps_rel = 1e-8;
  if (!(p1.s < -eps_rel * p1.scale)) {
    std::ostringstream msg;
    msg << "no strict solution: phase-I optimum s = " << p1.s << " (relative "
        << p1.s / p1.scale << ")";
    out.message = msg.str();
    return out;
  }

  const double c = lmi2_scale(problem, p1.p);
  const Matrix p_feas = c * p1.p;
  const Vector lambda_feas = c * p1.lambda;
  const RawMargins feas = check_problem(problem, p_feas, lambda_feas);
  if (!feas.failure.empty()) {
    out.message = "phase-I point failed verification (" + feas.failure + "); treated as not certified";
    return out;
  }
  out.feasible = true;
  out.certificate = make_certificate(problem, p_feas, lambda_feas, feas.margins, "feasibility");
  out.message = "feasible";
  if (objective == CertificateObjective::Feasibility) return out;

  const double eps = eps_rel * c * p1.scale;
  const double lambda_cap =
      1e3 * std::max(1.0, lambda_feas.size() > 0 ? lambda_feas.maxCoeff() : 0.0);
  const sdp::Result res = min_trace(problem, basis, eps, lambda_cap, options);
  // Whatever the backend status, the iterate is only used if it verifies.
  if (res.y.size() == problem.neuron_count + sdp::svec_size(problem.state_dim) && res.y.allFinite()) {
    const int np = sdp::svec_size(problem.state_dim);
    Matrix p = p_from_vars(res.y.head(np), problem.state_dim);
    Vector lambda = res.y.segment(np, problem.neuron_count).cwiseMax(0.0);
    const double polish = lmi2_scale(problem, p);
    if (std::isfinite(polish)) {
      p *= polish;
      lambda *= polish;
      const RawMargins mt = check_problem(problem, p, lambda);
      if (mt.failure.empty() && p.trace() <= p_feas.trace()) {
        out.certificate = make_certificate(problem, p, lambda, mt.margins, "min_trace_P");
        out.message = "feasible (min trace)";
        return out;
      }
    }
  }
  out.message = "feasible (min-trace refinement " + sdp::to_string(res.status) +
                " or unverified; keeping phase-I certificate)";
  return out;
}

CertificateMargins verify_certificate(const DiscreteLtiPlant& plant, const MlpPolicy& policy,
                                      const SectorBounds& sectors,
                                      const StabilityCertificate& cert) {
  const int nx = plant.state_dim();
  if (cert.p.rows() != nx || cert.p.cols() != nx ||
      cert.lambda.size() != policy.neuron_count() ||
      cert.vbar1.size() != policy.weights().front().rows() ||
      policy.state_dim() != nx || policy.input_dim() != plant.input_dim()) {
    throw ContractViolation("verify_certificate: certificate shape does not match plant/policy");
  }
  if (sectors.vbar.empty() || sectors.vbar.front().size() != cert.vbar1.size() ||
      (sectors.vbar.front() - cert.vbar1).cwiseAbs().maxCoeff() >
          1e-12 * (1.0 + cert.vbar1.cwiseAbs().maxCoeff())) {
    throw ContractViolation("verify_certificate: sectors were not derived from the certificate's vbar1");
  }
  const Matrix p = 0.5 * (cert.p + cert.p.transpose());
  const RawMargins r = check_raw(plant.a(), plant.b(), policy.weights(), sectors.stacked_alpha(),
                                 sectors.stacked_beta(), cert.vbar1, p, cert.lambda);
  if (!r.failure.empty()) throw CertificateRejected(r.failure, r.failure_value);
  return r.margins;
}

bool lmi_feasible(const DiscreteLtiPlant& plant, const MlpPolicy& policy, double mu,
                  const sdp::Options& options) {
  const SectorBounds s =
      propagate_bounds(policy, Vector::Constant(policy.weights().front().rows(), mu));
  return solve_certificate(build_lmi(plant, policy, s), CertificateObjective::Feasibility, options)
      .feasible;
}

VbarSearchResult search_vbar(const DiscreteLtiPlant& plant, const MlpPolicy& policy,
                             double mu_lo, double mu_hi, double rel_tol,
                             const sdp::Options& options) {
  if (!(mu_lo > 0.0) || !(mu_hi >= mu_lo) || !(rel_tol > 0.0)) {
    throw ContractViolation("search_vbar: need 0 < mu_lo <= mu_hi and rel_tol > 0");
  }
  const auto n1 = policy.weights().front().rows();
  VbarSearchResult result;
  std::ostringstream notes;

  const auto test = [&](double mu) {
    bool ok = false;
    try {
      ok = lmi_feasible(plant, policy, mu, options);
    } catch (const SolverFailure& e) {
      notes << "mu=" << mu << ": " << e.what() << "; ";
    }
    result.frontier.push_back({mu, ok});
    return ok;
  };

  double lo = mu_lo;
  double hi = mu_hi;
  if (!test(lo)) {
    const SectorBounds s = propagate_bounds(policy, Vector::Constant(n1, lo));
    std::ostringstream msg;
    msg << "infeasible at mu_lo=" << lo;
    try {
      const auto o = solve_certificate(build_lmi(plant, policy, s),
                                       CertificateObjective::Feasibility, options);
      msg << " (phase-I optimum " << o.feasibility_margin << ": " << o.message << ")";
    } catch (const SolverFailure& e) {
      msg << " (" << e.what() << ")";
    }
    result.message = msg.str() + (notes.str().empty() ? "" : "; " + notes.str());
    return result;
  }
  if (mu_hi > mu_lo && test(hi)) {
    lo = hi;
  } else if (mu_hi > mu_lo) {
    while (hi - lo > rel_tol * lo) {
      const double mid = 0.5 * (lo + hi);
      if (test(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }

  result.mu = lo;
  result.sectors = propagate_bounds(policy, Vector::Constant(n1, lo));
  const auto o = solve_certificate(build_lmi(plant, policy, result.sectors),
                                   CertificateObjective::MinTraceP, options);
  result.feasible = o.feasible;
  result.certificate = o.certificate;
  result.message = o.message + (notes.str().empty() ? "" : "; " + notes.str());
  return result;
}

bool ellipsoid_in_polytope(const StabilityCertificate& cert, const Matrix& w1) {
  if (w1.cols() != cert.p.rows() || w1.rows() != cert.vbar1.size()) {
    throw ContractViolation("ellipsoid_in_polytope: shape mismatch");
  }
  Eigen::LLT<Matrix> llt(cert.p);
  if (llt.info() != Eigen::Success) {
    throw CertificateRejected("P positive definite", min_eig(cert.p));
  }
  for (Eigen::Index i = 0; i < w1.rows(); ++i) {
    const Vector wi = w1.row(i).transpose();
    if (wi.dot(llt.solve(wi)) > cert.vbar1(i) * cert.vbar1(i)) return false;
  }
  return true;
}

bool Ellipsoid::contains(const Vector& x) const {
  const Vector d = x - center;
  return d.dot(p * d) <= 1.0;
}

Ellipsoid ellipsoid_of(const StabilityCertificate& cert) { return {cert.p, cert.x_star}; }

nlohmann::json to_json(const StabilityCertificate& cert) {
  nlohmann::json j;
  j["P"] = matrix_to_json(cert.p);
  j["lambda"] = vector_to_json(cert.lambda);
  j["vbar1"] = vector_to_json(cert.vbar1);
  j["x_star"] = vector_to_json(cert.x_star);
  j["objective"] = cert.objective;
  j["margins"] = {{"lmi1_margin", cert.lmi1_margin},
                  {"lmi2_min_eig", cert.lmi2_min_eig},
                  {"p_min_eig", cert.p_min_eig},
                  {"lambda_min", cert.lambda_min}};
  return j;
}

}  // namespace sncert
