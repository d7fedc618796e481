#include "sncert/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sncert/errors.hpp"

namespace sncert::sdp {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// A_{i,k} = sum_r sign_r u_r u_r' over the columns r owned by variable i.
struct LowRankBlock {
  int n = 0;
  Matrix constant;
  Matrix u;
  Vector sign;
  std::vector<int> owner;
};

struct Workspace {
  std::vector<LowRankBlock> blocks;
  Vector lp_c;
  Matrix lp_d;
  Vector b;
  int m = 0;
  double norm_b = 0.0;
  double norm_c = 0.0;
  double max_a = 0.0;
};

Workspace factorize(const Problem& problem) {
  Workspace ws;
  ws.m = problem.num_variables;
  ws.b = problem.objective;
  ws.lp_c = problem.lp_constant;
  ws.lp_d = problem.lp_matrix;

  std::map<std::pair<int, int>, Vector> merged;
  for (const auto& t : problem.terms) {
    auto [it, inserted] = merged.try_emplace({t.block, t.variable}, t.coefficients);
    if (!inserted) it->second += t.coefficients;
  }

  std::vector<double> a_norm_sq(static_cast<std::size_t>(ws.m), 0.0);
  for (int j = 0; j < ws.m; ++j) {
    a_norm_sq[static_cast<std::size_t>(j)] = ws.lp_d.rows() ? ws.lp_d.col(j).squaredNorm() : 0.0;
  }

  double c_sq = ws.lp_c.squaredNorm();
  ws.blocks.resize(problem.block_sizes.size());
  for (std::size_t k = 0; k < problem.block_sizes.size(); ++k) {
    auto& blk = ws.blocks[k];
    blk.n = problem.block_sizes[k];
    blk.constant = smat(problem.block_constants[k], blk.n);
    c_sq += blk.constant.squaredNorm();
  }

  std::vector<std::vector<Vector>> cols(ws.blocks.size());
  std::vector<std::vector<double>> signs(ws.blocks.size());
  for (const auto& [key, coeffs] : merged) {
    const auto [block, var] = key;
    auto& blk = ws.blocks[static_cast<std::size_t>(block)];
    const Matrix dense = smat(coeffs, blk.n);
    a_norm_sq[static_cast<std::size_t>(var)] += dense.squaredNorm();

    std::vector<int> support;
    for (int r = 0; r < blk.n; ++r) {
      if (dense.row(r).cwiseAbs().maxCoeff() > 0.0) support.push_back(r);
    }
    if (support.empty()) continue;
    const auto s = static_cast<Eigen::Index>(support.size());
    Matrix sub(s, s);
    for (Eigen::Index i = 0; i < s; ++i) {
      for (Eigen::Index j = 0; j < s; ++j) {
        sub(i, j) = dense(support[static_cast<std::size_t>(i)],
                          support[static_cast<std::size_t>(j)]);
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sub);
    const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
    for (Eigen::Index e = 0; e < s; ++e) {
      const double lambda = eig.eigenvalues()(e);
      if (std::abs(lambda) <= 1e-13 * scale) continue;
      Vector col = Vector::Zero(blk.n);
      const double root = std::sqrt(std::abs(lambda));
      for (Eigen::Index i = 0; i < s; ++i) {
        col(support[static_cast<std::size_t>(i)]) = root * eig.eigenvectors()(i, e);
      }
      cols[static_cast<std::size_t>(block)].push_back(std::move(col));
      signs[static_cast<std::size_t>(block)].push_back(lambda > 0 ? 1.0 : -1.0);
      blk.owner.push_back(var);
    }
  }
  for (std::size_t k = 0; k < ws.blocks.size(); ++k) {
    auto& blk = ws.blocks[k];
    const auto r = static_cast<Eigen::Index>(cols[k].size());
    blk.u.resize(blk.n, r);
    blk.sign.resize(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      blk.u.col(i) = cols[k][static_cast<std::size_t>(i)];
      blk.sign(i) = signs[k][static_cast<std::size_t>(i)];
    }
  }

  ws.norm_b = ws.b.norm();
  ws.norm_c = std::sqrt(c_sq);
  for (double a : a_norm_sq) ws.max_a = std::max(ws.max_a, std::sqrt(a));
  return ws;
}

// out_i += <A_{i,k}, Y> for one block (Y need not be symmetric).
void add_operator(const LowRankBlock& blk, const Matrix& y, Vector& out) {
  if (blk.u.cols() == 0) return;
  const Matrix yu = y * blk.u;
  for (Eigen::Index r = 0; r < blk.u.cols(); ++r) {
    out(blk.owner[static_cast<std::size_t>(r)]) += blk.sign(r) * blk.u.col(r).dot(yu.col(r));
  }
}

Matrix adjoint(const LowRankBlock& blk, const Vector& y) {
  if (blk.u.cols() == 0) return Matrix::Zero(blk.n, blk.n);
  Vector weights(blk.u.cols());
  for (Eigen::Index r = 0; r < blk.u.cols(); ++r) {
    weights(r) = blk.sign(r) * y(blk.owner[static_cast<std::size_t>(r)]);
  }
  return blk.u * weights.asDiagonal() * blk.u.transpose();
}

// Largest alpha with S + alpha * dS >= 0 (infinity if unrestricted).
double max_step(const Matrix& s, const Matrix& ds) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix scaled = llt.matrixL().solve(ds);
  scaled = llt.matrixL().solve(scaled.transpose()).transpose();
  scaled = 0.5 * (scaled + scaled.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(scaled, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_step_lp(const Vector& s, const Vector& ds) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (ds(i) < 0.0) alpha = std::min(alpha, -s(i) / ds(i));
  }
  return alpha;
}

struct Iterate {
  std::vector<Matrix> x, z;
  Vector x_lp, z_lp, y;
};

struct Direction {
  std::vector<Matrix> dx, dz;
  Vector dx_lp, dz_lp, dy;
};

}  // namespace

int svec_size(int n) { return n * (n + 1) / 2; }

Vector svec(const Matrix& s) {
  const auto n = s.rows();
  Vector v(svec_size(static_cast<int>(n)));
  Eigen::Index idx = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      v(idx++) = i == j ? s(i, j) : kSqrt2 * 0.5 * (s(i, j) + s(j, i));
    }
  }
  return v;
}

Matrix smat(const Vector& v, int n) {
  if (v.size() != svec_size(n)) throw ContractViolation("smat: svec length mismatch");
  Matrix s(n, n);
  Eigen::Index idx = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double value = i == j ? v(idx) : v(idx) / kSqrt2;
      s(i, j) = value;
      s(j, i) = value;
      ++idx;
    }
  }
  return s;
}

void Problem::validate() const {
  if (num_variables < 1) throw ContractViolation("sdp: no variables");
  if (objective.size() != num_variables) throw ContractViolation("sdp: objective length");
  if (block_constants.size() != block_sizes.size()) {
    throw ContractViolation("sdp: one constant per block required");
  }
  for (std::size_t k = 0; k < block_sizes.size(); ++k) {
    if (block_sizes[k] < 1 || block_constants[k].size() != svec_size(block_sizes[k])) {
      throw ContractViolation("sdp: block " + std::to_string(k) + " shape mismatch");
    }
  }
  for (const auto& t : terms) {
    if (t.variable < 0 || t.variable >= num_variables || t.block < 0 ||
        t.block >= static_cast<int>(block_sizes.size()) ||
        t.coefficients.size() != svec_size(block_sizes[static_cast<std::size_t>(t.block)])) {
      throw ContractViolation("sdp: malformed block term");
    }
  }
  if (lp_constant.size() > 0 &&
      (lp_matrix.rows() != lp_constant.size() || lp_matrix.cols() != num_variables)) {
    throw ContractViolation("sdp: LP block shape mismatch");
  }
}

std::string to_string(Status status) {
  switch (status) {
    case Status::Solved:
      return "solved";
    case Status::Infeasible:
      return "infeasible";
    case Status::Unbounded:
      return "unbounded";
    case Status::IterationLimit:
      return "iteration_limit";
    case Status::NumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

Result solve(const Problem& problem, const Options& options) {
  problem.validate();
  const Workspace ws = factorize(problem);
  const int m = ws.m;
  const auto nblocks = ws.blocks.size();
  const auto nlp = ws.lp_c.size();

  int total_dim = static_cast<int>(nlp);
  for (const auto& blk : ws.blocks) total_dim += blk.n;

  // Starting point scaled to the data.
  double max_ratio = 0.0;
  for (int i = 0; i < m; ++i) max_ratio = std::max(max_ratio, (1.0 + std::abs(ws.b(i))) / (1.0 + ws.max_a));
  const double x0 = 10.0 * std::max(1.0, std::sqrt(static_cast<double>(total_dim)) * max_ratio);
  const double z0 = 10.0 * std::max(1.0, (1.0 + std::max(ws.max_a, ws.norm_c)) /
                                             std::sqrt(static_cast<double>(total_dim)));

  Iterate it;
  for (const auto& blk : ws.blocks) {
    it.x.push_back(x0 * Matrix::Identity(blk.n, blk.n));
    it.z.push_back(z0 * Matrix::Identity(blk.n, blk.n));
  }
  it.x_lp = Vector::Constant(nlp, x0);
  it.z_lp = Vector::Constant(nlp, z0);
  it.y = Vector::Zero(m);

  Result result;
  int stalled = 0;

  const auto operator_of = [&](const std::vector<Matrix>& ys, const Vector& y_lp) {
    Vector out = Vector::Zero(m);
    for (std::size_t k = 0; k < nblocks; ++k) add_operator(ws.blocks[k], ys[k], out);
    if (nlp > 0) out += ws.lp_d.transpose() * y_lp;
    return out;
  };

  const auto finish = [&](Status status, int iteration, std::string message) {
    result.status = status;
    result.iterations = iteration;
    result.message = std::move(message);
    result.y = it.y;
    result.slack.clear();
    for (std::size_t k = 0; k < nblocks; ++k) {
      result.slack.push_back(ws.blocks[k].constant - adjoint(ws.blocks[k], it.y));
    }
    result.lp_slack = nlp > 0 ? Vector(ws.lp_c - ws.lp_d * it.y) : Vector();
    result.dual = it.x;
    result.lp_dual = it.x_lp;
    return result;
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // Residuals.
    std::vector<Matrix> rd(nblocks);
    double rd_sq = 0.0;
    double cx = 0.0;
    double xz = 0.0;
    for (std::size_t k = 0; k < nblocks; ++k) {
      rd[k] = ws.blocks[k].constant - it.z[k] - adjoint(ws.blocks[k], it.y);
      rd_sq += rd[k].squaredNorm();
      cx += ws.blocks[k].constant.cwiseProduct(it.x[k]).sum();
      xz += it.x[k].cwiseProduct(it.z[k]).sum();
    }
    Vector rd_lp;
    if (nlp > 0) {
      rd_lp = ws.lp_c - it.z_lp - ws.lp_d * it.y;
      rd_sq += rd_lp.squaredNorm();
      cx += ws.lp_c.dot(it.x_lp);
      xz += it.x_lp.dot(it.z_lp);
    }
    const Vector ax = operator_of(it.x, it.x_lp);
    const Vector rp = ws.b - ax;
    const double by = ws.b.dot(it.y);
    const double mu = xz / total_dim;

    result.primal_objective = by;
    result.dual_objective = cx;
    result.relative_gap = std::abs(cx - by) / (1.0 + std::abs(cx) + std::abs(by));
    result.feasibility_residual = std::sqrt(rd_sq) / (1.0 + ws.norm_c);
    const double x_residual = rp.norm() / (1.0 + ws.norm_b);

    if (result.relative_gap < options.gap_tol &&
        result.feasibility_residual < options.feasibility_tol &&
        x_residual < options.feasibility_tol) {
      return finish(Status::Solved, iter, "converged");
    }
    if (cx < 0.0 && ax.norm() / -cx < options.infeasibility_tol) {
      return finish(Status::Infeasible, iter, "Farkas certificate: A(X) ~ 0 with <C,X> < 0");
    }
    if (by > 0.0) {
      double cr_sq = 0.0;
      for (std::size_t k = 0; k < nblocks; ++k) cr_sq += (ws.blocks[k].constant - rd[k]).squaredNorm();
      if (nlp > 0) cr_sq += (ws.lp_c - rd_lp).squaredNorm();
      if (std::sqrt(cr_sq) / by < options.infeasibility_tol) {
        return finish(Status::Unbounded, iter, "objective unbounded along a recession ray");
      }
    }

    // Z inverses and the Schur complement M_ij = <A_i, X A_j Z^-1>.
    std::vector<Matrix> zinv(nblocks);
    bool z_ok = true;
    for (std::size_t k = 0; k < nblocks; ++k) {
      Eigen::LLT<Matrix> llt(it.z[k]);
      if (llt.info() != Eigen::Success) {
        z_ok = false;
        break;
      }
      zinv[k] = llt.solve(Matrix::Identity(ws.blocks[k].n, ws.blocks[k].n));
      zinv[k] = 0.5 * (zinv[k] + zinv[k].transpose());
    }
    if (!z_ok) {
      const bool close = result.relative_gap < 1e3 * options.gap_tol &&
                         result.feasibility_residual < 1e3 * options.feasibility_tol;
      return finish(close ? Status::Solved : Status::NumericalFailure, iter,
                    "slack lost definiteness");
    }

    Matrix schur = Matrix::Zero(m, m);
    for (std::size_t k = 0; k < nblocks; ++k) {
      const auto& blk = ws.blocks[k];
      const auto r = blk.u.cols();
      if (r == 0) continue;
      const Matrix g1 = blk.u.transpose() * it.x[k] * blk.u;
      const Matrix g2 = blk.u.transpose() * zinv[k] * blk.u;
      for (Eigen::Index c = 0; c < r; ++c) {
        const int oc = blk.owner[static_cast<std::size_t>(c)];
        for (Eigen::Index rr = 0; rr < r; ++rr) {
          schur(blk.owner[static_cast<std::size_t>(rr)], oc) +=
              blk.sign(rr) * blk.sign(c) * g1(rr, c) * g2(rr, c);
        }
      }
    }
    Vector lp_ratio;
    if (nlp > 0) {
      lp_ratio = it.x_lp.cwiseQuotient(it.z_lp);
      schur += ws.lp_d.transpose() * lp_ratio.asDiagonal() * ws.lp_d;
    }
    schur = 0.5 * (schur + schur.transpose());

    Eigen::LLT<Matrix> schur_llt(schur);
    Eigen::LDLT<Matrix> schur_ldlt;
    const bool use_llt = schur_llt.info() == Eigen::Success;
    if (!use_llt) {
      schur_ldlt.compute(schur);
      if (schur_ldlt.info() != Eigen::Success) {
        const bool close = result.relative_gap < 1e3 * options.gap_tol &&
                           result.feasibility_residual < 1e3 * options.feasibility_tol;
        return finish(close ? Status::Solved : Status::NumericalFailure, iter,
                      "Schur complement factorization failed");
      }
    }
    const auto schur_solve = [&](const Vector& rhs) -> Vector {
      return use_llt ? Vector(schur_llt.solve(rhs)) : Vector(schur_ldlt.solve(rhs));
    };

    // Base right-hand side pieces shared by predictor and corrector.
    std::vector<Matrix> x_rd_zinv(nblocks);
    for (std::size_t k = 0; k < nblocks; ++k) x_rd_zinv[k] = it.x[k] * rd[k] * zinv[k];
    Vector x_rd_zinv_lp;
    if (nlp > 0) x_rd_zinv_lp = it.x_lp.cwiseProduct(rd_lp).cwiseQuotient(it.z_lp);
    const Vector base_rhs = ws.b + operator_of(x_rd_zinv, x_rd_zinv_lp);
    Vector zinv_lp;
    if (nlp > 0) zinv_lp = it.z_lp.cwiseInverse();
    const Vector a_zinv = operator_of(zinv, zinv_lp);

    const auto direction = [&](double sigma_mu, const Direction* affine) {
      Vector rhs = base_rhs - sigma_mu * a_zinv;
      std::vector<Matrix> cross(nblocks);
      Vector cross_lp;
      if (affine) {
        for (std::size_t k = 0; k < nblocks; ++k) cross[k] = affine->dx[k] * affine->dz[k] * zinv[k];
        if (nlp > 0) cross_lp = affine->dx_lp.cwiseProduct(affine->dz_lp).cwiseQuotient(it.z_lp);
        rhs += operator_of(cross, cross_lp);
      }
      Direction d;
      d.dy = schur_solve(rhs);
      d.dx.resize(nblocks);
      d.dz.resize(nblocks);
      for (std::size_t k = 0; k < nblocks; ++k) {
        d.dz[k] = rd[k] - adjoint(ws.blocks[k], d.dy);
        Matrix dx = sigma_mu * zinv[k] - it.x[k] - it.x[k] * d.dz[k] * zinv[k];
        if (affine) dx -= cross[k];
        d.dx[k] = 0.5 * (dx + dx.transpose());
      }
      if (nlp > 0) {
        d.dz_lp = rd_lp - ws.lp_d * d.dy;
        d.dx_lp = sigma_mu * zinv_lp - it.x_lp - it.x_lp.cwiseProduct(d.dz_lp).cwiseQuotient(it.z_lp);
        if (affine) d.dx_lp -= cross_lp;
      }
      return d;
    };

    const auto step_lengths = [&](const Direction& d) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nblocks; ++k) {
        ap = std::min(ap, max_step(it.x[k], d.dx[k]));
        ad = std::min(ad, max_step(it.z[k], d.dz[k]));
      }
      if (nlp > 0) {
        ap = std::min(ap, max_step_lp(it.x_lp, d.dx_lp));
        ad = std::min(ad, max_step_lp(it.z_lp, d.dz_lp));
      }
      return std::pair{ap, ad};
    };

    // Predictor.
    const Direction affine = direction(0.0, nullptr);
    auto [ap_aff, ad_aff] = step_lengths(affine);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    double xz_aff = 0.0;
    for (std::size_t k = 0; k < nblocks; ++k) {
      xz_aff += (it.x[k] + ap_aff * affine.dx[k]).cwiseProduct(it.z[k] + ad_aff * affine.dz[k]).sum();
    }
    if (nlp > 0) xz_aff += (it.x_lp + ap_aff * affine.dx_lp).dot(it.z_lp + ad_aff * affine.dz_lp);
    const double mu_aff = std::max(0.0, xz_aff / total_dim);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // Corrector.
    const Direction d = direction(sigma * mu, &affine);
    auto [ap, ad] = step_lengths(d);
    ap = std::min(1.0, options.step_fraction * ap);
    ad = std::min(1.0, options.step_fraction * ad);

    if (ap < 1e-10 && ad < 1e-10) {
      if (++stalled >= 3) {
        const bool close = result.relative_gap < 1e3 * options.gap_tol &&
                           result.feasibility_residual < 1e3 * options.feasibility_tol;
        return finish(close ? Status::Solved : Status::NumericalFailure, iter,
                      "step lengths stalled");
      }
    } else {
      stalled = 0;
    }

    for (std::size_t k = 0; k < nblocks; ++k) {
      it.x[k] += ap * d.dx[k];
      it.z[k] += ad * d.dz[k];
    }
    if (nlp > 0) {
      it.x_lp += ap * d.dx_lp;
      it.z_lp += ad * d.dz_lp;
    }
    it.y += ad * d.dy;
  }
  return finish(Status::IterationLimit, options.max_iterations, "iteration limit reached");
}

}  // namespace sncert::sdp
