#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sncert/errors.hpp"
#include "sncert/sdp.hpp"

using namespace sncert;
using namespace sncert::sdp;

namespace {

Problem single_block(const Matrix& c, const std::vector<Matrix>& as, const Vector& b) {
  Problem p;
  p.num_variables = static_cast<int>(as.size());
  p.block_sizes = {static_cast<int>(c.rows())};
  p.block_constants = {svec(c)};
  for (std::size_t i = 0; i < as.size(); ++i) {
    p.terms.push_back({static_cast<int>(i), 0, svec(as[i])});
  }
  p.lp_constant = Vector::Zero(0);
  p.lp_matrix = Matrix::Zero(0, p.num_variables);
  p.objective = b;
  return p;
}

}  // namespace

TEST_CASE("svec and smat are inverse and preserve the inner product") {
  std::mt19937_64 rng(1);
  for (int n = 1; n <= 6; ++n) {
    Matrix s = testutil::gaussian(n, n, rng);
    s = (s + s.transpose()).eval();
    Matrix t = testutil::gaussian(n, n, rng);
    t = (t + t.transpose()).eval();
    CHECK(svec(s).size() == svec_size(n));
    CHECK((smat(svec(s), n) - s).norm() <= 1e-14 * s.norm());
    CHECK(svec(s).dot(svec(t)) == doctest::Approx((s.array() * t.array()).sum()).epsilon(1e-12));
  }
}

TEST_CASE("largest eigenvalue as an SDP") {
  Matrix m(3, 3);
  m << 2.0, -1.0, 0.5, -1.0, 3.0, 0.25, 0.5, 0.25, 1.0;
  // maximize -t  s.t.  t I - M >= 0
  const auto r = solve(single_block(-m, {-Matrix::Identity(3, 3)}, Vector::Constant(1, -1.0)));
  REQUIRE(r.status == Status::Solved);
  CHECK(r.y(0) == doctest::Approx(3.619050050384).epsilon(1e-7));
  CHECK(r.relative_gap <= 1e-8);
}

TEST_CASE("two-variable SDP with linear side constraints matches an external solver") {
  Matrix c(3, 3), a1(3, 3), a2(3, 3);
  c << 4.0, 1.0, 0.0, 1.0, 3.0, -0.5, 0.0, -0.5, 2.0;
  a1 << 1.0, 0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0;
  a2 << 0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 1.0;
  Vector b(2);
  b << 1.0, 2.0;
  Problem p = single_block(c, {a1, a2}, b);
  // y0 >= -1, y1 >= -1, y0 + y1 <= 3
  p.lp_constant = Vector(3);
  p.lp_constant << 1.0, 1.0, 3.0;
  p.lp_matrix = Matrix(3, 2);
  p.lp_matrix << -1.0, 0.0, 0.0, -1.0, 1.0, 1.0;
  const auto r = solve(p);
  REQUIRE(r.status == Status::Solved);
  CHECK(r.primal_objective == doctest::Approx(2.6946850).epsilon(1e-6));
  CHECK(r.y(0) == doctest::Approx(0.204911).epsilon(1e-4));
  CHECK(r.y(1) == doctest::Approx(1.244887).epsilon(1e-4));

  // complementary slackness and feasibility of the returned pair
  const Matrix z = c - r.y(0) * a1 - r.y(1) * a2;
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(z).eigenvalues().minCoeff() >= -1e-8);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(r.dual[0]).eigenvalues().minCoeff() >= -1e-8);
  CHECK(std::abs((z.array() * r.dual[0].array()).sum()) <= 1e-6);
}

TEST_CASE("contradictory linear constraints are reported infeasible") {
  Problem p = single_block(Matrix::Identity(2, 2), {Matrix::Zero(2, 2)}, Vector::Ones(1));
  // y >= 1 and y <= 0
  p.lp_constant = Vector(2);
  p.lp_constant << -1.0, 0.0;
  p.lp_matrix = Matrix(2, 1);
  p.lp_matrix << -1.0, 1.0;
  CHECK(solve(p).status == Status::Infeasible);
}

TEST_CASE("infeasible PSD constraint") {
  // -I - y * 0 >= 0 has no solution
  const auto r = solve(single_block(-Matrix::Identity(2, 2), {Matrix::Zero(2, 2)}, Vector::Ones(1)));
  CHECK(r.status == Status::Infeasible);
}

TEST_CASE("unbounded objective is not reported as solved") {
  // I + y I >= 0 for every y >= -1
  const auto r = solve(single_block(Matrix::Identity(2, 2), {-Matrix::Identity(2, 2)}, Vector::Ones(1)));
  CHECK(r.status != Status::Solved);
  CHECK(r.status != Status::Infeasible);
}

TEST_CASE("random multi-block problems satisfy the optimality conditions") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 10; ++t) {
    Problem p;
    p.num_variables = 3;
    p.block_sizes = {3, 2};
    // Strictly feasible at y = 0 and bounded because y is boxed by the LP part.
    for (int k = 0; k < 2; ++k) {
      const int n = p.block_sizes[static_cast<std::size_t>(k)];
      Matrix g = testutil::gaussian(n, n, rng);
      p.block_constants.push_back(svec(g * g.transpose() + Matrix::Identity(n, n)));
      for (int i = 0; i < 3; ++i) {
        Matrix a = testutil::gaussian(n, n, rng);
        p.terms.push_back({i, k, svec(a + a.transpose())});
      }
    }
    p.lp_constant = Vector::Constant(6, 10.0);
    p.lp_matrix = Matrix(6, 3);
    p.lp_matrix << Matrix::Identity(3, 3), -Matrix::Identity(3, 3);
    p.objective = testutil::gaussian(3, 1, rng);
    const auto r = solve(p);
    REQUIRE(r.status == Status::Solved);
    CHECK(std::abs(r.primal_objective - r.dual_objective) <=
          1e-7 * (1.0 + std::abs(r.primal_objective)));
    for (const auto& z : r.slack) {
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(z).eigenvalues().minCoeff() >= -1e-8);
    }
    CHECK(r.lp_slack.minCoeff() >= -1e-8);
  }
}

TEST_CASE("malformed problems are contract violations") {
  Problem p = single_block(Matrix::Identity(2, 2), {Matrix::Identity(2, 2)}, Vector::Ones(1));
  p.terms[0].coefficients = Vector::Ones(5);
  CHECK_THROWS_AS(p.validate(), ContractViolation);
  CHECK_THROWS_AS(solve(p), ContractViolation);
}
