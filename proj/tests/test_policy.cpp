#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "sncert/errors.hpp"
#include "sncert/policy.hpp"

using namespace sncert;
using testutil::gaussian;

namespace {

double svd_norm(const Matrix& w) { return Eigen::JacobiSVD<Matrix>(w).singularValues()(0); }

}  // namespace

TEST_CASE("forward examples") {
  MlpPolicy p({Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 2.0)}, {}, NormalizationMode::None);
  const auto pass = forward(p, Vector::Constant(1, 0.5));
  CHECK(pass.u(0) == doctest::Approx(0.924234).epsilon(1e-6));
  CHECK(pass.pre.size() == 1);
  CHECK(pass.post[0](0) == doctest::Approx(std::tanh(0.5)));
  CHECK(act(p, Vector::Zero(1))(0) == 0.0);
  CHECK_THROWS_AS(forward(p, Vector::Constant(1, NAN)), ContractViolation);
}

TEST_CASE("odd symmetry and zero at the origin") {
  const auto p = testutil::random_post_policy(3, {16, 16}, 2, 1.0, 7);
  std::mt19937_64 rng(1);
  CHECK(act(p, Vector::Zero(3)).norm() == 0.0);
  for (int t = 0; t < 100; ++t) {
    const Vector x = gaussian(3, 1, rng, 2.0);
    CHECK((act(p, -x) + act(p, x)).norm() == 0.0);
  }
}

TEST_CASE("spectral norm oracles") {
  CHECK(spectral_norm(Matrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-12));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 3.0, 1.0;
  CHECK(spectral_norm(d) == doctest::Approx(3.0).epsilon(1e-12));

  std::mt19937_64 rng(2024);
  for (int t = 0; t < 50; ++t) {
    const Matrix w = gaussian(8, 8, rng);
    const double oracle = svd_norm(w);
    CHECK(std::abs(spectral_norm(w) - oracle) <= 1e-8 * oracle);
  }
  // rectangular in both orientations
  const Matrix tall = gaussian(64, 2, rng), wide = gaussian(1, 64, rng);
  CHECK(std::abs(spectral_norm(tall) - svd_norm(tall)) <= 1e-8 * svd_norm(tall));
  CHECK(std::abs(spectral_norm(wide) - svd_norm(wide)) <= 1e-8 * svd_norm(wide));
}

TEST_CASE("spectral norm reports the last estimate when it runs out of iterations") {
  Matrix d = Matrix::Zero(40, 40);
  d.diagonal() = Vector::LinSpaced(40, 1.0, 0.5);
  try {
    spectral_norm(d, 1e-12, 3);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.iterations() == 3);
    CHECK(e.last_estimate() > 0.5);
    CHECK(e.last_estimate() <= 1.0 + 1e-12);
  }
}

TEST_CASE("normalize example and invariants") {
  Matrix w(2, 2);
  w << 2, 0, 0, 1;
  MlpPolicy p({w, Matrix::Ones(1, 2)}, {1.0}, NormalizationMode::Post);
  const auto n = normalize(p);
  Matrix expected(2, 2);
  expected << 1, 0, 0, 0.5;
  CHECK((n.weights()[0] - expected).norm() <= 1e-12);
  CHECK(n.weights()[1] == p.weights()[1]);  // output layer untouched in post mode

  const auto pre = testutil::random_pre_policy(4, {32, 32}, 1, 0.31, 3);
  CHECK(is_normalized(pre));
  for (const auto& layer : pre.weights()) {
    CHECK(std::abs(svd_norm(layer) - 0.31) < 1e-6);
  }
  const auto twice = normalize(pre);
  for (std::size_t i = 0; i < pre.weights().size(); ++i) {
    CHECK((twice.weights()[i] - pre.weights()[i]).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("normalize is invariant to positive scaling") {
  std::mt19937_64 rng(8);
  auto ws = testutil::random_layers(3, {10, 10}, 1, rng);
  const MlpPolicy base(ws, {0.7, 0.7}, NormalizationMode::Post);
  for (auto& m : ws) m *= 17.5;
  const MlpPolicy scaled(ws, {0.7, 0.7}, NormalizationMode::Post);
  const auto a = normalize(base), b = normalize(scaled);
  for (int i = 0; i < 2; ++i) {
    const auto& wa = a.weights()[static_cast<std::size_t>(i)];
    CHECK((wa - b.weights()[static_cast<std::size_t>(i)]).norm() <= 1e-12 * wa.norm());
  }
}

TEST_CASE("zero layer cannot be normalized") {
  MlpPolicy p({Matrix::Zero(2, 2), Matrix::Ones(1, 2)}, {1.0}, NormalizationMode::Post);
  CHECK_THROWS_AS(normalize(p), NormalizationError);
}

TEST_CASE("constructor enforces chaining and delta counts") {
  CHECK_THROWS_AS(MlpPolicy({Matrix::Ones(3, 2), Matrix::Ones(1, 4)}, {}, NormalizationMode::None),
                  ContractViolation);
  CHECK_THROWS_AS(MlpPolicy({Matrix::Ones(3, 2), Matrix::Ones(1, 3)}, {1.0}, NormalizationMode::Pre),
                  ContractViolation);
  CHECK_THROWS_AS(MlpPolicy({Matrix::Ones(3, 2), Matrix::Ones(1, 3)}, {-1.0}, NormalizationMode::Post),
                  ContractViolation);
  CHECK_NOTHROW(MlpPolicy({Matrix::Ones(3, 2), Matrix::Ones(1, 3)}, {1.0, 1.0}, NormalizationMode::Pre));
}

TEST_CASE("gain upper bound") {
  const auto pre = testutil::random_pre_policy(4, {8, 8}, 1, 0.31, 4);
  CHECK(gain_upper_bound(pre) == doctest::Approx(0.029791).epsilon(1e-9));
  const Matrix w = Matrix::Constant(1, 2, 3.0);
  MlpPolicy linear({w}, {}, NormalizationMode::None);
  CHECK(gain_upper_bound(linear) == doctest::Approx(svd_norm(w)).epsilon(1e-9));
}

TEST_CASE("pre-mode gain bound and per-layer inequalities hold on samples") {
  std::mt19937_64 rng(17);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = testutil::random_pre_policy(4, {32, 32}, 2, 0.8, seed);
    const double bound = gain_upper_bound(p);
    for (int t = 0; t < 2000; ++t) {
      const Vector x = gaussian(4, 1, rng, 3.0);
      const auto pass = forward(p, x);
      CHECK(pass.u.norm() <= bound * x.norm() * (1 + 1e-12));
      Vector prev = x;
      for (std::size_t i = 0; i < pass.pre.size(); ++i) {
        CHECK(pass.pre[i].norm() <= 0.8 * prev.norm() * (1 + 1e-9));
        CHECK(pass.post[i].norm() <= pass.pre[i].norm());
        prev = pass.post[i];
      }
    }
  }
}

TEST_CASE("N matrix block pattern") {
  std::mt19937_64 rng(9);
  const Matrix w1 = gaussian(3, 2, rng), w2 = gaussian(1, 3, rng);
  const auto one = assemble_n_matrix(MlpPolicy({w1, w2}, {}, NormalizationMode::None));
  CHECK(one.vx == w1);
  CHECK(one.uw == w2);
  CHECK(one.vw.isZero());
  CHECK(one.ux.isZero());

  const Matrix a1 = gaussian(2, 2, rng), a2 = gaussian(2, 2, rng), a3 = gaussian(1, 2, rng);
  const auto two = assemble_n_matrix(MlpPolicy({a1, a2, a3}, {}, NormalizationMode::None));
  REQUIRE(two.vw.rows() == 4);
  CHECK(two.vw.topRows(2).isZero());
  CHECK(two.vw.block(2, 0, 2, 2) == a2);
  CHECK(two.vw.block(2, 2, 2, 2).isZero());
  CHECK(two.vx.topRows(2) == a1);
  CHECK(two.vx.bottomRows(2).isZero());
  CHECK(two.uw.leftCols(2).isZero());
  CHECK(two.uw.rightCols(2) == a3);
}

TEST_CASE("N matrix loop reproduces the forward pass") {
  const auto p = testutil::random_post_policy(3, {5, 4, 6}, 2, 1.2, 21);
  const auto n = assemble_n_matrix(p);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vector x = gaussian(3, 1, rng);
    // Solve w = tanh(N_vx x + N_vw w) in layer order; N_vw is strictly lower block triangular.
    Vector w = Vector::Zero(n.neuron_count());
    for (int sweep = 0; sweep < p.hidden_layers(); ++sweep) {
      w = (n.vx * x + n.vw * w).array().tanh().matrix();
    }
    const Vector u = n.ux * x + n.uw * w;
    CHECK((u - act(p, x)).norm() <= 1e-12);
  }
}

TEST_CASE("policy JSON round-trip and validation") {
  const auto p = testutil::random_post_policy(2, {64, 64}, 1, 1.0, 5);
  const auto path = std::filesystem::temp_directory_path() / "sncert_policy_roundtrip.json";
  save_policy(p, path);
  const auto back = load_policy(path);
  CHECK(back.mode() == NormalizationMode::Post);
  CHECK(back.deltas() == p.deltas());
  for (std::size_t i = 0; i < p.weights().size(); ++i) CHECK(back.weights()[i] == p.weights()[i]);
  std::filesystem::remove(path);

  const auto hand = policy_from_json(nlohmann::json::parse(R"({
    "mode": "none", "activation": "tanh", "deltas": [],
    "weights": [[[1.0, -0.5], [0.25, 2.0]], [[3.0, -1.0]]]})"));
  Matrix w1(2, 2), w2(1, 2);
  w1 << 1.0, -0.5, 0.25, 2.0;
  w2 << 3.0, -1.0;
  const MlpPolicy built({w1, w2}, {}, NormalizationMode::None);
  Vector x(2);
  x << 0.3, -0.7;
  CHECK(act(hand, x) == act(built, x));

  CHECK_THROWS_AS(policy_from_json(nlohmann::json::parse(R"({
    "mode": "none", "weights": [[[1.0, 2.0]], [[1.0, 2.0]]]})")),
                  Error);
  CHECK_THROWS_AS(policy_from_json(nlohmann::json::parse(R"({"mode": "sideways", "weights": [[[1.0]]]})")),
                  Error);
}

TEST_CASE("mode strings") {
  CHECK(parse_mode("pre") == NormalizationMode::Pre);
  CHECK(parse_mode("post") == NormalizationMode::Post);
  CHECK(parse_mode("none") == NormalizationMode::None);
  CHECK(to_string(NormalizationMode::Post) == "post");
  CHECK_THROWS(parse_mode("both"));
}
