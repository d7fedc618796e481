#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "sncert/envs.hpp"
#include "sncert/errors.hpp"
#include "sncert/plant.hpp"

using namespace sncert;
using testutil::gaussian;

namespace {

DiscreteLtiPlant scalar(double a, double b) {
  return DiscreteLtiPlant(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), 1.0);
}

const Controller kZero = [](const Vector&) { return Vector::Zero(1); };

}  // namespace

TEST_CASE("step on the pendulum matches hand arithmetic") {
  const auto plant = make_pendulum().plant;
  Vector x(2);
  x << 1.0, 0.0;
  const Vector next = step(plant, x, Vector::Zero(1));
  CHECK(next(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(next(1) == doctest::Approx(1.96).epsilon(1e-12));
  CHECK(step(plant, Vector::Zero(2), Vector::Zero(1)).norm() == 0.0);
}

TEST_CASE("step with identity dynamics returns the state") {
  DiscreteLtiPlant plant(Matrix::Identity(3, 3), Matrix::Zero(3, 1), 0.1);
  Vector x(3);
  x << 0.3, -2.0, 7.5;
  CHECK((step(plant, x, Vector::Ones(1)) - x).norm() == 0.0);
}

TEST_CASE("step rejects mismatched dimensions") {
  const auto plant = make_pendulum().plant;
  CHECK_THROWS_AS(step(plant, Vector::Zero(3), Vector::Zero(1)), ContractViolation);
  CHECK_THROWS_AS(step(plant, Vector::Zero(2), Vector::Zero(2)), ContractViolation);
  CHECK_THROWS_AS(DiscreteLtiPlant(Matrix::Zero(2, 3), Matrix::Zero(2, 1), 0.1), ContractViolation);
}

TEST_CASE("step is linear") {
  std::mt19937_64 rng(11);
  DiscreteLtiPlant plant(gaussian(4, 4, rng), gaussian(4, 2, rng), 0.1);
  for (int t = 0; t < 50; ++t) {
    const Vector x1 = gaussian(4, 1, rng), x2 = gaussian(4, 1, rng);
    const Vector u1 = gaussian(2, 1, rng), u2 = gaussian(2, 1, rng);
    const Vector lhs = step(plant, x1 + x2, u1 + u2);
    const Vector rhs = step(plant, x1, u1) + step(plant, x2, u2);
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, lhs.norm()));
  }
}

TEST_CASE("spectral radius oracles") {
  DiscreteLtiPlant half(0.5 * Matrix::Identity(3, 3), Matrix::Zero(3, 1), 1.0);
  CHECK(spectral_radius(half) == doctest::Approx(0.5).epsilon(1e-14));
  // (1.86667 + sqrt(0.80177)) / 2 from the quadratic formula
  CHECK(spectral_radius(make_pendulum().plant) == doctest::Approx(1.381044).epsilon(1e-6));
  CHECK(spectral_radius(make_gtm().plant) < 1.0);
}

TEST_CASE("l2 gain oracles") {
  const auto gtm = l2_gain(make_gtm().plant);
  REQUIRE(gtm.finite);
  CHECK(gtm.gain == doctest::Approx(30.8068).epsilon(1e-4));

  const auto pend = l2_gain(make_pendulum().plant);
  CHECK_FALSE(pend.finite);
  CHECK(pend.spectral_radius == doctest::Approx(1.381044).epsilon(1e-6));

  const auto delay = l2_gain(scalar(0.0, 1.0));
  REQUIRE(delay.finite);
  CHECK(delay.gain == doctest::Approx(1.0).epsilon(1e-9));

  // 1/(z - 0.5): peak 2 at omega = 0
  const auto lowpass = l2_gain(scalar(0.5, 1.0));
  CHECK(lowpass.gain == doctest::Approx(2.0).epsilon(1e-6));
  // 1/(z + 0.5): peak 2 at omega = pi
  const auto highpass = l2_gain(scalar(-0.5, 1.0));
  CHECK(highpass.gain == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(highpass.peak_frequency == doctest::Approx(M_PI).epsilon(1e-3));
}

TEST_CASE("finite iff Schur stable on random 2x2 systems") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rho(0.2, 1.8);
  for (int t = 0; t < 60; ++t) {
    const double r = rho(rng);
    if (std::abs(r - 1.0) < 1e-3) continue;
    DiscreteLtiPlant p(testutil::with_spectral_radius(2, r, rng), gaussian(2, 1, rng), 0.1);
    CHECK(l2_gain(p).finite == (spectral_radius(p) < 1.0));
  }
}

TEST_CASE("l2 gain upper-bounds simulated energy ratios") {
  const auto plant = make_gtm().plant;
  const double gamma = l2_gain(plant).gain;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 100; ++t) {
    Vector x = Vector::Zero(4);
    double in = 0.0, out = 0.0;
    // Smooth inputs excite the low-frequency peak, white noise everything else.
    const bool smooth = t % 2 == 0;
    double prev = 0.0;
    for (int k = 0; k < 256; ++k) {
      double u = n01(rng);
      if (smooth) u = prev = 0.98 * prev + 0.02 * u;
      in += u * u;
      x = step(plant, x, Vector::Constant(1, u));
      out += x.squaredNorm();
    }
    CHECK(std::sqrt(out / in) <= gamma * (1.0 + 1e-3));
  }
}

TEST_CASE("simulate geometric decay and equilibrium") {
  DiscreteLtiPlant half(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0), 1.0);
  const auto rec = simulate(half, kZero, Vector::Ones(1), 20);
  REQUIRE(rec.states.size() == 21);
  for (int k = 0; k <= 20; ++k) {
    CHECK(rec.states[static_cast<std::size_t>(k)](0) == doctest::Approx(std::pow(0.5, k)).epsilon(1e-15));
  }
  const auto pend = make_pendulum().plant;
  const auto zero = simulate(pend, kZero, Vector::Zero(2), 50);
  for (const auto& x : zero.states) CHECK(x.norm() == 0.0);
}

TEST_CASE("open-loop pendulum diverges and is truncated") {
  const auto pend = make_pendulum().plant;
  Vector x0(2);
  x0 << 0.01, 0.0;
  const auto rec = simulate(pend, kZero, x0, 40);
  CHECK(std::abs(rec.states.back()(0)) > 100 * 0.01);

  const auto long_run = simulate(pend, kZero, x0, 5000);
  CHECK(long_run.diverged);
  CHECK(long_run.steps() < 5000);
  for (const auto& x : long_run.states) CHECK(x.allFinite());
}

TEST_CASE("simulate stops at termination before acting") {
  const auto env = make_pendulum();
  Vector x0(2);
  x0 << 13.0, 0.0;  // beyond 4 pi
  const auto rec = simulate(env.plant, kZero, x0, 10, env.termination());
  CHECK(rec.terminated);
  CHECK(rec.steps() == 0);
}

TEST_CASE("plant JSON round-trips exactly") {
  const auto gtm = make_gtm().plant;
  const auto path = std::filesystem::temp_directory_path() / "sncert_plant_roundtrip.json";
  save_plant(gtm, path);
  const auto back = load_plant(path);
  CHECK(back.a() == gtm.a());
  CHECK(back.b() == gtm.b());
  CHECK(back.ts() == gtm.ts());
  std::filesystem::remove(path);

  CHECK_THROWS_AS(plant_from_json(nlohmann::json::parse(R"({"A": [[1, 2], [3]], "B": [[1], [1]]})")),
                  ParseError);
  CHECK_THROWS_AS(load_plant("/nonexistent/plant.json"), ParseError);
}
