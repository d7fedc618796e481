#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sncert/certify_post.hpp"
#include "sncert/envs.hpp"
#include "sncert/kernels.hpp"

using namespace sncert;

TEST_CASE("serial and parallel kernels agree exactly") {
  std::mt19937_64 rng(123);
  const auto env = make_pendulum();
  const auto pol = testutil::lqr_tanh_policy(env.plant, 0.5);

  SUBCASE("closed loop") {
    const Matrix x0s = testutil::uniform_box(2, 500, 3.0, rng);
    const auto a = kernels::serial::closed_loop_final(env.plant, pol, x0s, 400);
    const auto b = kernels::parallel::closed_loop_final(env.plant, pol, x0s, 400);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].final_norm == b[i].final_norm);
      CHECK(a[i].diverged == b[i].diverged);
    }
  }
  SUBCASE("frequency sweep") {
    const auto gtm = make_gtm().plant;
    std::vector<double> w(1000);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 3.14159 * static_cast<double>(i) / 999.0;
    CHECK(kernels::serial::frequency_sweep(gtm.a(), gtm.b(), w) ==
          kernels::parallel::frequency_sweep(gtm.a(), gtm.b(), w));
  }
  SUBCASE("sector audit") {
    const auto p = testutil::random_post_policy(3, {16, 16}, 1, 1.0, 9);
    const auto s = propagate_bounds(p, Vector::Constant(16, 0.5));
    const Matrix xs = testutil::uniform_box(3, 3000, 1.0, rng);
    const auto a = kernels::serial::sector_audit(p, s.vbar, s.alpha, xs);
    const auto b = kernels::parallel::sector_audit(p, s.vbar, s.alpha, xs);
    CHECK(a.samples == b.samples);
    CHECK(a.out_of_box == b.out_of_box);
    CHECK(a.out_of_sector == b.out_of_sector);
    // a box this wide relative to vbar must catch some preactivations outside
    CHECK(a.out_of_box > 0);
  }
  SUBCASE("gain violations") {
    const auto p = testutil::random_pre_policy(4, {8, 8}, 2, 0.9, 2);
    const Matrix xs = testutil::uniform_box(4, 2000, 2.0, rng);
    const double bound = gain_upper_bound(p);
    CHECK(kernels::serial::gain_violations(p, bound, xs) == 0);
    CHECK(kernels::parallel::gain_violations(p, bound, xs) == 0);
    CHECK(kernels::serial::gain_violations(p, 0.5 * bound, xs) ==
          kernels::parallel::gain_violations(p, 0.5 * bound, xs));
  }
  SUBCASE("lyapunov audit") {
    const Matrix p = Matrix::Identity(2, 2);
    const Matrix xs = testutil::uniform_box(2, 1000, 1.0, rng);
    const auto a = kernels::serial::lyapunov_decrease(env.plant, pol, p, xs, 0.0);
    const auto b = kernels::parallel::lyapunov_decrease(env.plant, pol, p, xs, 0.0);
    CHECK(a.samples == b.samples);
    CHECK(a.violations == b.violations);
    CHECK(a.max_relative_change == b.max_relative_change);
  }
}
