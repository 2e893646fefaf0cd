#include <doctest.h>

#include <cmath>

#include "sgdlab/error.hpp"
#include "sgdlab/noise.hpp"
#include "sgdlab/quadratic.hpp"
#include "sgdlab/rng.hpp"
#include "sgdlab/sde.hpp"

using namespace sgdlab;

namespace {

QuadraticModel unit_1d() {
    return QuadraticModel::from_matrix(SymMatrix::identity(1), {{-1.0}, {+1.0}});
}

NoiseModel unit_noise() {
    NoiseModel n;
    n.covariance = SymMatrix::identity(1);
    return n;
}

} // namespace

TEST_CASE("noise covariance estimation") {
    SUBCASE("1-D, centers {-1,+1}: covariance exactly 1") {
        const QuadraticModel m = unit_1d();
        const NoiseModel n = estimate_noise_cov(m, {0.37});
        CHECK(n.covariance(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(n.provenance == NoiseModel::Provenance::Empirical);
    }
    SUBCASE("identical per-example gradients: zero covariance") {
        const NoiseModel n = estimate_noise_cov(
            4, [](int) { return Vec{2.5, -1.0}; }, true);
        CHECK(n.covariance(0, 0) == 0.0);
        CHECK(n.covariance(1, 1) == 0.0);
        CHECK(n.covariance(0, 1) == 0.0);
    }
    SUBCASE("general quadratic: estimate equals H Cov(c) H to 1e-12") {
        const QuadraticModel m = QuadraticModel::diagonal({0.7, 1.9}, 64, 1.3, 21);
        const SymMatrix analytic = m.noise_covariance_analytic();
        // The centered estimate is parameter-independent for this family.
        for (const Vec w : {Vec{0.0, 0.0}, Vec{1.5, -2.0}}) {
            const NoiseModel n = estimate_noise_cov(m, w);
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    CHECK(n.covariance(i, j) ==
                          doctest::Approx(analytic(i, j)).epsilon(1e-12));
                }
            }
        }
    }
    SUBCASE("uncentered option keeps the mean term") {
        const QuadraticModel m = unit_1d();
        const Vec w{2.0};
        const NoiseModel centered = estimate_noise_cov(m, w, true);
        const NoiseModel uncentered = estimate_noise_cov(m, w, false);
        // gbar = H w = 2, so the uncentered moment exceeds by gbar^2 = 4.
        CHECK(uncentered.covariance(0, 0) - centered.covariance(0, 0) ==
              doctest::Approx(4.0).epsilon(1e-12));
    }
    SUBCASE("fewer than two examples is an error") {
        CHECK_THROWS_AS(estimate_noise_cov(1, [](int) { return Vec{1.0}; }, true), Error);
    }
}

TEST_CASE("sde step with T = 0 is bit-identical to gradient descent") {
    const QuadraticModel m = QuadraticModel::diagonal({0.5, 2.0}, 4, 1.0, 2);
    SdeSimulator sim(m, 0.3, 0.0, analytic_noise_model(m));
    Rng rng(1);
    Vec w{1.0, -2.0};
    Vec w_gd = w;
    Vec grad;
    for (int t = 0; t < 50; ++t) {
        sim.step(w, rng);
        m.full_grad(w_gd, grad);
        axpy(-0.3, grad, w_gd);
        REQUIRE(w == w_gd);
    }
}

TEST_CASE("sde simulator rejects bad configs") {
    const QuadraticModel m = unit_1d();
    CHECK_THROWS_AS(SdeSimulator(m, 0.0, 0.1, unit_noise()), Error);
    CHECK_THROWS_AS(SdeSimulator(m, 0.1, -1.0, unit_noise()), Error);
}

TEST_CASE("ou stationary variance closed form") {
    CHECK(ou_stationary_variance(1.0, 1.0, 0.1, 0.01) ==
          doctest::Approx(0.00526316).epsilon(1e-5));
    CHECK(ou_stationary_variance(1.0, 1.0, 0.1, 0.01) ==
          doctest::Approx(0.01 / 1.9).epsilon(1e-12));
    CHECK(ou_stationary_variance(2.0, 3.0, 0.1, 0.0) == 0.0);
    // eps -> 0 limit: T f / (2 lambda), checked at eps = 1e-4 within 0.01%.
    CHECK(ou_stationary_variance(1.0, 1.0, 1e-4, 0.01) ==
          doctest::Approx(0.01 / 2.0).epsilon(1e-4));
    CHECK_THROWS_AS(ou_stationary_variance(1.0, 1.0, 2.0, 0.01), NumericsError);
}

TEST_CASE("simulated stationary variance matches the closed form within 3%") {
    // lambda = 1, f = 1, eps = 0.1, T = 0.01 over 1e6 steps.
    const QuadraticModel m = unit_1d(); // H = I in 1-D, so grad C = w
    SdeSimulator sim(m, 0.1, 0.01, unit_noise());
    Rng rng(20260808);
    Vec w{0.0};
    const int steps = 1000000, burnin = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < steps; ++t) {
        sim.step(w, rng);
        if (t >= burnin) {
            sum += w[0];
            sumsq += w[0] * w[0];
        }
    }
    const double n = steps - burnin;
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    const double expected = ou_stationary_variance(1.0, 1.0, 0.1, 0.01);
    CHECK(expected == doctest::Approx(0.0052632).epsilon(1e-4));
    CHECK(std::fabs(var / expected - 1.0) < 0.03);
}
