#include <doctest.h>

#include <cmath>
#include <vector>

#include "sgdlab/error.hpp"
#include "sgdlab/quadratic.hpp"
#include "sgdlab/rng.hpp"
#include "sgdlab/sampler.hpp"
#include "sgdlab/vec.hpp"

using namespace sgdlab;

namespace {

QuadraticModel one_dim_pm1() {
    // H = I (1-D), centers {-1, +1}.
    return QuadraticModel::from_matrix(SymMatrix::identity(1), {{-1.0}, {+1.0}});
}

} // namespace

TEST_CASE("minibatch gradient: full batch, single example, enumerated variance") {
    const QuadraticModel m = one_dim_pm1();

    SUBCASE("full batch gives H w exactly") {
        const std::vector<int> batch{0, 1};
        const Vec g = m.minibatch_grad({0.7}, batch);
        CHECK(g[0] == 0.7);
    }
    SUBCASE("single-example batches at w = 0 give +/- 1") {
        const std::vector<int> b0{0}, b1{1};
        CHECK(m.minibatch_grad({0.0}, b0)[0] == 1.0); // H (w - c_0) = -c_0 = +1
        CHECK(m.minibatch_grad({0.0}, b1)[0] == -1.0);
    }
    SUBCASE("variance over both B=1 batches is 1 (exact enumeration)") {
        const std::vector<int> b0{0}, b1{1};
        const double g0 = m.minibatch_grad({0.0}, b0)[0];
        const double g1 = m.minibatch_grad({0.0}, b1)[0];
        const double mean = 0.5 * (g0 + g1);
        const double var = 0.5 * (g0 * g0 + g1 * g1) - mean * mean;
        CHECK(var == 1.0);
    }
    SUBCASE("empty batch is rejected") {
        CHECK_THROWS_AS(m.minibatch_grad({0.0}, std::vector<int>{}), Error);
    }
}

TEST_CASE("critical learning rate") {
    SUBCASE("diagonal") {
        const QuadraticModel m = QuadraticModel::diagonal({0.5, 2.0}, 4, 1.0, 1);
        CHECK(m.critical_lr() == 1.0);
    }
    SUBCASE("identity") {
        const QuadraticModel m = QuadraticModel::diagonal({1.0, 1.0, 1.0}, 4, 1.0, 1);
        CHECK(m.critical_lr() == 2.0);
    }
    SUBCASE("[[2,1],[1,2]] via power iteration: 2/3") {
        // lambda_max = 3 from the characteristic polynomial (see numkit tests).
        const SymMatrix h = SymMatrix::from_rows(2, {2.0, 1.0, 1.0, 2.0});
        const QuadraticModel m = QuadraticModel::from_matrix(h, {{0.0, 0.0}, {0.0, 0.0}});
        CHECK(m.critical_lr() == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    }
    SUBCASE("zero Hessian is an explicit error") {
        const QuadraticModel m = QuadraticModel::diagonal({0.0}, 2, 0.0, 1);
        CHECK_THROWS_AS(m.critical_lr(), NumericsError);
    }
}

TEST_CASE("full loss is 1/2 w' H w + constant; centers sum to zero") {
    const QuadraticModel m = QuadraticModel::diagonal({1.0, 2.0}, 64, 1.5, 9);
    Vec sum(2, 0.0);
    for (int j = 0; j < m.n_examples(); ++j) axpy(1.0, m.center(j), sum);
    CHECK(sum[0] == 0.0); // antithetic pairs cancel exactly
    CHECK(sum[1] == 0.0);

    const Vec w{0.3, -0.7};
    CHECK(m.full_loss(w) == doctest::Approx(m.excess_loss(w) + m.loss_constant()));
    CHECK(m.excess_loss(w) == doctest::Approx(0.5 * (0.09 + 2 * 0.49)));
    // Mean of per-example losses equals the full loss.
    double acc = 0.0;
    for (int j = 0; j < m.n_examples(); ++j) acc += m.per_example_loss(j, w);
    CHECK(acc / m.n_examples() == doctest::Approx(m.full_loss(w)).epsilon(1e-12));
}

TEST_CASE("unbiasedness: minibatch gradient expectation equals H w") {
    const QuadraticModel m = QuadraticModel::diagonal({1.0, 2.0}, 256, 1.0, 3);
    const Vec w{0.5, -0.25};
    const Vec full = m.full_grad(w);
    BatchSampler sampler(m.n_examples(), 4, SamplerMode::PerUpdateRandomSubset, 111);

    const int draws = 20000;
    Vec mean(2, 0.0), m2(2, 0.0);
    Vec g;
    for (int i = 0; i < draws; ++i) {
        m.minibatch_grad(w, sampler.next(), g);
        for (int d = 0; d < 2; ++d) {
            mean[d] += g[d];
            m2[d] += g[d] * g[d];
        }
    }
    for (int d = 0; d < 2; ++d) {
        mean[d] /= draws;
        const double var = m2[d] / draws - mean[d] * mean[d];
        const double se = std::sqrt(var / draws);
        CHECK(std::fabs(mean[d] - full[d]) < 5.0 * se);
    }
}

TEST_CASE("noise oracle: minibatch gradient covariance is H Cov(c) H / B") {
    // Monte-Carlo covariance against the analytic formula at B in {1, 2, 4}.
    // N >> B keeps the without-replacement correction below the tolerance.
    const QuadraticModel m = QuadraticModel::diagonal({1.0, 2.0}, 256, 1.0, 5);
    const Vec w{0.0, 0.0};
    const SymMatrix analytic = m.noise_covariance_analytic();

    for (int b : {1, 2, 4}) {
        CAPTURE(b);
        BatchSampler sampler(m.n_examples(), b, SamplerMode::PerUpdateRandomSubset,
                             stream_seed(77, {static_cast<std::uint64_t>(b)}));
        const int draws = 40000;
        Vec g;
        double s0 = 0.0, s1 = 0.0, s00 = 0.0, s11 = 0.0;
        for (int i = 0; i < draws; ++i) {
            m.minibatch_grad(w, sampler.next(), g);
            s0 += g[0];
            s1 += g[1];
            s00 += g[0] * g[0];
            s11 += g[1] * g[1];
        }
        const double c00 = s00 / draws - (s0 / draws) * (s0 / draws);
        const double c11 = s11 / draws - (s1 / draws) * (s1 / draws);
        // se(var) ~ var sqrt(2/n); allow 5 se plus the finite-N bias B/(N-1).
        const double tol = 5.0 * std::sqrt(2.0 / draws) + static_cast<double>(b) / 255.0;
        CHECK(std::fabs(c00 * b / analytic(0, 0) - 1.0) < tol);
        CHECK(std::fabs(c11 * b / analytic(1, 1) - 1.0) < tol);
    }
}

TEST_CASE("PSD validation at construction") {
    const SymMatrix indefinite = SymMatrix::from_rows(2, {1.0, 2.0, 2.0, 1.0});
    CHECK_THROWS_AS(QuadraticModel::from_matrix(indefinite, {{0.0, 0.0}}), NumericsError);
    CHECK_THROWS_AS(QuadraticModel::diagonal({-1.0}, 2, 1.0, 1), NumericsError);
}
