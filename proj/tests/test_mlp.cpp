#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "sgdlab/error.hpp"
#include "sgdlab/finite_diff.hpp"
#include "sgdlab/mlp.hpp"
#include "sgdlab/rng.hpp"
#include "sgdlab/vec.hpp"

using namespace sgdlab;

namespace {

struct TinyTask {
    MlpModel model;
    Vec inputs;
    std::vector<int> labels;
    int batch;

    TinyTask(MlpConfig cfg, int batch_size, std::uint64_t seed)
        : model(std::move(cfg)), batch(batch_size) {
        Rng rng(seed);
        const int d = model.config().input_dim;
        inputs.resize(static_cast<std::size_t>(batch) * d);
        for (double& x : inputs) x = rng.gaussian();
        labels.resize(static_cast<std::size_t>(batch));
        for (int& y : labels) {
            y = static_cast<int>(rng.below(static_cast<std::uint64_t>(model.config().classes)));
        }
    }

    MlpModel::Batch view() const {
        MlpModel::Batch b;
        b.x = inputs.data();
        b.labels = labels.data();
        b.count = batch;
        return b;
    }
};

// Redraws parameters until every rectifier input is clear of the kink, so
// central differences stay on one linear piece.
Vec safe_params(const TinyTask& task, Rng& rng) {
    MlpModel::Workspace ws;
    for (int attempt = 0; attempt < 100; ++attempt) {
        Vec params = task.model.init_params(rng);
        auto bn = task.model.init_bn_state();
        Vec grad;
        task.model.loss_and_grad(params, bn, task.view(), MlpModel::Mode::Train, grad, ws);
        double closest = 1e300;
        for (const Vec& post : ws.post) {
            for (double v : post) closest = std::min(closest, std::fabs(v));
        }
        if (closest > 1e-3) return params;
    }
    FAIL("no kink-safe parameter draw found");
    return {};
}

double max_rel_error(const Vec& got, const Vec& want) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        num = std::max(num, std::fabs(got[i] - want[i]));
        den = std::max(den, std::fabs(want[i]));
    }
    return num / std::max(den, 1e-12);
}

} // namespace

TEST_CASE("uniform softmax fixture: zero params, no BN -> loss = ln K") {
    MlpConfig cfg;
    cfg.input_dim = 5;
    cfg.hidden = {8};
    cfg.classes = 4;
    cfg.ghost_bn = false;
    cfg.l2_coeff = 5e-4;
    TinyTask task(cfg, 8, 1);

    const Vec zero_params(static_cast<std::size_t>(task.model.param_count()), 0.0);
    auto bn = task.model.init_bn_state();
    MlpModel::Workspace ws;
    const double loss =
        task.model.loss(zero_params, bn, task.view(), MlpModel::Mode::Train, ws);
    CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-12)); // L2 term is 0 at 0
}

TEST_CASE("gradient matches central finite differences (no BN)") {
    MlpConfig cfg;
    cfg.input_dim = 5;
    cfg.hidden = {8, 6};
    cfg.classes = 3;
    cfg.ghost_bn = false;
    TinyTask task(cfg, 8, 2);

    MlpModel::Workspace ws;
    Rng rng(3);
    for (int trial = 0; trial < 4; ++trial) {
        Vec params = safe_params(task, rng);
        auto bn = task.model.init_bn_state();
        Vec grad;
        task.model.loss_and_grad(params, bn, task.view(), MlpModel::Mode::Train, grad, ws);
        auto bn2 = task.model.init_bn_state();
        const Vec fd = finite_diff_grad(
            [&](const Vec& p) {
                MlpModel::Workspace w2;
                return task.model.loss(p, bn2, task.view(), MlpModel::Mode::Train, w2);
            },
            params, 1e-6);
        CHECK(max_rel_error(grad, fd) < 1e-5);
    }
}

TEST_CASE("gradient matches central finite differences (ghost BN, 2 groups)") {
    MlpConfig cfg;
    cfg.input_dim = 4;
    cfg.hidden = {6, 5};
    cfg.classes = 3;
    cfg.ghost_bn = true;
    cfg.ghost_batch_size = 4;
    TinyTask task(cfg, 8, 4); // batch 8, ghost 4 -> two groups

    MlpModel::Workspace ws;
    Rng rng(5);
    for (int trial = 0; trial < 4; ++trial) {
        Vec params = safe_params(task, rng);
        auto bn = task.model.init_bn_state();
        Vec grad;
        task.model.loss_and_grad(params, bn, task.view(), MlpModel::Mode::Train, grad, ws);
        auto bn2 = task.model.init_bn_state();
        const Vec fd = finite_diff_grad(
            [&](const Vec& p) {
                MlpModel::Workspace w2;
                return task.model.loss(p, bn2, task.view(), MlpModel::Mode::Train, w2);
            },
            params, 1e-6);
        CHECK(max_rel_error(grad, fd) < 1e-5);
    }
}

TEST_CASE("ghost BN: one group equals whole-batch normalization (bit-identical)") {
    const int rows = 64, features = 3;
    Rng rng(7);
    Vec z(static_cast<std::size_t>(rows) * features);
    for (double& v : z) v = 2.0 * rng.gaussian() + 0.5;
    Vec scale(features, 1.3), shift(features, -0.2);
    const double eps = 1e-5;

    Vec out_ghost(z.size()), out_plain(z.size());
    BnCache cache;
    ghost_bn_forward_train(z.data(), rows, features, 64, scale.data(), shift.data(), eps,
                           out_ghost.data(), cache);

    // Whole-batch reference computed independently.
    for (int f = 0; f < features; ++f) {
        double mu = 0.0;
        for (int r = 0; r < rows; ++r) mu += z[static_cast<std::size_t>(r) * features + f];
        mu /= rows;
        double var = 0.0;
        for (int r = 0; r < rows; ++r) {
            const double d = z[static_cast<std::size_t>(r) * features + f] - mu;
            var += d * d;
        }
        var /= rows;
        const double isd = 1.0 / std::sqrt(var + eps);
        for (int r = 0; r < rows; ++r) {
            const std::size_t i = static_cast<std::size_t>(r) * features + f;
            out_plain[i] = scale[f] * ((z[i] - mu) * isd) + shift[f];
        }
    }
    CHECK(out_ghost == out_plain);
}

TEST_CASE("ghost BN group statistics: mean ~ 0, var ~ 1 per group") {
    const int rows = 128, features = 4, ghost = 64;
    Rng rng(11);
    Vec z(static_cast<std::size_t>(rows) * features);
    for (double& v : z) v = 3.0 * rng.gaussian() - 1.0;
    Vec scale(features, 1.0), shift(features, 0.0);

    Vec out(z.size());
    BnCache cache;
    ghost_bn_forward_train(z.data(), rows, features, ghost, scale.data(), shift.data(),
                           1e-5, out.data(), cache);
    CHECK(cache.groups.size() == 2);
    for (const auto& [begin, end] : cache.groups) {
        for (int f = 0; f < features; ++f) {
            double mu = 0.0, var = 0.0;
            for (int r = begin; r < end; ++r) {
                mu += out[static_cast<std::size_t>(r) * features + f];
            }
            mu /= (end - begin);
            for (int r = begin; r < end; ++r) {
                const double d = out[static_cast<std::size_t>(r) * features + f] - mu;
                var += d * d;
            }
            var /= (end - begin);
            CHECK(std::fabs(mu) < 1e-6);
            CHECK(std::fabs(var - 1.0) < 1e-5);
        }
    }
}

TEST_CASE("ghost BN edge cases") {
    Vec scale(2, 1.0), shift(2, 0.7);
    SUBCASE("constant feature column maps to the shift") {
        Vec z{5.0, 5.0, 5.0, 5.0, 5.0, 5.0}; // 3 rows x 2 features, all 5
        Vec out(z.size());
        BnCache cache;
        ghost_bn_forward_train(z.data(), 3, 2, 4, scale.data(), shift.data(), 1e-5,
                               out.data(), cache);
        for (double v : out) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("already normalized pair stays put") {
        Vec one(1, 1.0), zero(1, 0.0);
        Vec z{-1.0, 1.0}; // 2 rows x 1 feature
        Vec out(2);
        BnCache cache;
        ghost_bn_forward_train(z.data(), 2, 1, 2, one.data(), zero.data(), 1e-12,
                               out.data(), cache);
        CHECK(out[0] == doctest::Approx(-1.0).epsilon(1e-6));
        CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("remainder group of size 1 is an error") {
        Vec z(5 * 2, 1.0);
        Vec out(z.size());
        BnCache cache;
        CHECK_THROWS_AS(ghost_bn_forward_train(z.data(), 5, 2, 4, scale.data(),
                                               shift.data(), 1e-5, out.data(), cache),
                        Error);
    }
    SUBCASE("ghost_size below 2 is an error") {
        Vec z(4 * 2, 1.0);
        Vec out(z.size());
        BnCache cache;
        CHECK_THROWS_AS(ghost_bn_forward_train(z.data(), 4, 2, 1, scale.data(),
                                               shift.data(), 1e-5, out.data(), cache),
                        Error);
    }
}

TEST_CASE("train/eval determinism and running statistics") {
    MlpConfig cfg;
    cfg.input_dim = 4;
    cfg.hidden = {6};
    cfg.classes = 2;
    cfg.ghost_bn = true;
    cfg.ghost_batch_size = 4;
    TinyTask task(cfg, 8, 13);

    Rng rng(1);
    const Vec params = task.model.init_params(rng);
    auto bn = task.model.init_bn_state();
    MlpModel::Workspace ws;
    Vec g1, g2;
    auto bn_a = bn, bn_b = bn;
    const double l1 =
        task.model.loss_and_grad(params, bn_a, task.view(), MlpModel::Mode::Train, g1, ws);
    const double l2 =
        task.model.loss_and_grad(params, bn_b, task.view(), MlpModel::Mode::Train, g2, ws);
    CHECK(l1 == l2);
    CHECK(g1 == g2);
    CHECK(bn_a.running_mean[0] == bn_b.running_mean[0]);
    // Running stats moved away from the (0, 1) initialization.
    bool moved = false;
    for (double v : bn_a.running_mean[0]) {
        if (v != 0.0) moved = true;
    }
    CHECK(moved);

    // Eval mode is deterministic and does not touch the state.
    const auto metrics1 = task.model.evaluate(params, bn_a, task.inputs.data(),
                                              task.labels.data(), task.batch, ws);
    const auto metrics2 = task.model.evaluate(params, bn_a, task.inputs.data(),
                                              task.labels.data(), task.batch, ws);
    CHECK(metrics1.loss == metrics2.loss);
    CHECK(metrics1.accuracy == metrics2.accuracy);
    CHECK(metrics1.mse >= 0.0);
}

TEST_CASE("overflow raises an error naming the layer") {
    MlpConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden = {3};
    cfg.classes = 2;
    cfg.ghost_bn = false;
    TinyTask task(cfg, 4, 17);

    // Non-finite parameters poison the first hidden linear output.
    Vec params(static_cast<std::size_t>(task.model.param_count()), 0.1);
    params[0] = std::numeric_limits<double>::infinity();
    auto bn = task.model.init_bn_state();
    MlpModel::Workspace ws;
    CHECK_THROWS_WITH_AS(
        task.model.loss(params, bn, task.view(), MlpModel::Mode::Train, ws),
        doctest::Contains("hidden linear 1"), NumericsError);

    // Overflow deeper in the stack is named too.
    Vec big(static_cast<std::size_t>(task.model.param_count()), 1e200);
    CHECK_THROWS_WITH_AS(
        task.model.loss(big, bn, task.view(), MlpModel::Mode::Train, ws),
        doctest::Contains("non-finite activation"), NumericsError);
}
