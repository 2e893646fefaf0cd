#include <doctest.h>

#include <cmath>

#include "sgdlab/error.hpp"
#include "sgdlab/schedule.hpp"

using namespace sgdlab;

TEST_CASE("epoch-budget schedule: 200 epochs, gamma 2, eps0 0.4") {
    // steps_per_epoch 10 so epoch t covers steps [10t, 10t+10).
    const LRSchedule s =
        LRSchedule::coupled(0.4, 2.0, Budget::constant_epoch(200), 10);
    CHECK(s.lr_at(99 * 10) == 0.4);        // epoch 99
    CHECK(s.lr_at(99 * 10 + 9) == 0.4);    // constant within the epoch
    CHECK(s.lr_at(100 * 10) == 0.2);       // epoch 100: first drop
    CHECK(s.lr_at(199 * 10) == 0.4 * std::exp2(-10.0)); // epoch 199
    CHECK(s.lr_at(199 * 10) == 3.90625e-4);
    CHECK(s.final_lr() == 3.90625e-4);     // exactly eps0 * gamma^-10
    CHECK(s.drop_steps().size() == 10);
}

TEST_CASE("constant-step schedule: S = 9765 drops at 4882 + 488 k") {
    const LRSchedule s = LRSchedule::coupled(1.0, 2.0, Budget::constant_step(9765), 1);
    CHECK(s.lr_at(0) == 1.0);
    CHECK(s.lr_at(4881) == 1.0);
    CHECK(s.lr_at(4882) == 0.5);
    CHECK(s.lr_at(5369) == 0.5);
    CHECK(s.lr_at(5370) == 0.25);
    const auto drops = s.drop_steps();
    REQUIRE(drops.size() == 11); // ten scheduled drops plus the final partial interval
    for (std::size_t k = 0; k < drops.size(); ++k) {
        CHECK(drops[k] == 4882 + 488 * static_cast<std::int64_t>(k));
    }
    // The documented floor-division consequence: an 11th drop covers the last
    // 3 steps (9762..9764).
    CHECK(s.lr_at(9761) == std::exp2(-10.0));
    CHECK(s.lr_at(9762) == std::exp2(-11.0));
    CHECK(s.lr_at(9764) == std::exp2(-11.0));
}

TEST_CASE("decoupled endpoints reproduce the coupled schedule") {
    const Budget b = Budget::constant_epoch(200);
    const LRSchedule coupled = LRSchedule::coupled(1.0, 2.0, b, 5);
    const LRSchedule decoupled =
        LRSchedule::decoupled(1.0, std::exp2(-10.0), b, 5);
    CHECK(decoupled.gamma() == 2.0); // (eps0/eps_f)^(1/10) lands exactly on 2
    for (std::int64_t step = 0; step < coupled.total_steps(); ++step) {
        REQUIRE(coupled.lr_at(step) == decoupled.lr_at(step));
    }
}

TEST_CASE("gamma = 1 (eps_f = eps0) is a constant schedule") {
    const LRSchedule s = LRSchedule::decoupled(0.3, 0.3, Budget::constant_epoch(40), 4);
    CHECK(s.gamma() == 1.0);
    for (std::int64_t step = 0; step < s.total_steps(); ++step) {
        REQUIRE(s.lr_at(step) == 0.3);
    }
    CHECK(s.drop_steps().empty());
}

TEST_CASE("lr_at is non-increasing and piecewise constant between drops") {
    const LRSchedule s = LRSchedule::coupled(0.8, 2.0, Budget::constant_step(1000), 1);
    const auto drops = s.drop_steps();
    double prev = s.lr_at(0);
    std::size_t at = 0;
    for (std::int64_t step = 1; step < s.total_steps(); ++step) {
        const double lr = s.lr_at(step);
        CHECK(lr <= prev);
        const bool is_drop = at < drops.size() && drops[at] == step;
        if (is_drop) {
            CHECK(lr == prev / 2.0);
            ++at;
        } else {
            CHECK(lr == prev);
        }
        prev = lr;
    }
    CHECK(at == drops.size());
    // Budget divisible by 20: exactly 10 decay events, final lr = eps0 * 2^-10.
    CHECK(drops.size() == 10);
    CHECK(s.final_lr() == 0.8 * std::exp2(-10.0));
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(LRSchedule::coupled(0.0, 2.0, Budget::constant_epoch(40), 1), Error);
    CHECK_THROWS_AS(LRSchedule::coupled(0.1, 0.5, Budget::constant_epoch(40), 1), Error);
    CHECK_THROWS_AS(LRSchedule::coupled(0.1, 2.0, Budget::constant_epoch(10), 1), Error);
    CHECK_THROWS_AS(LRSchedule::decoupled(0.1, 0.2, Budget::constant_epoch(40), 1), Error);
    CHECK_THROWS_AS(Budget::constant_epoch(0), Error);
}

TEST_CASE("unlimited budget holds the initial rate") {
    const LRSchedule s =
        LRSchedule::coupled(0.25, 2.0, Budget::unlimited(0.9, 5000), 10);
    CHECK(s.total_steps() == 5000);
    CHECK(s.lr_at(0) == 0.25);
    CHECK(s.lr_at(4999) == 0.25);
    CHECK(s.drop_steps().empty());
}

TEST_CASE("schedule json round trip") {
    const LRSchedule s = LRSchedule::coupled(0.4, 2.0, Budget::constant_epoch(200), 16);
    const LRSchedule back = LRSchedule::from_json(s.to_json());
    CHECK(back.eps0() == s.eps0());
    CHECK(back.gamma() == s.gamma());
    CHECK(back.total_steps() == s.total_steps());
    for (std::int64_t step : {0, 700, 1600, 3199}) {
        CHECK(back.lr_at(step) == s.lr_at(step));
    }
    CHECK_THROWS_AS(LRSchedule::from_json("{"), ConfigError);
    CHECK_THROWS_AS(LRSchedule::from_json("{\"eps0\": 0.1}"), ConfigError);
}
