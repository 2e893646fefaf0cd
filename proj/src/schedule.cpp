#include "sgdlab/schedule.hpp"

#include <cmath>

#include <json.hpp>

#include "sgdlab/error.hpp"

namespace sgdlab {

using nlohmann::json;

Budget Budget::constant_epoch(std::int64_t epochs) {
    require(epochs >= 1, "Budget: epochs must be >= 1");
    Budget b;
    b.kind = Kind::ConstantEpoch;
    b.units = epochs;
    return b;
}

Budget Budget::constant_step(std::int64_t steps) {
    require(steps >= 1, "Budget: steps must be >= 1");
    Budget b;
    b.kind = Kind::ConstantStep;
    b.units = steps;
    return b;
}

Budget Budget::unlimited(double target_metric, std::int64_t max_steps) {
    require(max_steps >= 1, "Budget: max_steps must be >= 1");
    Budget b;
    b.kind = Kind::Unlimited;
    b.target_metric = target_metric;
    b.max_steps = max_steps;
    return b;
}

double decay_power(double gamma, std::int64_t drops) {
    double p = 1.0;
    for (std::int64_t i = 0; i < drops; ++i) p /= gamma;
    return p;
}

LRSchedule LRSchedule::make(double eps0, double gamma, const Budget& budget,
                            std::int64_t steps_per_epoch, Granularity granularity) {
    require(eps0 > 0.0, "LRSchedule: eps0 must be positive");
    require(gamma >= 1.0, "LRSchedule: gamma must be >= 1");
    require(steps_per_epoch >= 1, "LRSchedule: steps_per_epoch must be >= 1");
    LRSchedule s;
    s.eps0_ = eps0;
    s.gamma_ = gamma;
    s.budget_ = budget;
    s.steps_per_epoch_ = steps_per_epoch;
    s.granularity_ = granularity;
    if (budget.kind != Budget::Kind::Unlimited) {
        require(s.total_units() >= 20,
                "LRSchedule: budget must span at least 20 schedule units");
    }
    return s;
}

LRSchedule LRSchedule::coupled(double eps0, double gamma, const Budget& budget,
                               std::int64_t steps_per_epoch) {
    const Granularity g = budget.kind == Budget::Kind::ConstantStep ? Granularity::Step
                                                                    : Granularity::Epoch;
    return make(eps0, gamma, budget, steps_per_epoch, g);
}

LRSchedule LRSchedule::coupled(double eps0, double gamma, const Budget& budget,
                               std::int64_t steps_per_epoch, Granularity granularity) {
    return make(eps0, gamma, budget, steps_per_epoch, granularity);
}

LRSchedule LRSchedule::decoupled(double eps0, double eps_f, const Budget& budget,
                                 std::int64_t steps_per_epoch) {
    const Granularity g = budget.kind == Budget::Kind::ConstantStep ? Granularity::Step
                                                                    : Granularity::Epoch;
    return decoupled(eps0, eps_f, budget, steps_per_epoch, g);
}

LRSchedule LRSchedule::decoupled(double eps0, double eps_f, const Budget& budget,
                                 std::int64_t steps_per_epoch, Granularity granularity) {
    require(eps0 > 0.0, "LRSchedule: eps0 must be positive");
    require(eps_f > 0.0 && eps_f <= eps0, "LRSchedule: need 0 < eps_f <= eps0");
    // exp2/log2 keep gamma exact whenever eps0/eps_f is 2^(10k).
    const double gamma = std::exp2(std::log2(eps0 / eps_f) / 10.0);
    return make(eps0, gamma, budget, steps_per_epoch, granularity);
}

std::int64_t LRSchedule::total_units() const {
    switch (budget_.kind) {
        case Budget::Kind::ConstantEpoch:
            return granularity_ == Granularity::Epoch ? budget_.units
                                                      : budget_.units * steps_per_epoch_;
        case Budget::Kind::ConstantStep:
            return granularity_ == Granularity::Step ? budget_.units
                                                     : budget_.units / steps_per_epoch_;
        case Budget::Kind::Unlimited:
            return budget_.max_steps;
    }
    return 0;
}

std::int64_t LRSchedule::total_steps() const {
    switch (budget_.kind) {
        case Budget::Kind::ConstantEpoch:
            return budget_.units * steps_per_epoch_;
        case Budget::Kind::ConstantStep:
            return budget_.units;
        case Budget::Kind::Unlimited:
            return budget_.max_steps;
    }
    return 0;
}

std::int64_t LRSchedule::drops_at_unit(std::int64_t t) const {
    const std::int64_t total = total_units();
    const std::int64_t hold = total / 2;
    const std::int64_t delta = total / 20;
    if (t < hold || delta <= 0) return 0;
    return (t - hold) / delta + 1;
}

double LRSchedule::lr_at(std::int64_t step) const {
    require(step >= 0, "lr_at: negative step");
    if (budget_.kind == Budget::Kind::Unlimited || gamma_ == 1.0) return eps0_;
    const std::int64_t t =
        granularity_ == Granularity::Epoch ? step / steps_per_epoch_ : step;
    return eps0_ * decay_power(gamma_, drops_at_unit(t));
}

std::vector<std::int64_t> LRSchedule::drop_steps() const {
    std::vector<std::int64_t> steps;
    if (budget_.kind == Budget::Kind::Unlimited || gamma_ == 1.0) return steps;
    const std::int64_t total = total_units();
    const std::int64_t hold = total / 2;
    const std::int64_t delta = total / 20;
    if (delta <= 0) return steps;
    for (std::int64_t u = hold; u < total; u += delta) {
        steps.push_back(granularity_ == Granularity::Epoch ? u * steps_per_epoch_ : u);
    }
    return steps;
}

double LRSchedule::final_lr() const { return lr_at(total_steps() - 1); }

std::string LRSchedule::to_json() const {
    json j;
    j["eps0"] = eps0_;
    j["gamma"] = gamma_;
    j["budget"]["kind"] = budget_.kind == Budget::Kind::ConstantEpoch ? "constant_epoch"
                          : budget_.kind == Budget::Kind::ConstantStep
                              ? "constant_step"
                              : "unlimited";
    if (budget_.kind == Budget::Kind::Unlimited) {
        j["budget"]["target_metric"] = budget_.target_metric;
        j["budget"]["max_steps"] = budget_.max_steps;
    } else {
        j["budget"]["units"] = budget_.units;
    }
    j["steps_per_epoch"] = steps_per_epoch_;
    j["granularity"] = granularity_ == Granularity::Epoch ? "epoch" : "step";
    return j.dump();
}

LRSchedule LRSchedule::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("schedule: invalid JSON");
    try {
        Budget b;
        const std::string kind = j.at("budget").at("kind").get<std::string>();
        if (kind == "constant_epoch") {
            b = Budget::constant_epoch(j.at("budget").at("units").get<std::int64_t>());
        } else if (kind == "constant_step") {
            b = Budget::constant_step(j.at("budget").at("units").get<std::int64_t>());
        } else if (kind == "unlimited") {
            b = Budget::unlimited(j.at("budget").at("target_metric").get<double>(),
                                  j.at("budget").at("max_steps").get<std::int64_t>());
        } else {
            throw ConfigError("schedule: unknown budget kind: " + kind);
        }
        const std::int64_t spe = j.value("steps_per_epoch", std::int64_t{1});
        Granularity g = b.kind == Budget::Kind::ConstantStep ? Granularity::Step
                                                             : Granularity::Epoch;
        if (j.contains("granularity")) {
            const std::string gs = j.at("granularity").get<std::string>();
            if (gs == "epoch") {
                g = Granularity::Epoch;
            } else if (gs == "step") {
                g = Granularity::Step;
            } else {
                throw ConfigError("schedule: unknown granularity: " + gs);
            }
        }
        if (j.contains("eps_f")) {
            return decoupled(j.at("eps0").get<double>(), j.at("eps_f").get<double>(), b,
                             spe, g);
        }
        return make(j.at("eps0").get<double>(), j.value("gamma", 2.0), b, spe, g);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
    }
}

} // namespace sgdlab
