#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgdlab {

/// Compute budget for a training run.
struct Budget {
    enum class Kind { ConstantEpoch, ConstantStep, Unlimited };

    Kind kind = Kind::ConstantEpoch;
    std::int64_t units = 0;        ///< epochs or steps for the budgeted kinds
    double target_metric = 0.0;    ///< Unlimited: stop when the test metric reaches this
    std::int64_t max_steps = 0;    ///< Unlimited: hard step cap

    static Budget constant_epoch(std::int64_t epochs);
    static Budget constant_step(std::int64_t steps);
    static Budget unlimited(double target_metric, std::int64_t max_steps);
};

enum class Granularity { Epoch, Step };

/// Step-decay learning rate schedule: hold eps0 for the first half of the
/// budget, then divide by gamma every 1/20 of the budget. In units u of the
/// chosen granularity, with total U, u0 = floor(U/2) and delta = floor(U/20):
///
///   drops(t) = 0                          if t <  u0
///            = floor((t - u0)/delta) + 1  otherwise
///   lr(t)    = eps0 * gamma^-drops(t)
///
/// Budgets divisible by 20 units produce exactly 10 drops and a final LR of
/// eps0 * gamma^-10; other budgets can pick up an extra drop in the last
/// partial interval (floor division, kept deliberately).
///
/// The decoupled form fixes (eps0, eps_f) and sets gamma = (eps0/eps_f)^(1/10).
/// gamma == 1 (eps_f == eps0) is a constant schedule. Unlimited budgets hold
/// eps0 throughout.
class LRSchedule {
public:
    /// gamma >= 1; epoch budgets default to epoch granularity, step budgets
    /// to step granularity.
    static LRSchedule coupled(double eps0, double gamma, const Budget& budget,
                              std::int64_t steps_per_epoch);
    static LRSchedule coupled(double eps0, double gamma, const Budget& budget,
                              std::int64_t steps_per_epoch, Granularity granularity);
    static LRSchedule decoupled(double eps0, double eps_f, const Budget& budget,
                                std::int64_t steps_per_epoch);
    static LRSchedule decoupled(double eps0, double eps_f, const Budget& budget,
                                std::int64_t steps_per_epoch, Granularity granularity);

    double lr_at(std::int64_t step) const;

    /// First step index of every LR change, in increasing order.
    std::vector<std::int64_t> drop_steps() const;

    /// Total training steps implied by the budget.
    std::int64_t total_steps() const;

    double eps0() const noexcept { return eps0_; }
    double gamma() const noexcept { return gamma_; }
    double final_lr() const;
    const Budget& budget() const noexcept { return budget_; }
    std::int64_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
    Granularity granularity() const noexcept { return granularity_; }

    std::string to_json() const;
    static LRSchedule from_json(const std::string& text);

private:
    double eps0_ = 0.0;
    double gamma_ = 1.0;
    Budget budget_;
    std::int64_t steps_per_epoch_ = 1;
    Granularity granularity_ = Granularity::Epoch;

    std::int64_t total_units() const;
    std::int64_t drops_at_unit(std::int64_t t) const;
    static LRSchedule make(double eps0, double gamma, const Budget& budget,
                           std::int64_t steps_per_epoch, Granularity granularity);
};

/// gamma^-drops by repeated multiplication (exact for gamma = 2, and
/// platform-stable for any gamma).
double decay_power(double gamma, std::int64_t drops);

} // namespace sgdlab
