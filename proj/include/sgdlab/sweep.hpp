#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sgdlab/run.hpp"

namespace sgdlab {

enum class Objective { MaxTestAccuracy, MinTrainLoss, MinTestMse };

const char* to_string(Objective o);
Objective objective_from_string(const std::string& s);

/// true when the objective is maximized (accuracy-like).
bool objective_is_max(Objective o);

/// The objective value of a run; diverged runs rank strictly worst.
double objective_value(const RunRecord& rec, Objective o);

/// Which standard deviation defines the error-bar band: the optimal point's
/// own std (default) or each candidate point's std.
enum class ErrorBarRule { OptimalPointStd, PerPointStd };

struct SweepSpec {
    ModelSpec model;
    std::vector<double> lr_grid;  ///< effective learning rates, strictly increasing
    std::vector<int> batch_sizes; ///< one LR sweep per entry
    Budget budget = Budget::constant_step(40);
    int runs_per_point = 15;
    int keep_best = 12;
    Objective objective = Objective::MinTrainLoss;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double m = 0.9;
    double gamma = 2.0;
    SamplerMode sampler = SamplerMode::PerUpdateRandomSubset;
    std::optional<Granularity> granularity;
    ErrorBarRule errorbar_rule = ErrorBarRule::OptimalPointStd;
    std::uint64_t base_seed = 0;
    int curve_eval_size = 512;
    int jobs = 1;

    void validate() const;
};

/// Best-k aggregate of one grid point. `mean`/`stdev` summarize the objective
/// metric over the kept runs; the companion fields summarize train loss and
/// test metric over the same kept runs (Table-style reporting needs both).
struct GridPointSummary {
    double lr = 0.0;
    double mean = 0.0;
    double stdev = 0.0;
    int kept = 0;
    bool valid = false; ///< false when no run completed

    double train_loss_mean = 0.0, train_loss_std = 0.0;
    double test_metric_mean = 0.0, test_metric_std = 0.0;
};

/// Sorts by the objective, keeps the best min(k, completed) completed runs
/// and returns mean and sample standard deviation (divisor kept-1; zero when
/// kept <= 1). Diverged runs rank strictly worst and never contribute to the
/// statistics. A point with zero completed runs yields valid == false.
GridPointSummary aggregate_best_k(const std::vector<RunRecord>& records, int k,
                                  Objective objective);

struct Selection {
    bool valid = false; ///< false when every grid point was invalid
    double optimal_lr = 0.0;
    std::size_t optimal_index = 0;
    std::vector<double> errorbar_set; ///< LRs within one std on the favorable side
    bool boundary_flag = false;       ///< optimum or error-bar extreme at a grid end
};

/// Picks the grid point with the best mean (ties toward the smaller LR) and
/// collects every LR whose mean lies within one standard deviation of the
/// optimum on the favorable side. Throws if no summary is valid.
Selection select_optimal_lr(const std::vector<GridPointSummary>& summaries,
                            Objective objective,
                            ErrorBarRule rule = ErrorBarRule::OptimalPointStd);

/// Full LR sweep at one batch size: per-LR summaries plus the selection.
struct LrSweepResult {
    OptimizerKind optimizer = OptimizerKind::Sgd;
    int batch_size = 0;
    std::int64_t budget_units = 0;
    Objective objective = Objective::MinTrainLoss;
    std::vector<GridPointSummary> summaries;
    Selection selection;
};

/// Row container for every scan kind; scans differ only in which axis varies.
struct SweepOutcome {
    std::vector<RunRecord> records;   ///< every run, in deterministic task order
    std::vector<LrSweepResult> results;
    std::size_t total_runs = 0;
    std::size_t diverged_runs = 0;
    bool all_diverged = false;
};

/// Plain grid scan: LR x batch sizes with the spec's optimizer and objective.
SweepOutcome grid_scan(const SweepSpec& spec);

/// The two-regime template: one LR sweep per batch size for SGD and for
/// Momentum, reporting the optimal effective learning rate per (optimizer, B).
SweepOutcome regime_scan(const SweepSpec& spec);

/// Variable-epoch-budget template at a fixed batch size: for each epoch
/// budget the run pool is shared and summarized under both the test objective
/// and min-train-loss.
SweepOutcome budget_scan(const SweepSpec& spec, const std::vector<std::int64_t>& epoch_budgets);

/// Decoupled-endpoint template: 2-D sweep over (eps0, eps_f) pairs with
/// eps_f <= eps0. Each eps0 row appears as one LrSweepResult over the eps_f
/// axis; pair selection happens in the summary CSV / report layer.
struct EndpointCell {
    double eps0 = 0.0;
    double eps_f = 0.0;
    GridPointSummary summary; ///< lr field holds eps_f
};

struct EndpointOutcome {
    std::vector<RunRecord> records;
    std::vector<EndpointCell> cells;    ///< row-major over (eps0, eps_f)
    double optimal_eps0 = 0.0, optimal_eps_f = 0.0;
    std::vector<double> eps0_errorbar, epsf_errorbar;
    bool boundary_flag = false;
    std::size_t total_runs = 0, diverged_runs = 0;
    bool all_diverged = false;
};

EndpointOutcome endpoint_scan(const SweepSpec& spec, const std::vector<double>& eps0_grid,
                              const std::vector<double>& epsf_grid, Objective objective);

/// Runs `count` independent tasks on a bounded pool; task i writes only its
/// own slot, so results are identical for any jobs value.
void run_parallel(int jobs, std::size_t count, const std::function<void(std::size_t)>& task);

} // namespace sgdlab
