#include "sgdlab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "sgdlab/error.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kKeyRun = 0x2217;
} // namespace

const char* to_string(Objective o) {
    switch (o) {
        case Objective::MaxTestAccuracy: return "max_test_accuracy";
        case Objective::MinTrainLoss: return "min_train_loss";
        case Objective::MinTestMse: return "min_test_mse";
    }
    return "?";
}

Objective objective_from_string(const std::string& s) {
    if (s == "max_test_accuracy") return Objective::MaxTestAccuracy;
    if (s == "min_train_loss") return Objective::MinTrainLoss;
    if (s == "min_test_mse") return Objective::MinTestMse;
    throw ConfigError("unknown objective: " + s);
}

bool objective_is_max(Objective o) { return o == Objective::MaxTestAccuracy; }

double objective_value(const RunRecord& rec, Objective o) {
    if (!rec.completed) return objective_is_max(o) ? -kInf : kInf;
    switch (o) {
        case Objective::MaxTestAccuracy: return rec.final_test_accuracy;
        case Objective::MinTrainLoss: return rec.final_train_loss;
        case Objective::MinTestMse: return rec.final_test_mse;
    }
    return kInf;
}

void SweepSpec::validate() const {
    require(!lr_grid.empty(), "sweep: empty learning-rate grid");
    for (std::size_t i = 0; i + 1 < lr_grid.size(); ++i) {
        require(lr_grid[i] < lr_grid[i + 1], "sweep: lr grid must be strictly increasing");
    }
    for (double lr : lr_grid) require(lr > 0.0, "sweep: learning rates must be positive");
    require(!batch_sizes.empty(), "sweep: no batch sizes");
    require(runs_per_point >= 1, "sweep: runs_per_point must be >= 1");
    require(keep_best >= 1 && keep_best <= runs_per_point,
            "sweep: need 1 <= keep_best <= runs_per_point");
    require(m >= 0.0 && m < 1.0, "sweep: momentum must be in [0, 1)");
    require(gamma >= 1.0, "sweep: gamma must be >= 1");
    if (model.kind == ModelSpec::Kind::Quadratic) {
        require(objective == Objective::MinTrainLoss,
                "sweep: quadratic models only support the min_train_loss objective");
    }
}

namespace {

struct Stats {
    double mean = 0.0, stdev = 0.0;
};

Stats mean_std(const std::vector<double>& xs) {
    Stats s;
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.stdev = std::sqrt(acc / (xs.size() - 1));
    }
    return s;
}

} // namespace

GridPointSummary aggregate_best_k(const std::vector<RunRecord>& records, int k,
                                  Objective objective) {
    require(k >= 1, "aggregate_best_k: k must be >= 1");
    GridPointSummary out;
    if (!records.empty()) out.lr = records.front().eps0_eff;

    std::vector<std::size_t> completed;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].completed) completed.push_back(i);
    }
    if (completed.empty()) return out; // invalid summary, excluded from selection

    const bool maximize = objective_is_max(objective);
    std::stable_sort(completed.begin(), completed.end(), [&](std::size_t a, std::size_t b) {
        const double va = objective_value(records[a], objective);
        const double vb = objective_value(records[b], objective);
        return maximize ? va > vb : va < vb;
    });
    const std::size_t kept = std::min<std::size_t>(static_cast<std::size_t>(k), completed.size());

    std::vector<double> obj, train_loss, test_metric;
    for (std::size_t i = 0; i < kept; ++i) {
        const RunRecord& r = records[completed[i]];
        obj.push_back(objective_value(r, objective));
        train_loss.push_back(r.final_train_loss);
        test_metric.push_back(objective == Objective::MinTestMse ? r.final_test_mse
                                                                 : r.final_test_accuracy);
    }
    const Stats so = mean_std(obj);
    const Stats st = mean_std(train_loss);
    const Stats sm = mean_std(test_metric);
    out.mean = so.mean;
    out.stdev = so.stdev;
    out.kept = static_cast<int>(kept);
    out.valid = true;
    out.train_loss_mean = st.mean;
    out.train_loss_std = st.stdev;
    out.test_metric_mean = sm.mean;
    out.test_metric_std = sm.stdev;
    return out;
}

Selection select_optimal_lr(const std::vector<GridPointSummary>& summaries,
                            Objective objective, ErrorBarRule rule) {
    const bool maximize = objective_is_max(objective);
    std::size_t best = summaries.size();
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        if (!summaries[i].valid) continue;
        if (best == summaries.size()) {
            best = i;
            continue;
        }
        const double v = summaries[i].mean;
        const double b = summaries[best].mean;
        // Strict improvement only: ties stay at the smaller LR.
        if (maximize ? v > b : v < b) best = i;
    }
    if (best == summaries.size()) {
        throw Error("select_optimal_lr: no grid point has a completed run");
    }

    Selection sel;
    sel.valid = true;
    sel.optimal_index = best;
    sel.optimal_lr = summaries[best].lr;

    std::size_t lo = best, hi = best;
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        if (!summaries[i].valid) continue;
        const double band =
            rule == ErrorBarRule::OptimalPointStd ? summaries[best].stdev : summaries[i].stdev;
        const bool inside = maximize ? summaries[i].mean >= summaries[best].mean - band
                                     : summaries[i].mean <= summaries[best].mean + band;
        if (inside) {
            sel.errorbar_set.push_back(summaries[i].lr);
            lo = std::min(lo, i);
            hi = std::max(hi, i);
        }
    }
    sel.boundary_flag = best == 0 || best + 1 == summaries.size() || lo == 0 ||
                        hi + 1 == summaries.size();
    return sel;
}

void run_parallel(int jobs, std::size_t count, const std::function<void(std::size_t)>& task) {
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    const int nthreads = std::min<int>(jobs, static_cast<int>(count));
    threads.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

struct PointDesc {
    OptimizerKind optimizer;
    int batch_size;
    double eps0_eff;
    double eps_f; ///< 0 = coupled schedule
    Budget budget;
};

/// Executes runs_per_point runs for each point; records land in task order.
std::vector<RunRecord> execute_points(const std::shared_ptr<const ExperimentContext>& ctx,
                                      const SweepSpec& spec,
                                      const std::vector<PointDesc>& points) {
    const std::size_t n = static_cast<std::size_t>(spec.runs_per_point);
    std::vector<RunRecord> records(points.size() * n);
    run_parallel(spec.jobs, records.size(), [&](std::size_t task) {
        const std::size_t point = task / n;
        const std::size_t run = task % n;
        const PointDesc& pd = points[point];
        RunParams rp;
        rp.optimizer = pd.optimizer;
        rp.m = spec.m;
        rp.eps0_eff = pd.eps0_eff;
        rp.gamma = spec.gamma;
        rp.eps_f = pd.eps_f;
        rp.budget = pd.budget;
        rp.batch_size = pd.batch_size;
        rp.sampler = spec.sampler;
        rp.granularity = spec.granularity;
        rp.curve_eval_size = spec.curve_eval_size;
        const std::uint64_t run_seed =
            stream_seed(spec.base_seed, {kKeyRun, point, run});
        records[task] = run_training(*ctx, rp, run_seed);
    });
    return records;
}

LrSweepResult summarize_point_block(const SweepSpec& spec,
                                    const std::vector<RunRecord>& records,
                                    std::size_t first_point, OptimizerKind opt,
                                    int batch_size, std::int64_t budget_units,
                                    Objective objective) {
    LrSweepResult res;
    res.optimizer = opt;
    res.batch_size = batch_size;
    res.budget_units = budget_units;
    res.objective = objective;
    const std::size_t n = static_cast<std::size_t>(spec.runs_per_point);
    for (std::size_t li = 0; li < spec.lr_grid.size(); ++li) {
        const std::size_t base = (first_point + li) * n;
        std::vector<RunRecord> block(records.begin() + base, records.begin() + base + n);
        GridPointSummary s = aggregate_best_k(block, spec.keep_best, objective);
        s.lr = spec.lr_grid[li];
        res.summaries.push_back(std::move(s));
    }
    try {
        res.selection = select_optimal_lr(res.summaries, objective, spec.errorbar_rule);
    } catch (const Error&) {
        res.selection = Selection{}; // no completed runs anywhere on this grid
    }
    return res;
}

void fill_counters(SweepOutcome& out) {
    out.total_runs = out.records.size();
    out.diverged_runs = 0;
    for (const auto& r : out.records) {
        if (!r.completed) ++out.diverged_runs;
    }
    out.all_diverged = out.total_runs > 0 && out.diverged_runs == out.total_runs;
}

} // namespace

SweepOutcome grid_scan(const SweepSpec& spec) {
    spec.validate();
    auto ctx = ExperimentContext::create(spec.model, spec.base_seed);

    std::vector<PointDesc> points;
    for (int b : spec.batch_sizes) {
        for (double lr : spec.lr_grid) {
            points.push_back({spec.optimizer, b, lr, 0.0, spec.budget});
        }
    }
    SweepOutcome out;
    out.records = execute_points(ctx, spec, points);
    for (std::size_t bi = 0; bi < spec.batch_sizes.size(); ++bi) {
        out.results.push_back(summarize_point_block(
            spec, out.records, bi * spec.lr_grid.size(), spec.optimizer,
            spec.batch_sizes[bi], spec.budget.units, spec.objective));
    }
    fill_counters(out);
    return out;
}

SweepOutcome regime_scan(const SweepSpec& spec) {
    spec.validate();
    auto ctx = ExperimentContext::create(spec.model, spec.base_seed);

    const OptimizerKind opts[2] = {OptimizerKind::Sgd, OptimizerKind::Momentum};
    std::vector<PointDesc> points;
    for (OptimizerKind opt : opts) {
        for (int b : spec.batch_sizes) {
            for (double lr : spec.lr_grid) {
                points.push_back({opt, b, lr, 0.0, spec.budget});
            }
        }
    }
    SweepOutcome out;
    out.records = execute_points(ctx, spec, points);
    std::size_t first = 0;
    for (OptimizerKind opt : opts) {
        for (int b : spec.batch_sizes) {
            out.results.push_back(summarize_point_block(spec, out.records, first, opt, b,
                                                        spec.budget.units, spec.objective));
            first += spec.lr_grid.size();
        }
    }
    fill_counters(out);
    return out;
}

SweepOutcome budget_scan(const SweepSpec& spec,
                         const std::vector<std::int64_t>& epoch_budgets) {
    spec.validate();
    require(spec.batch_sizes.size() == 1, "budget_scan: exactly one batch size");
    require(!epoch_budgets.empty(), "budget_scan: no epoch budgets");
    auto ctx = ExperimentContext::create(spec.model, spec.base_seed);
    const int b = spec.batch_sizes.front();

    std::vector<PointDesc> points;
    for (std::int64_t e : epoch_budgets) {
        for (double lr : spec.lr_grid) {
            points.push_back({spec.optimizer, b, lr, 0.0, Budget::constant_epoch(e)});
        }
    }
    SweepOutcome out;
    out.records = execute_points(ctx, spec, points);
    // Both objectives are evaluated from the same run pool.
    std::size_t first = 0;
    for (std::int64_t e : epoch_budgets) {
        out.results.push_back(summarize_point_block(spec, out.records, first, spec.optimizer,
                                                    b, e, spec.objective));
        if (spec.objective != Objective::MinTrainLoss) {
            out.results.push_back(summarize_point_block(spec, out.records, first,
                                                        spec.optimizer, b, e,
                                                        Objective::MinTrainLoss));
        }
        first += spec.lr_grid.size();
    }
    fill_counters(out);
    return out;
}

EndpointOutcome endpoint_scan(const SweepSpec& spec, const std::vector<double>& eps0_grid,
                              const std::vector<double>& epsf_grid, Objective objective) {
    spec.validate();
    require(spec.batch_sizes.size() == 1, "endpoint_scan: exactly one batch size");
    require(!eps0_grid.empty() && !epsf_grid.empty(), "endpoint_scan: empty grids");
    for (std::size_t i = 0; i + 1 < eps0_grid.size(); ++i) {
        require(eps0_grid[i] < eps0_grid[i + 1], "endpoint_scan: eps0 grid must increase");
    }
    for (std::size_t i = 0; i + 1 < epsf_grid.size(); ++i) {
        require(epsf_grid[i] < epsf_grid[i + 1], "endpoint_scan: eps_f grid must increase");
    }
    auto ctx = ExperimentContext::create(spec.model, spec.base_seed);
    const int b = spec.batch_sizes.front();

    struct CellDesc {
        std::size_t i0, jf;
        double eps0, eps_f;
    };
    std::vector<CellDesc> cells;
    std::vector<PointDesc> points;
    for (std::size_t i = 0; i < eps0_grid.size(); ++i) {
        for (std::size_t j = 0; j < epsf_grid.size(); ++j) {
            if (epsf_grid[j] > eps0_grid[i]) continue; // eps_f <= eps0 pairs only
            cells.push_back({i, j, eps0_grid[i], epsf_grid[j]});
            points.push_back({spec.optimizer, b, eps0_grid[i], epsf_grid[j], spec.budget});
        }
    }
    require(!points.empty(), "endpoint_scan: every (eps0, eps_f) pair has eps_f > eps0");

    EndpointOutcome out;
    out.records = execute_points(ctx, spec, points);
    out.total_runs = out.records.size();
    for (const auto& r : out.records) {
        if (!r.completed) ++out.diverged_runs;
    }
    out.all_diverged = out.total_runs > 0 && out.diverged_runs == out.total_runs;

    const std::size_t n = static_cast<std::size_t>(spec.runs_per_point);
    const bool maximize = objective_is_max(objective);
    std::size_t best = cells.size();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<RunRecord> block(out.records.begin() + c * n,
                                     out.records.begin() + (c + 1) * n);
        GridPointSummary s = aggregate_best_k(block, spec.keep_best, objective);
        s.lr = cells[c].eps_f;
        EndpointCell cell;
        cell.eps0 = cells[c].eps0;
        cell.eps_f = cells[c].eps_f;
        cell.summary = s;
        out.cells.push_back(cell);
        if (!s.valid) continue;
        if (best == cells.size()) {
            best = c;
            continue;
        }
        const double v = s.mean;
        const double bv = out.cells[best].summary.mean;
        if (maximize ? v > bv : v < bv) best = c;
    }
    if (best == cells.size()) return out; // every run diverged
    out.optimal_eps0 = cells[best].eps0;
    out.optimal_eps_f = cells[best].eps_f;

    // Per-axis error bars, holding the other coordinate at its optimum.
    const double band = out.cells[best].summary.stdev;
    const double best_mean = out.cells[best].summary.mean;
    bool extreme = cells[best].i0 == 0 || cells[best].i0 + 1 == eps0_grid.size() ||
                   cells[best].jf == 0 || cells[best].jf + 1 == epsf_grid.size();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& s = out.cells[c].summary;
        if (!s.valid) continue;
        const bool inside =
            maximize ? s.mean >= best_mean - band : s.mean <= best_mean + band;
        if (!inside) continue;
        if (cells[c].jf == cells[best].jf) {
            out.eps0_errorbar.push_back(cells[c].eps0);
            if (cells[c].i0 == 0 || cells[c].i0 + 1 == eps0_grid.size()) extreme = true;
        }
        if (cells[c].i0 == cells[best].i0) {
            out.epsf_errorbar.push_back(cells[c].eps_f);
            if (cells[c].jf == 0 || cells[c].jf + 1 == epsf_grid.size()) extreme = true;
        }
    }
    out.boundary_flag = extreme;
    return out;
}

} // namespace sgdlab
