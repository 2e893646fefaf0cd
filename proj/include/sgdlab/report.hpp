#pragma once

#include <string>
#include <vector>

#include "sgdlab/schedule.hpp"
#include "sgdlab/sweep.hpp"

namespace sgdlab {

/// One line of the batch-size report table.
struct ReportRow {
    int batch_size = 0;
    double metric_mean = 0.0, metric_std = 0.0;
    double train_loss_mean = 0.0, train_loss_std = 0.0;
    double optimal_lr = 0.0;
    double errorbar_lo = 0.0, errorbar_hi = 0.0;
    bool missing = false; ///< group had no completed runs

    bool operator==(const ReportRow&) const = default;
};

/// Learning rates that are exact powers of two render as "2^a" (the default
/// grid is a power-of-two ladder); anything else renders in decimal.
std::string format_lr(double lr);
double parse_lr(const std::string& text);

/// Renders "lr (lo to hi)", e.g. "2^3 (2^3 to 2^3)".
std::string format_lr_with_range(double lr, double lo, double hi);

/// Fixed-width text table; metric to one decimal, loss to three. Missing
/// rows render with "-" markers. The output of render_report parses back
/// losslessly at the rendered precision.
std::string render_report(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report(const std::string& text);

/// Schedule table: one row per LR change point plus both endpoints.
/// Columns: step, epoch, lr.
std::string render_schedule_table(const LRSchedule& sched, bool as_csv);

// --- sweep artifacts -------------------------------------------------------
//
// A sweep writes two files into its output directory:
//   runs.jsonl   - one RunRecord JSON object per line, in task order
//   summary.csv  - one row per (grid point, objective) with the selection
//                  flags; documented stable column order (see README)

extern const char* const kSummaryCsvHeader;

struct SummaryCsvRow {
    std::string scan;
    std::string optimizer;
    std::string objective;
    int batch_size = 0;
    std::int64_t budget_units = 0;
    double lr = 0.0;    ///< effective eps0 (endpoint scan: eps0)
    double eps_f = 0.0; ///< endpoint scan only; 0 elsewhere
    GridPointSummary summary;
    bool is_optimal = false;
    bool in_errorbar = false;
    bool boundary_flag = false;
};

void write_runs_jsonl(const std::string& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_runs_jsonl(const std::string& path);

std::string summary_csv_from_results(const std::string& scan,
                                     const std::vector<LrSweepResult>& results);
std::string summary_csv_from_endpoint(const EndpointOutcome& outcome, int batch_size,
                                      std::int64_t budget_units, OptimizerKind opt,
                                      Objective objective);
std::vector<SummaryCsvRow> parse_summary_csv(const std::string& text);

/// Human summary printed by the sweep command (per-group optimum lines).
std::string sweep_stdout_summary(const std::vector<SummaryCsvRow>& rows);

/// Table-1-style report plus plot-ready CSVs, built from a results
/// directory containing summary.csv. Returns the text table; writes
/// metric_vs_b.csv, optlr_vs_b.csv and lr_vs_budget.csv next to the summary.
std::string render_results_dir(const std::string& results_dir);

} // namespace sgdlab
