#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgdlab/schedule.hpp"
#include "sgdlab/sweep.hpp"

namespace sgdlab {

/// A parsed sweep configuration: which scan template to run and its spec.
struct SweepJob {
    enum class Scan { Grid, Regime, Budget, Endpoint };
    Scan scan = Scan::Grid;
    SweepSpec spec;
    std::vector<std::int64_t> epoch_budgets; ///< budget scan
    std::vector<double> eps0_grid, epsf_grid; ///< endpoint scan

    std::size_t planned_runs() const;
};

/// Parses a version-1 sweep config. The schema is strict: unknown keys are
/// errors and every error message names the offending field.
SweepJob parse_sweep_config(const std::string& json_text);
SweepJob parse_sweep_config_file(const std::string& path);

/// Parses a version-1 schedule config into an LRSchedule.
LRSchedule parse_schedule_config(const std::string& json_text);
LRSchedule parse_schedule_config_file(const std::string& path);

std::string read_text_file(const std::string& path);

} // namespace sgdlab
