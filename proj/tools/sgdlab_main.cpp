// sgdlab command line: schedules, sweeps, checks and reports over the
// sgdlab shared library's C API.

#include <clocale>
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "sgdlab.h"

namespace {

int report_failure(sgdlab_status status) {
    std::fprintf(stderr, "error: %s\n", sgdlab_last_error());
    return static_cast<int>(status);
}

std::string read_file_or_die(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) {
        std::fprintf(stderr, "error: cannot open config file: %s\n", path.c_str());
        std::exit(static_cast<int>(SGDLAB_CONFIG_ERROR));
    }
    std::string content;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) content.append(buf, n);
    std::fclose(f);
    return content;
}

} // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");

    CLI::App app{"sgdlab: SGD noise laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "results";
    std::string results_dir;
    std::string check_name;
    std::string check_params;
    std::uint64_t seed = 0;
    bool have_seed = false;
    int jobs = 0;
    bool dry_run = false;
    bool as_csv = false;
    bool list_checks = false;

    auto* schedule_cmd =
        app.add_subcommand("schedule", "print the LR table for a schedule config");
    schedule_cmd->add_option("--config", config_path, "schedule config (JSON)")->required();
    schedule_cmd->add_flag("--csv", as_csv, "emit CSV instead of a text table");

    auto* sweep_cmd = app.add_subcommand("sweep", "run a budgeted LR/batch-size sweep");
    sweep_cmd->add_option("--config", config_path, "sweep config (JSON)")->required();
    sweep_cmd->add_option("--out", out_dir, "output directory (runs.jsonl, summary.csv)");
    sweep_cmd->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { have_seed = true; });
    sweep_cmd->add_option("--jobs", jobs, "worker threads (default: hardware)");
    sweep_cmd->add_flag("--dry-run", dry_run, "print the planned run count and exit");

    auto* checks_cmd = app.add_subcommand("checks", "run a built-in theory check");
    checks_cmd->add_option("name", check_name, "check name");
    checks_cmd->add_flag("--list", list_checks, "list valid check names");
    checks_cmd->add_option("--seed", seed, "Monte-Carlo seed");
    checks_cmd->add_option("--params", check_params,
                           "JSON parameter overrides, e.g. {\"eps_scale\":1.0}");

    auto* report_cmd =
        app.add_subcommand("report", "render the batch-size table and plot CSVs");
    report_cmd->add_option("--results", results_dir, "directory with summary.csv")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(SGDLAB_CONFIG_ERROR);
    }

    if (schedule_cmd->parsed()) {
        const std::string config = read_file_or_die(config_path);
        sgdlab_schedule* sched = nullptr;
        sgdlab_status st = sgdlab_schedule_create(config.c_str(), &sched);
        if (st != SGDLAB_OK) return report_failure(st);
        char* table = nullptr;
        st = sgdlab_schedule_table(sched, as_csv ? 1 : 0, &table);
        if (st != SGDLAB_OK) {
            sgdlab_schedule_free(sched);
            return report_failure(st);
        }
        std::fputs(table, stdout);
        sgdlab_string_free(table);
        sgdlab_schedule_free(sched);
        return 0;
    }

    if (sweep_cmd->parsed()) {
        if (dry_run) {
            std::uint64_t runs = 0;
            const sgdlab_status st = sgdlab_sweep_dry_run(config_path.c_str(), &runs);
            if (st != SGDLAB_OK) return report_failure(st);
            std::printf("planned runs: %llu\n", static_cast<unsigned long long>(runs));
            return 0;
        }
        char* summary = nullptr;
        const sgdlab_status st = sgdlab_sweep_run(config_path.c_str(), out_dir.c_str(),
                                                  seed, have_seed ? 1 : 0, jobs, &summary);
        if (summary != nullptr) {
            std::fputs(summary, stdout);
            sgdlab_string_free(summary);
        }
        if (st != SGDLAB_OK) return report_failure(st);
        std::printf("artifacts written to %s\n", out_dir.c_str());
        return 0;
    }

    if (checks_cmd->parsed()) {
        if (list_checks) {
            char* names = nullptr;
            const sgdlab_status st = sgdlab_check_list(&names);
            if (st != SGDLAB_OK) return report_failure(st);
            std::fputs(names, stdout);
            sgdlab_string_free(names);
            return 0;
        }
        if (check_name.empty()) {
            std::fprintf(stderr, "error: missing check name (try --list)\n");
            return static_cast<int>(SGDLAB_CONFIG_ERROR);
        }
        char* report = nullptr;
        const sgdlab_status st = sgdlab_check_run(
            check_name.c_str(), seed, check_params.empty() ? nullptr : check_params.c_str(),
            &report);
        if (report != nullptr) {
            std::fputs(report, stdout);
            std::fputs("\n", stdout);
            sgdlab_string_free(report);
        }
        if (st != SGDLAB_OK) return report_failure(st);
        return 0;
    }

    if (report_cmd->parsed()) {
        char* table = nullptr;
        const sgdlab_status st = sgdlab_report_render(results_dir.c_str(), &table);
        if (st != SGDLAB_OK) return report_failure(st);
        std::fputs(table, stdout);
        sgdlab_string_free(table);
        return 0;
    }

    return static_cast<int>(SGDLAB_CONFIG_ERROR);
}
