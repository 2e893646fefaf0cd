#include "sgdlab.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "sgdlab/checks.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/error.hpp"
#include "sgdlab/report.hpp"
#include "sgdlab/schedule.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (out == nullptr) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

sgdlab_status fail(sgdlab_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
sgdlab_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const sgdlab::ConfigError& e) {
        return fail(SGDLAB_CONFIG_ERROR, e.what());
    } catch (const std::exception& e) {
        return fail(SGDLAB_ERROR, e.what());
    } catch (...) {
        return fail(SGDLAB_ERROR, "unknown error");
    }
}

} // namespace

struct sgdlab_schedule {
    sgdlab::LRSchedule impl;
};

extern "C" {

const char* sgdlab_version(void) { return "sgdlab 1.0.0"; }

const char* sgdlab_last_error(void) { return g_last_error.c_str(); }

void sgdlab_string_free(char* s) { delete[] s; }

sgdlab_status sgdlab_schedule_create(const char* config_json, sgdlab_schedule** out) {
    if (config_json == nullptr || out == nullptr) {
        return fail(SGDLAB_CONFIG_ERROR, "null argument");
    }
    *out = nullptr;
    return guarded([&] {
        auto* handle = new sgdlab_schedule{sgdlab::parse_schedule_config(config_json)};
        *out = handle;
        return SGDLAB_OK;
    });
}

sgdlab_status sgdlab_schedule_lr_at(const sgdlab_schedule* sched, int64_t step,
                                    double* out_lr) {
    if (sched == nullptr || out_lr == nullptr) {
        return fail(SGDLAB_CONFIG_ERROR, "null argument");
    }
    return guarded([&] {
        *out_lr = sched->impl.lr_at(step);
        return SGDLAB_OK;
    });
}

sgdlab_status sgdlab_schedule_total_steps(const sgdlab_schedule* sched, int64_t* out_steps) {
    if (sched == nullptr || out_steps == nullptr) {
        return fail(SGDLAB_CONFIG_ERROR, "null argument");
    }
    *out_steps = sched->impl.total_steps();
    return SGDLAB_OK;
}

sgdlab_status sgdlab_schedule_table(const sgdlab_schedule* sched, int as_csv,
                                    char** out_text) {
    if (sched == nullptr || out_text == nullptr) {
        return fail(SGDLAB_CONFIG_ERROR, "null argument");
    }
    return guarded([&] {
        *out_text = dup_string(sgdlab::render_schedule_table(sched->impl, as_csv != 0));
        return *out_text ? SGDLAB_OK : fail(SGDLAB_ERROR, "out of memory");
    });
}

void sgdlab_schedule_free(sgdlab_schedule* sched) { delete sched; }

} // extern "C"

namespace {

sgdlab_status run_sweep_job(const sgdlab::SweepJob& job, const std::string& out_dir,
                            std::string* summary_out) {
    using namespace sgdlab;
    std::filesystem::create_directories(out_dir);

    std::vector<RunRecord> records;
    std::string csv;
    bool all_diverged = false;

    switch (job.scan) {
        case SweepJob::Scan::Grid: {
            SweepOutcome out = grid_scan(job.spec);
            records = std::move(out.records);
            csv = summary_csv_from_results("grid", out.results);
            all_diverged = out.all_diverged;
            break;
        }
        case SweepJob::Scan::Regime: {
            SweepOutcome out = regime_scan(job.spec);
            records = std::move(out.records);
            csv = summary_csv_from_results("regime", out.results);
            all_diverged = out.all_diverged;
            break;
        }
        case SweepJob::Scan::Budget: {
            SweepOutcome out = budget_scan(job.spec, job.epoch_budgets);
            records = std::move(out.records);
            csv = summary_csv_from_results("budget", out.results);
            all_diverged = out.all_diverged;
            break;
        }
        case SweepJob::Scan::Endpoint: {
            EndpointOutcome out =
                endpoint_scan(job.spec, job.eps0_grid, job.epsf_grid, job.spec.objective);
            records = std::move(out.records);
            csv = summary_csv_from_endpoint(out, job.spec.batch_sizes.front(),
                                            job.spec.budget.units, job.spec.optimizer,
                                            job.spec.objective);
            all_diverged = out.all_diverged;
            break;
        }
    }

    write_runs_jsonl(out_dir + "/runs.jsonl", records);
    {
        std::ofstream out(out_dir + "/summary.csv");
        if (!out) throw Error("cannot write " + out_dir + "/summary.csv");
        out << csv;
    }
    if (summary_out != nullptr) {
        *summary_out = sweep_stdout_summary(parse_summary_csv(csv));
    }
    return all_diverged ? fail(SGDLAB_ALL_DIVERGED, "every run in the sweep diverged")
                        : SGDLAB_OK;
}

} // namespace

extern "C" {

sgdlab_status sgdlab_sweep_run(const char* config_path, const char* out_dir, uint64_t seed,
                               int has_seed, int jobs, char** out_summary) {
    if (config_path == nullptr || out_dir == nullptr) {
        return fail(SGDLAB_CONFIG_ERROR, "null argument");
    }
    if (out_summary != nullptr) *out_summary = nullptr;
    return guarded([&]() -> sgdlab_status {
        sgdlab::SweepJob job = sgdlab::parse_sweep_config_file(config_path);
        if (has_seed != 0) job.spec.base_seed = seed;
        if (jobs > 0) job.spec.jobs = jobs;
        std::string summary;
        const sgdlab_status st = run_sweep_job(job, out_dir, &summary);
        if (out_summary != nullptr) {
            *out_summary = dup_string(summary);
            if (*out_summary == nullptr) return fail(SGDLAB_ERROR, "out of memory");
        }
        return st;
    });
}

sgdlab_status sgdlab_sweep_dry_run(const char* config_path, uint64_t* out_runs) {
    if (config_path == nullptr || out_runs == nullptr) {
        return fail(SGDLAB_CONFIG_ERROR, "null argument");
    }
    return guarded([&] {
        const sgdlab::SweepJob job = sgdlab::parse_sweep_config_file(config_path);
        *out_runs = job.planned_runs();
        return SGDLAB_OK;
    });
}

sgdlab_status sgdlab_check_run(const char* name, uint64_t seed, const char* params_json,
                               char** out_report_json) {
    if (name == nullptr) return fail(SGDLAB_CONFIG_ERROR, "null check name");
    if (out_report_json != nullptr) *out_report_json = nullptr;
    return guarded([&]() -> sgdlab_status {
        const sgdlab::CheckReport report = sgdlab::run_named_check(
            name, seed, params_json == nullptr ? std::string() : params_json);
        if (out_report_json != nullptr) {
            *out_report_json = dup_string(report.to_json());
            if (*out_report_json == nullptr) return fail(SGDLAB_ERROR, "out of memory");
        }
        if (!report.as_predicted()) {
            return fail(SGDLAB_CHECK_FAILED,
                        "check '" + report.name + "' finished with status " +
                            std::string(sgdlab::to_string(report.status)));
        }
        return SGDLAB_OK;
    });
}

sgdlab_status sgdlab_check_list(char** out_names) {
    if (out_names == nullptr) return fail(SGDLAB_CONFIG_ERROR, "null argument");
    std::string joined;
    for (const auto& n : sgdlab::check_names()) {
        joined += n;
        joined += '\n';
    }
    *out_names = dup_string(joined);
    return *out_names ? SGDLAB_OK : fail(SGDLAB_ERROR, "out of memory");
}

sgdlab_status sgdlab_report_render(const char* results_dir, char** out_table) {
    if (results_dir == nullptr || out_table == nullptr) {
        return fail(SGDLAB_CONFIG_ERROR, "null argument");
    }
    *out_table = nullptr;
    return guarded([&]() -> sgdlab_status {
        *out_table = dup_string(sgdlab::render_results_dir(results_dir));
        return *out_table ? SGDLAB_OK : fail(SGDLAB_ERROR, "out of memory");
    });
}

} // extern "C"
