#include "sgdlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sgdlab/error.hpp"

namespace sgdlab {

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::string fmt_full(double v) { return fmt("%.17g", v); }

} // namespace

std::string format_lr(double lr) {
    if (lr > 0.0 && std::isfinite(lr)) {
        const double l2 = std::log2(lr);
        const double rounded = std::round(l2);
        if (l2 == rounded && std::fabs(rounded) <= 64.0) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "2^%d", static_cast<int>(rounded));
            return buf;
        }
    }
    return fmt("%g", lr);
}

double parse_lr(const std::string& text) {
    if (text.rfind("2^", 0) == 0) {
        return std::exp2(std::stod(text.substr(2)));
    }
    return std::stod(text);
}

std::string format_lr_with_range(double lr, double lo, double hi) {
    return format_lr(lr) + " (" + format_lr(lo) + " to " + format_lr(hi) + ")";
}

std::string render_report(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "batch_size | test_metric | train_loss | optimal_eff_lr\n";
    for (const auto& r : rows) {
        if (r.missing) {
            out << r.batch_size << " | - | - | -\n";
            continue;
        }
        out << r.batch_size << " | " << fmt("%.1f", r.metric_mean) << " ± "
            << fmt("%.1f", r.metric_std) << " | " << fmt("%.3f", r.train_loss_mean)
            << " ± " << fmt("%.3f", r.train_loss_std) << " | "
            << format_lr_with_range(r.optimal_lr, r.errorbar_lo, r.errorbar_hi) << "\n";
    }
    return out.str();
}

std::vector<ReportRow> parse_report(const std::string& text) {
    std::vector<ReportRow> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.rfind("batch_size", 0) == 0) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            const std::size_t bar = line.find(" | ", start);
            if (bar == std::string::npos) {
                cols.push_back(line.substr(start));
                break;
            }
            cols.push_back(line.substr(start, bar - start));
            start = bar + 3;
        }
        if (cols.size() != 4) throw Error("parse_report: malformed row: " + line);
        ReportRow r;
        r.batch_size = std::stoi(cols[0]);
        if (cols[1] == "-") {
            r.missing = true;
            rows.push_back(r);
            continue;
        }
        auto parse_pm = [](const std::string& s, double& mean, double& std_out) {
            const std::size_t pm = s.find(" ± ");
            if (pm == std::string::npos) throw Error("parse_report: missing ± in: " + s);
            mean = std::stod(s.substr(0, pm));
            std_out = std::stod(s.substr(pm + std::string(" ± ").size()));
        };
        parse_pm(cols[1], r.metric_mean, r.metric_std);
        parse_pm(cols[2], r.train_loss_mean, r.train_loss_std);
        const std::string& lr = cols[3];
        const std::size_t open = lr.find(" (");
        const std::size_t to = lr.find(" to ");
        const std::size_t close = lr.find(')');
        if (open == std::string::npos || to == std::string::npos || close == std::string::npos) {
            throw Error("parse_report: malformed lr column: " + lr);
        }
        r.optimal_lr = parse_lr(lr.substr(0, open));
        r.errorbar_lo = parse_lr(lr.substr(open + 2, to - open - 2));
        r.errorbar_hi = parse_lr(lr.substr(to + 4, close - to - 4));
        rows.push_back(r);
    }
    return rows;
}

std::string render_schedule_table(const LRSchedule& sched, bool as_csv) {
    std::ostringstream out;
    const char* sep = as_csv ? "," : " | ";
    out << "step" << sep << "epoch" << sep << "lr\n";
    std::vector<std::int64_t> steps;
    steps.push_back(0);
    for (std::int64_t s : sched.drop_steps()) {
        if (s > 0 && s < sched.total_steps()) steps.push_back(s);
    }
    const std::int64_t last = sched.total_steps() - 1;
    if (steps.back() != last) steps.push_back(last);
    for (std::int64_t s : steps) {
        out << s << sep << s / sched.steps_per_epoch() << sep
            << fmt("%.10g", sched.lr_at(s)) << "\n";
    }
    return out.str();
}

const char* const kSummaryCsvHeader =
    "scan,optimizer,objective,batch_size,budget_units,lr,eps_f,obj_mean,obj_std,kept,"
    "train_loss_mean,train_loss_std,test_metric_mean,test_metric_std,is_optimal,"
    "in_errorbar,boundary_flag";

namespace {

std::string csv_row(const SummaryCsvRow& r) {
    std::ostringstream out;
    auto num = [](double v) { return std::isnan(v) ? std::string() : fmt_full(v); };
    out << r.scan << ',' << r.optimizer << ',' << r.objective << ',' << r.batch_size << ','
        << r.budget_units << ',' << fmt_full(r.lr) << ','
        << (r.eps_f > 0.0 ? fmt_full(r.eps_f) : std::string()) << ','
        << (r.summary.valid ? num(r.summary.mean) : std::string()) << ','
        << (r.summary.valid ? num(r.summary.stdev) : std::string()) << ','
        << r.summary.kept << ','
        << (r.summary.valid ? num(r.summary.train_loss_mean) : std::string()) << ','
        << (r.summary.valid ? num(r.summary.train_loss_std) : std::string()) << ','
        << (r.summary.valid ? num(r.summary.test_metric_mean) : std::string()) << ','
        << (r.summary.valid ? num(r.summary.test_metric_std) : std::string()) << ','
        << (r.is_optimal ? 1 : 0) << ',' << (r.in_errorbar ? 1 : 0) << ','
        << (r.boundary_flag ? 1 : 0);
    return out.str();
}

std::vector<SummaryCsvRow> rows_from_results(const std::string& scan,
                                             const std::vector<LrSweepResult>& results) {
    std::vector<SummaryCsvRow> rows;
    for (const auto& res : results) {
        for (const auto& s : res.summaries) {
            SummaryCsvRow row;
            row.scan = scan;
            row.optimizer = to_string(res.optimizer);
            row.objective = to_string(res.objective);
            row.batch_size = res.batch_size;
            row.budget_units = res.budget_units;
            row.lr = s.lr;
            row.summary = s;
            row.is_optimal =
                res.selection.valid && s.valid && s.lr == res.selection.optimal_lr;
            row.in_errorbar = res.selection.valid && s.valid &&
                              std::find(res.selection.errorbar_set.begin(),
                                        res.selection.errorbar_set.end(),
                                        s.lr) != res.selection.errorbar_set.end();
            row.boundary_flag = res.selection.valid && res.selection.boundary_flag;
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace

std::string summary_csv_from_results(const std::string& scan,
                                     const std::vector<LrSweepResult>& results) {
    std::ostringstream out;
    out << kSummaryCsvHeader << "\n";
    for (const auto& row : rows_from_results(scan, results)) out << csv_row(row) << "\n";
    return out.str();
}

std::string summary_csv_from_endpoint(const EndpointOutcome& outcome, int batch_size,
                                      std::int64_t budget_units, OptimizerKind opt,
                                      Objective objective) {
    std::ostringstream out;
    out << kSummaryCsvHeader << "\n";
    for (const auto& cell : outcome.cells) {
        SummaryCsvRow row;
        row.scan = "endpoint";
        row.optimizer = to_string(opt);
        row.objective = to_string(objective);
        row.batch_size = batch_size;
        row.budget_units = budget_units;
        row.lr = cell.eps0;
        row.eps_f = cell.eps_f;
        row.summary = cell.summary;
        row.is_optimal = cell.eps0 == outcome.optimal_eps0 && cell.eps_f == outcome.optimal_eps_f;
        row.in_errorbar =
            std::find(outcome.eps0_errorbar.begin(), outcome.eps0_errorbar.end(),
                      cell.eps0) != outcome.eps0_errorbar.end() ||
            std::find(outcome.epsf_errorbar.begin(), outcome.epsf_errorbar.end(),
                      cell.eps_f) != outcome.epsf_errorbar.end();
        row.boundary_flag = outcome.boundary_flag;
        out << csv_row(row) << "\n";
    }
    return out.str();
}

std::vector<SummaryCsvRow> parse_summary_csv(const std::string& text) {
    std::vector<SummaryCsvRow> rows;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error("summary csv: empty file");
    if (line != kSummaryCsvHeader) throw Error("summary csv: unexpected header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                cols.push_back(line.substr(start));
                break;
            }
            cols.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (cols.size() != 17) throw Error("summary csv: malformed row: " + line);
        SummaryCsvRow r;
        r.scan = cols[0];
        r.optimizer = cols[1];
        r.objective = cols[2];
        r.batch_size = std::stoi(cols[3]);
        r.budget_units = std::stoll(cols[4]);
        r.lr = std::stod(cols[5]);
        r.eps_f = cols[6].empty() ? 0.0 : std::stod(cols[6]);
        r.summary.lr = r.lr;
        r.summary.valid = !cols[7].empty();
        if (r.summary.valid) {
            r.summary.mean = std::stod(cols[7]);
            r.summary.stdev = std::stod(cols[8]);
            r.summary.train_loss_mean = cols[10].empty() ? 0.0 : std::stod(cols[10]);
            r.summary.train_loss_std = cols[11].empty() ? 0.0 : std::stod(cols[11]);
            r.summary.test_metric_mean = cols[12].empty() ? 0.0 : std::stod(cols[12]);
            r.summary.test_metric_std = cols[13].empty() ? 0.0 : std::stod(cols[13]);
        }
        r.summary.kept = std::stoi(cols[9]);
        r.is_optimal = cols[14] == "1";
        r.in_errorbar = cols[15] == "1";
        r.boundary_flag = cols[16] == "1";
        rows.push_back(r);
    }
    return rows;
}

void write_runs_jsonl(const std::string& path, const std::vector<RunRecord>& records) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    for (const auto& r : records) out << r.to_json_line() << "\n";
    if (!out) throw Error("write failed: " + path);
}

std::vector<RunRecord> read_runs_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    std::vector<RunRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) records.push_back(RunRecord::from_json_line(line));
    }
    return records;
}

std::string sweep_stdout_summary(const std::vector<SummaryCsvRow>& rows) {
    std::ostringstream out;
    for (const auto& r : rows) {
        if (!r.is_optimal) continue;
        out << r.scan << " " << r.optimizer << " " << r.objective << " B=" << r.batch_size
            << " budget=" << r.budget_units;
        if (r.eps_f > 0.0) {
            out << " optimal eps0=" << format_lr(r.lr) << " eps_f=" << format_lr(r.eps_f);
        } else {
            out << " optimal lr=" << format_lr(r.lr);
        }
        out << " mean=" << fmt("%.6g", r.summary.mean) << " ± "
            << fmt("%.3g", r.summary.stdev) << (r.boundary_flag ? " [grid boundary]" : "")
            << "\n";
    }
    return out.str();
}

namespace {

struct GroupKey {
    std::string scan, optimizer, objective;
    int batch_size;
    std::int64_t budget_units;
    auto operator<=>(const GroupKey&) const = default;
};

} // namespace

std::string render_results_dir(const std::string& results_dir) {
    std::ifstream in(results_dir + "/summary.csv");
    if (!in) throw Error("no summary.csv in results dir: " + results_dir);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto rows = parse_summary_csv(buffer.str());

    std::map<GroupKey, std::vector<const SummaryCsvRow*>> groups;
    for (const auto& r : rows) {
        groups[{r.scan, r.optimizer, r.objective, r.batch_size, r.budget_units}].push_back(&r);
    }

    std::vector<ReportRow> table;
    std::ostringstream metric_vs_b, optlr_vs_b, lr_vs_budget;
    metric_vs_b << "optimizer,objective,batch_size,metric_mean,metric_std,"
                   "train_loss_mean,train_loss_std\n";
    optlr_vs_b << "optimizer,objective,batch_size,optimal_eff_lr,errorbar_lo,errorbar_hi,"
                  "boundary_flag\n";
    lr_vs_budget << "optimizer,objective,budget_units,optimal_eff_lr,errorbar_lo,"
                    "errorbar_hi\n";

    for (const auto& [key, group] : groups) {
        const SummaryCsvRow* opt = nullptr;
        double lo = 0.0, hi = 0.0;
        bool have_bar = false;
        for (const auto* r : group) {
            if (r->is_optimal) opt = r;
            if (r->in_errorbar) {
                const double v = r->eps_f > 0.0 ? r->eps_f : r->lr;
                if (!have_bar) {
                    lo = hi = v;
                    have_bar = true;
                } else {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
        }
        ReportRow row;
        row.batch_size = key.batch_size;
        if (opt == nullptr) {
            row.missing = true;
            table.push_back(row);
            continue;
        }
        row.metric_mean = opt->summary.test_metric_mean;
        row.metric_std = opt->summary.test_metric_std;
        row.train_loss_mean = opt->summary.train_loss_mean;
        row.train_loss_std = opt->summary.train_loss_std;
        row.optimal_lr = opt->eps_f > 0.0 ? opt->eps_f : opt->lr;
        row.errorbar_lo = have_bar ? lo : row.optimal_lr;
        row.errorbar_hi = have_bar ? hi : row.optimal_lr;
        table.push_back(row);

        metric_vs_b << key.optimizer << ',' << key.objective << ',' << key.batch_size << ','
                    << fmt_full(opt->summary.test_metric_mean) << ','
                    << fmt_full(opt->summary.test_metric_std) << ','
                    << fmt_full(opt->summary.train_loss_mean) << ','
                    << fmt_full(opt->summary.train_loss_std) << "\n";
        optlr_vs_b << key.optimizer << ',' << key.objective << ',' << key.batch_size << ','
                   << fmt_full(row.optimal_lr) << ',' << fmt_full(row.errorbar_lo) << ','
                   << fmt_full(row.errorbar_hi) << ',' << (opt->boundary_flag ? 1 : 0)
                   << "\n";
        lr_vs_budget << key.optimizer << ',' << key.objective << ',' << key.budget_units
                     << ',' << fmt_full(row.optimal_lr) << ',' << fmt_full(row.errorbar_lo)
                     << ',' << fmt_full(row.errorbar_hi) << "\n";
    }

    auto write_file = [&](const std::string& name, const std::string& content) {
        std::ofstream out(results_dir + "/" + name);
        if (!out) throw Error("cannot write " + results_dir + "/" + name);
        out << content;
    };
    write_file("metric_vs_b.csv", metric_vs_b.str());
    write_file("optlr_vs_b.csv", optlr_vs_b.str());
    write_file("lr_vs_budget.csv", lr_vs_budget.str());

    return render_report(table);
}

} // namespace sgdlab
