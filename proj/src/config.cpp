#include "sgdlab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sgdlab/error.hpp"

namespace sgdlab {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
    if (!obj.is_object()) throw ConfigError(context + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError(context + ": unknown key '" + it.key() + "'");
    }
}

const json& need(const json& obj, const char* key, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(context + ": missing required key '" + key + "'");
    return *it;
}

Budget parse_budget(const json& j, const std::string& context) {
    check_keys(j, {"kind", "units", "target_metric", "max_steps"}, context);
    const std::string kind = need(j, "kind", context).get<std::string>();
    if (kind == "constant_epoch") {
        return Budget::constant_epoch(need(j, "units", context).get<std::int64_t>());
    }
    if (kind == "constant_step") {
        return Budget::constant_step(need(j, "units", context).get<std::int64_t>());
    }
    if (kind == "unlimited") {
        return Budget::unlimited(need(j, "target_metric", context).get<double>(),
                                 need(j, "max_steps", context).get<std::int64_t>());
    }
    throw ConfigError(context + ": unknown budget kind '" + kind + "'");
}

ModelSpec parse_model(const json& j, const std::string& context) {
    ModelSpec spec;
    const std::string type = need(j, "type", context).get<std::string>();
    if (type == "quadratic") {
        check_keys(j, {"type", "eigenvalues", "n_examples", "center_std", "start_scale"},
                   context);
        spec.kind = ModelSpec::Kind::Quadratic;
        QuadraticSpec& q = spec.quadratic;
        q.eigenvalues = need(j, "eigenvalues", context).get<Vec>();
        q.n_examples = need(j, "n_examples", context).get<int>();
        q.center_std = need(j, "center_std", context).get<double>();
        if (j.contains("start_scale")) q.start_scale = j["start_scale"].get<double>();
        return spec;
    }
    if (type == "mlp") {
        check_keys(j,
                   {"type", "input_dim", "hidden", "classes", "ghost_bn", "ghost_batch_size",
                    "l2", "n_train", "n_test", "label_noise"},
                   context);
        spec.kind = ModelSpec::Kind::Mlp;
        MlpSpec& m = spec.mlp;
        m.mlp.input_dim = need(j, "input_dim", context).get<int>();
        m.mlp.hidden = need(j, "hidden", context).get<std::vector<int>>();
        m.mlp.classes = need(j, "classes", context).get<int>();
        if (j.contains("ghost_bn")) m.mlp.ghost_bn = j["ghost_bn"].get<bool>();
        if (j.contains("ghost_batch_size")) {
            m.mlp.ghost_batch_size = j["ghost_batch_size"].get<int>();
        }
        if (j.contains("l2")) m.mlp.l2_coeff = j["l2"].get<double>();
        m.data.input_dim = m.mlp.input_dim;
        m.data.classes = m.mlp.classes;
        m.data.n_train = need(j, "n_train", context).get<int>();
        m.data.n_test = need(j, "n_test", context).get<int>();
        if (j.contains("label_noise")) m.data.label_noise = j["label_noise"].get<double>();
        return spec;
    }
    throw ConfigError(context + ": unknown model type '" + type + "'");
}

std::vector<double> parse_lr_grid(const json& j, const std::string& context) {
    if (j.is_array()) return j.get<std::vector<double>>();
    check_keys(j, {"min", "max", "factor"}, context);
    const double lo = need(j, "min", context).get<double>();
    const double hi = need(j, "max", context).get<double>();
    const double factor = j.value("factor", 2.0);
    require(lo > 0.0 && hi >= lo, context + ": need 0 < min <= max");
    require(factor > 1.0, context + ": factor must be > 1");
    std::vector<double> grid;
    for (double lr = lo; lr <= hi * (1.0 + 1e-12); lr *= factor) grid.push_back(lr);
    return grid;
}

json parse_json_text(const std::string& text, const std::string& context) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError(context + ": invalid JSON");
    return j;
}

} // namespace

std::size_t SweepJob::planned_runs() const {
    const std::size_t n = static_cast<std::size_t>(spec.runs_per_point);
    switch (scan) {
        case Scan::Grid:
            return spec.lr_grid.size() * spec.batch_sizes.size() * n;
        case Scan::Regime:
            return 2 * spec.lr_grid.size() * spec.batch_sizes.size() * n;
        case Scan::Budget:
            return spec.lr_grid.size() * epoch_budgets.size() * n;
        case Scan::Endpoint: {
            std::size_t cells = 0;
            for (double e0 : eps0_grid) {
                for (double ef : epsf_grid) {
                    if (ef <= e0) ++cells;
                }
            }
            return cells * n;
        }
    }
    return 0;
}

SweepJob parse_sweep_config(const std::string& json_text) {
    const std::string ctx = "sweep config";
    json j = parse_json_text(json_text, ctx);
    check_keys(j,
               {"version", "kind", "scan", "model", "lr_grid", "batch_sizes", "budget",
                "runs_per_point", "keep_best", "objective", "optimizer", "momentum", "gamma",
                "sampler", "granularity", "errorbar_std", "seed", "curve_eval_size",
                "epoch_budgets", "eps0_grid", "epsf_grid", "jobs"},
               ctx);
    if (need(j, "version", ctx).get<int>() != 1) {
        throw ConfigError(ctx + ": unsupported version (expected 1)");
    }
    if (need(j, "kind", ctx).get<std::string>() != "sweep") {
        throw ConfigError(ctx + ": kind must be 'sweep'");
    }

    SweepJob job;
    const std::string scan = j.value("scan", "grid");
    if (scan == "grid") {
        job.scan = SweepJob::Scan::Grid;
    } else if (scan == "regime") {
        job.scan = SweepJob::Scan::Regime;
    } else if (scan == "budget") {
        job.scan = SweepJob::Scan::Budget;
    } else if (scan == "endpoint") {
        job.scan = SweepJob::Scan::Endpoint;
    } else {
        throw ConfigError(ctx + ": unknown scan '" + scan + "'");
    }

    SweepSpec& spec = job.spec;
    spec.model = parse_model(need(j, "model", ctx), ctx + ".model");
    if (job.scan != SweepJob::Scan::Endpoint) {
        spec.lr_grid = parse_lr_grid(need(j, "lr_grid", ctx), ctx + ".lr_grid");
    } else if (j.contains("lr_grid")) {
        throw ConfigError(ctx + ": endpoint scans use eps0_grid/epsf_grid, not lr_grid");
    }
    spec.batch_sizes = need(j, "batch_sizes", ctx).get<std::vector<int>>();
    if (job.scan != SweepJob::Scan::Budget) {
        spec.budget = parse_budget(need(j, "budget", ctx), ctx + ".budget");
    } else if (j.contains("budget")) {
        throw ConfigError(ctx + ": budget scans use epoch_budgets, not budget");
    }
    if (j.contains("runs_per_point")) spec.runs_per_point = j["runs_per_point"].get<int>();
    if (j.contains("keep_best")) spec.keep_best = j["keep_best"].get<int>();
    if (j.contains("objective")) {
        spec.objective = objective_from_string(j["objective"].get<std::string>());
    } else if (spec.model.kind == ModelSpec::Kind::Mlp) {
        spec.objective = Objective::MaxTestAccuracy;
    }
    if (j.contains("optimizer")) {
        const std::string o = j["optimizer"].get<std::string>();
        if (o == "sgd") {
            spec.optimizer = OptimizerKind::Sgd;
        } else if (o == "momentum") {
            spec.optimizer = OptimizerKind::Momentum;
        } else {
            throw ConfigError(ctx + ": unknown optimizer '" + o + "'");
        }
    }
    if (j.contains("momentum")) spec.m = j["momentum"].get<double>();
    if (j.contains("gamma")) spec.gamma = j["gamma"].get<double>();
    if (j.contains("sampler")) {
        const std::string s = j["sampler"].get<std::string>();
        if (s == "per_update") {
            spec.sampler = SamplerMode::PerUpdateRandomSubset;
        } else if (s == "epoch_shuffle") {
            spec.sampler = SamplerMode::EpochShuffle;
        } else {
            throw ConfigError(ctx + ": unknown sampler '" + s + "'");
        }
    }
    if (j.contains("granularity")) {
        const std::string g = j["granularity"].get<std::string>();
        if (g == "epoch") {
            spec.granularity = Granularity::Epoch;
        } else if (g == "step") {
            spec.granularity = Granularity::Step;
        } else {
            throw ConfigError(ctx + ": unknown granularity '" + g + "'");
        }
    }
    if (j.contains("errorbar_std")) {
        const std::string e = j["errorbar_std"].get<std::string>();
        if (e == "optimal") {
            spec.errorbar_rule = ErrorBarRule::OptimalPointStd;
        } else if (e == "per_point") {
            spec.errorbar_rule = ErrorBarRule::PerPointStd;
        } else {
            throw ConfigError(ctx + ": unknown errorbar_std '" + e + "'");
        }
    }
    if (j.contains("seed")) spec.base_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("curve_eval_size")) spec.curve_eval_size = j["curve_eval_size"].get<int>();
    if (j.contains("jobs")) spec.jobs = j["jobs"].get<int>();

    if (job.scan == SweepJob::Scan::Budget) {
        job.epoch_budgets =
            need(j, "epoch_budgets", ctx).get<std::vector<std::int64_t>>();
        // validate() needs some budget; the scan substitutes per-row budgets.
        spec.budget = Budget::constant_epoch(job.epoch_budgets.front());
    }
    if (job.scan == SweepJob::Scan::Endpoint) {
        job.eps0_grid = need(j, "eps0_grid", ctx).get<std::vector<double>>();
        job.epsf_grid = need(j, "epsf_grid", ctx).get<std::vector<double>>();
        spec.lr_grid = job.eps0_grid; // for validate()
    }

    spec.validate();
    return job;
}

SweepJob parse_sweep_config_file(const std::string& path) {
    return parse_sweep_config(read_text_file(path));
}

LRSchedule parse_schedule_config(const std::string& json_text) {
    const std::string ctx = "schedule config";
    json j = parse_json_text(json_text, ctx);
    check_keys(j,
               {"version", "kind", "eps0", "gamma", "eps_f", "budget", "steps_per_epoch",
                "granularity"},
               ctx);
    if (need(j, "version", ctx).get<int>() != 1) {
        throw ConfigError(ctx + ": unsupported version (expected 1)");
    }
    if (need(j, "kind", ctx).get<std::string>() != "schedule") {
        throw ConfigError(ctx + ": kind must be 'schedule'");
    }
    json inner = j;
    inner.erase("version");
    inner.erase("kind");
    if (inner.contains("gamma") && inner.contains("eps_f")) {
        throw ConfigError(ctx + ": give either gamma or eps_f, not both");
    }
    try {
        return LRSchedule::from_json(inner.dump());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
}

LRSchedule parse_schedule_config_file(const std::string& path) {
    return parse_schedule_config(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace sgdlab
