#include "sgdlab/run.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "sgdlab/error.hpp"
#include "sgdlab/optimizer.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

using nlohmann::json;

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kDivergenceFactor = 1e6;

// Stream-derivation keys.
constexpr std::uint64_t kKeyDataset = 0xd5;
constexpr std::uint64_t kKeyCenters = 0xce;
constexpr std::uint64_t kKeyInit = 0x17;
constexpr std::uint64_t kKeySampler = 0x5a;
} // namespace

const char* to_string(OptimizerKind k) {
    return k == OptimizerKind::Sgd ? "sgd" : "momentum";
}

std::shared_ptr<const ExperimentContext> ExperimentContext::create(const ModelSpec& spec,
                                                                   std::uint64_t base_seed) {
    auto ctx = std::make_shared<ExperimentContext>();
    ctx->spec_ = spec;
    if (spec.kind == ModelSpec::Kind::Quadratic) {
        ctx->quad_ = std::make_shared<const QuadraticModel>(QuadraticModel::diagonal(
            spec.quadratic.eigenvalues, spec.quadratic.n_examples,
            spec.quadratic.center_std, stream_seed(base_seed, {kKeyCenters})));
    } else {
        ctx->mlp_ = std::make_shared<const MlpModel>(spec.mlp.mlp);
        DatasetParams dp = spec.mlp.data;
        dp.seed = stream_seed(base_seed, {kKeyDataset});
        require(dp.input_dim == spec.mlp.mlp.input_dim, "ModelSpec: input_dim mismatch");
        require(dp.classes == spec.mlp.mlp.classes, "ModelSpec: classes mismatch");
        ctx->data_ = std::make_shared<const SyntheticDataset>(SyntheticDataset::generate(dp));
    }
    return ctx;
}

int ExperimentContext::train_size() const {
    return is_mlp() ? data_->n_train() : quad_->n_examples();
}

LRSchedule build_schedule(const RunParams& params, std::int64_t steps_per_epoch) {
    const double m = params.optimizer == OptimizerKind::Momentum ? params.m : 0.0;
    const double eps0_raw = params.eps0_eff * (1.0 - m);
    if (params.eps_f > 0.0) {
        const double eps_f_raw = params.eps_f * (1.0 - m);
        if (params.granularity) {
            return LRSchedule::decoupled(eps0_raw, eps_f_raw, params.budget, steps_per_epoch,
                                         *params.granularity);
        }
        return LRSchedule::decoupled(eps0_raw, eps_f_raw, params.budget, steps_per_epoch);
    }
    if (params.granularity) {
        return LRSchedule::coupled(eps0_raw, params.gamma, params.budget, steps_per_epoch,
                                   *params.granularity);
    }
    return LRSchedule::coupled(eps0_raw, params.gamma, params.budget, steps_per_epoch);
}

namespace {

struct Driver {
    const ExperimentContext& ctx;
    const RunParams& params;
    RunRecord rec;

    // MLP state
    MlpModel::BnState bn;
    MlpModel::Workspace ws;
    std::vector<int> label_buf;

    double eval_train_loss(const Vec& omega) {
        if (!ctx.is_mlp()) return ctx.quadratic().full_loss(omega);
        const auto& ds = ctx.dataset();
        return ctx.mlp()
            .evaluate(omega, bn, ds.train_inputs().data(), ds.train_labels().data(),
                      ds.n_train(), ws)
            .loss;
    }

    CurvePoint curve_point(std::int64_t step, double lr, const Vec& omega) {
        CurvePoint cp;
        cp.step = step;
        cp.lr = lr;
        if (!ctx.is_mlp()) {
            cp.train_loss = ctx.quadratic().full_loss(omega);
            cp.test_metric = kNan;
            return cp;
        }
        const auto& ds = ctx.dataset();
        const int train_n = std::min(params.curve_eval_size, ds.n_train());
        cp.train_loss = ctx.mlp()
                            .evaluate(omega, bn, ds.train_inputs().data(),
                                      ds.train_labels().data(), train_n, ws)
                            .loss;
        if (ds.n_test() > 0) {
            const int test_n = std::min(params.curve_eval_size, ds.n_test());
            cp.test_metric = ctx.mlp()
                                 .evaluate(omega, bn, ds.test_inputs().data(),
                                           ds.test_labels().data(), test_n, ws)
                                 .accuracy;
        } else {
            cp.test_metric = kNan;
        }
        return cp;
    }
};

} // namespace

RunRecord run_training(const ExperimentContext& ctx, const RunParams& params,
                       std::uint64_t run_seed) {
    const int n_train = ctx.train_size();
    require(params.batch_size >= 1 && params.batch_size <= n_train,
            "run_training: batch size must be in [1, N]");
    const std::int64_t steps_per_epoch =
        (n_train + params.batch_size - 1) / params.batch_size;
    const LRSchedule sched = build_schedule(params, steps_per_epoch);
    const double m = params.optimizer == OptimizerKind::Momentum ? params.m : 0.0;

    Driver drv{ctx, params, {}, {}, {}, {}};
    RunRecord& rec = drv.rec;
    rec.optimizer = to_string(params.optimizer);
    rec.m = m;
    rec.eps0_eff = params.eps0_eff;
    rec.gamma = sched.gamma();
    rec.eps_f = params.eps_f;
    rec.budget_kind = params.budget.kind == Budget::Kind::ConstantEpoch ? "constant_epoch"
                      : params.budget.kind == Budget::Kind::ConstantStep ? "constant_step"
                                                                         : "unlimited";
    rec.budget_units = params.budget.kind == Budget::Kind::Unlimited
                           ? params.budget.max_steps
                           : params.budget.units;
    rec.batch_size = params.batch_size;
    rec.run_seed = run_seed;
    rec.final_test_accuracy = kNan;
    rec.final_test_mse = kNan;

    // Initial parameters.
    Vec omega;
    if (ctx.is_mlp()) {
        Rng init_rng(stream_seed(run_seed, {kKeyInit}));
        omega = ctx.mlp().init_params(init_rng);
        drv.bn = ctx.mlp().init_bn_state();
    } else {
        omega.assign(static_cast<std::size_t>(ctx.quadratic().dim()),
                     ctx.spec().quadratic.start_scale);
    }

    OptimizerState state = OptimizerState::make(std::move(omega), m);
    BatchSampler sampler(n_train, params.batch_size, params.sampler,
                         stream_seed(run_seed, {kKeySampler}));

    const std::int64_t total_steps = sched.total_steps();
    const auto drop_vec = sched.drop_steps();
    std::unordered_set<std::int64_t> drops(drop_vec.begin(), drop_vec.end());

    const double initial_loss = drv.eval_train_loss(state.omega);
    const double blowup = kDivergenceFactor * std::max(std::fabs(initial_loss), 1.0);

    Vec grad;
    bool diverged = false;
    try {
        for (std::int64_t t = 0; t < total_steps; ++t) {
            if (t > 0 && drops.count(t)) {
                rec.curve.push_back(drv.curve_point(t, sched.lr_at(t), state.omega));
            }
            const auto& batch = sampler.next();
            double step_loss;
            if (ctx.is_mlp()) {
                MlpModel::Batch b = ctx.mlp().gather(
                    ctx.dataset().train_inputs().data(), ctx.dataset().train_labels().data(),
                    batch, drv.label_buf, drv.ws);
                step_loss = ctx.mlp().loss_and_grad(state.omega, drv.bn, b,
                                                    MlpModel::Mode::Train, grad, drv.ws);
            } else {
                ctx.quadratic().minibatch_grad(state.omega, batch, grad);
                step_loss = ctx.quadratic().full_loss(state.omega);
            }
            if (!std::isfinite(step_loss) || step_loss > blowup) {
                throw DivergenceSignal(t, "run_training: loss blow-up");
            }
            const double eps = sched.lr_at(t);
            momentum_step(state, grad, eps);

            if (params.budget.kind == Budget::Kind::Unlimited && ctx.is_mlp() &&
                (t + 1) % steps_per_epoch == 0) {
                const auto& ds = ctx.dataset();
                const auto metrics =
                    ctx.mlp().evaluate(state.omega, drv.bn, ds.test_inputs().data(),
                                       ds.test_labels().data(), ds.n_test(), drv.ws);
                if (metrics.accuracy >= params.budget.target_metric) break;
            }
        }
    } catch (const DivergenceSignal& sig) {
        diverged = true;
        rec.diverged_step = sig.step();
    } catch (const NumericsError&) {
        diverged = true;
        rec.diverged_step = state.step;
    }

    if (diverged) {
        rec.completed = false;
        return rec;
    }

    rec.completed = true;
    rec.curve.push_back(drv.curve_point(state.step, sched.lr_at(std::max<std::int64_t>(
                                                        state.step - 1, 0)),
                                        state.omega));
    rec.final_train_loss = drv.eval_train_loss(state.omega);
    if (ctx.is_mlp() && ctx.dataset().n_test() > 0) {
        const auto& ds = ctx.dataset();
        const auto metrics = ctx.mlp().evaluate(state.omega, drv.bn, ds.test_inputs().data(),
                                                ds.test_labels().data(), ds.n_test(), drv.ws);
        rec.final_test_accuracy = metrics.accuracy;
        rec.final_test_mse = metrics.mse;
    }
    return rec;
}

std::string RunRecord::to_json_line() const {
    json j;
    j["optimizer"] = optimizer;
    j["m"] = m;
    j["eps0_eff"] = eps0_eff;
    j["gamma"] = gamma;
    j["eps_f"] = eps_f;
    j["budget_kind"] = budget_kind;
    j["budget_units"] = budget_units;
    j["batch_size"] = batch_size;
    j["run_seed"] = run_seed;
    j["completed"] = completed;
    if (!completed) j["diverged_step"] = diverged_step;
    auto num = [](double v) -> json {
        if (std::isnan(v)) return nullptr;
        return v;
    };
    j["final_train_loss"] = num(final_train_loss);
    j["final_test_accuracy"] = num(final_test_accuracy);
    j["final_test_mse"] = num(final_test_mse);
    json curve_json = json::array();
    for (const auto& cp : curve) {
        curve_json.push_back({{"step", cp.step},
                              {"lr", cp.lr},
                              {"train_loss", num(cp.train_loss)},
                              {"test_metric", num(cp.test_metric)}});
    }
    j["curve"] = std::move(curve_json);
    return j.dump();
}

RunRecord RunRecord::from_json_line(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError("run record: invalid JSON line");
    RunRecord r;
    auto num = [](const json& v) {
        return v.is_null() ? kNan : v.get<double>();
    };
    try {
        r.optimizer = j.at("optimizer").get<std::string>();
        r.m = j.at("m").get<double>();
        r.eps0_eff = j.at("eps0_eff").get<double>();
        r.gamma = j.at("gamma").get<double>();
        r.eps_f = j.at("eps_f").get<double>();
        r.budget_kind = j.at("budget_kind").get<std::string>();
        r.budget_units = j.at("budget_units").get<std::int64_t>();
        r.batch_size = j.at("batch_size").get<int>();
        r.run_seed = j.at("run_seed").get<std::uint64_t>();
        r.completed = j.at("completed").get<bool>();
        if (j.contains("diverged_step")) r.diverged_step = j.at("diverged_step").get<std::int64_t>();
        r.final_train_loss = num(j.at("final_train_loss"));
        r.final_test_accuracy = num(j.at("final_test_accuracy"));
        r.final_test_mse = num(j.at("final_test_mse"));
        for (const auto& cj : j.at("curve")) {
            CurvePoint cp;
            cp.step = cj.at("step").get<std::int64_t>();
            cp.lr = cj.at("lr").get<double>();
            cp.train_loss = num(cj.at("train_loss"));
            cp.test_metric = num(cj.at("test_metric"));
            r.curve.push_back(cp);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run record: ") + e.what());
    }
    return r;
}

} // namespace sgdlab
