#include "sgdlab/checks.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "sgdlab/error.hpp"
#include "sgdlab/noise.hpp"
#include "sgdlab/optimizer.hpp"
#include "sgdlab/sampler.hpp"
#include "sgdlab/sde.hpp"

namespace sgdlab {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MomentAccumulator {
    Vec sum, sumsq;
    double count = 0.0;

    explicit MomentAccumulator(int dim)
        : sum(static_cast<std::size_t>(dim), 0.0), sumsq(static_cast<std::size_t>(dim), 0.0) {}

    void add(const Vec& x) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            sum[i] += x[i];
            sumsq[i] += x[i] * x[i];
        }
        count += 1.0;
    }

    double mean(std::size_t i) const { return sum[i] / count; }
    double variance(std::size_t i) const {
        const double m = mean(i);
        return sumsq[i] / count - m * m;
    }
};

double max_abs_ratio_gap(const Vec& a, const Vec& b) {
    double gap = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(b[i] > 0.0) || !std::isfinite(a[i])) return kInf;
        gap = std::max(gap, std::fabs(a[i] / b[i] - 1.0));
    }
    return gap;
}

CheckStatus classify(bool in_regime, bool met) {
    if (in_regime) return met ? CheckStatus::Pass : CheckStatus::Fail;
    return met ? CheckStatus::UnexpectedPass : CheckStatus::ExpectedFail;
}

/// Pooled per-coordinate stationary variance of real minibatch SGD.
/// Divergence yields infinite variances.
Vec sgd_stationary_variance(const QuadraticModel& model, int batch_size, double eps,
                            int steps, int burnin, int seeds, std::uint64_t seed) {
    const int d = model.dim();
    MomentAccumulator acc(d);
    Vec grad;
    for (int s = 0; s < seeds; ++s) {
        BatchSampler sampler(model.n_examples(), batch_size,
                             SamplerMode::PerUpdateRandomSubset,
                             stream_seed(seed, {0x5a3du, static_cast<std::uint64_t>(s)}));
        OptimizerState st = OptimizerState::make(zeros(static_cast<std::size_t>(d)), 0.0);
        try {
            for (int t = 0; t < steps; ++t) {
                model.minibatch_grad(st.omega, sampler.next(), grad);
                sgd_step(st, grad, eps);
                if (t >= burnin) acc.add(st.omega);
            }
        } catch (const DivergenceSignal&) {
            return Vec(static_cast<std::size_t>(d), kInf);
        }
    }
    Vec v(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = acc.variance(static_cast<std::size_t>(i));
    return v;
}

Vec sde_stationary_variance(const QuadraticModel& model, double eps, double temperature,
                            int steps, int burnin, int seeds, std::uint64_t seed) {
    const int d = model.dim();
    MomentAccumulator acc(d);
    const NoiseModel noise = analytic_noise_model(model);
    for (int s = 0; s < seeds; ++s) {
        SdeSimulator sim(model, eps, temperature, noise);
        Rng rng(stream_seed(seed, {0xef12u, static_cast<std::uint64_t>(s)}));
        Vec omega = zeros(static_cast<std::size_t>(d));
        try {
            for (int t = 0; t < steps; ++t) {
                sim.step(omega, rng);
                if (t >= burnin) acc.add(omega);
            }
        } catch (const DivergenceSignal&) {
            return Vec(static_cast<std::size_t>(d), kInf);
        }
    }
    Vec v(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = acc.variance(static_cast<std::size_t>(i));
    return v;
}

} // namespace

const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::ExpectedFail: return "expected_fail";
        case CheckStatus::UnexpectedPass: return "unexpected_pass";
    }
    return "?";
}

std::string CheckReport::to_json() const {
    json j;
    j["check"] = name;
    j["status"] = sgdlab::to_string(status);
    j["in_regime"] = in_regime;
    j["tolerances_met"] = tolerances_met;
    j["stats"] = json::object();
    for (const auto& [k, v] : stats) {
        if (std::isfinite(v)) {
            j["stats"][k] = v;
        } else {
            j["stats"][k] = v > 0 ? "inf" : "-inf";
        }
    }
    if (!note.empty()) j["note"] = note;
    return j.dump(2);
}

CheckReport linear_scaling_check(const QuadraticModel& loss, const LinScalingParams& p,
                                 std::uint64_t seed, const CheckTolerances& tol) {
    require(p.n >= 1, "linear_scaling_check: n must be >= 1");
    require(p.seeds >= 2, "linear_scaling_check: seeds must be >= 2");
    require(p.eps > 0.0, "linear_scaling_check: eps must be positive");
    require(p.temperature >= 0.0, "linear_scaling_check: temperature must be >= 0");

    const double eps_crit = loss.critical_lr();
    const double ratio = p.n * p.eps / eps_crit;
    const bool in_regime = ratio <= tol.regime_fraction + 1e-12;
    if (!in_regime && p.enforce_regime) {
        std::ostringstream oss;
        oss << "linear_scaling_check: n*eps = " << p.n * p.eps << " is " << ratio
            << " * eps_crit, beyond the allowed " << tol.regime_fraction << " * eps_crit";
        throw Error(oss.str());
    }

    const int d = loss.dim();
    Vec omega0 = p.omega0.empty() ? zeros(static_cast<std::size_t>(d)) : p.omega0;
    require(static_cast<int>(omega0.size()) == d, "linear_scaling_check: omega0 dim mismatch");

    const NoiseModel noise = analytic_noise_model(loss);
    SdeSimulator fine(loss, p.eps, p.temperature, noise);
    SdeSimulator coarse(loss, p.n * p.eps, p.temperature, noise);

    MomentAccumulator acc_a(d), acc_b(d);
    for (int s = 0; s < p.seeds; ++s) {
        const std::uint64_t sk = stream_seed(seed, {0x11c5u, static_cast<std::uint64_t>(s)});
        // Both arms replay the same stream; with n == 1 the endpoints are
        // bit-identical by construction.
        Rng rng_a(sk);
        Vec wa = omega0;
        for (int t = 0; t < p.n; ++t) fine.step(wa, rng_a);
        acc_a.add(wa);

        Rng rng_b(sk);
        Vec wb = omega0;
        coarse.step(wb, rng_b);
        acc_b.add(wb);
    }

    CheckReport rep;
    rep.name = "lin-scaling";
    rep.in_regime = in_regime;

    double worst_mean_se = 0.0;
    double worst_ratio_gap = 0.0;
    double var_ratio_0 = 0.0;
    for (int i = 0; i < d; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i);
        const double va = acc_a.variance(idx);
        const double vb = acc_b.variance(idx);
        const double se = std::sqrt(va / p.seeds + vb / p.seeds);
        const double mean_se =
            se > 0.0 ? std::fabs(acc_a.mean(idx) - acc_b.mean(idx)) / se : 0.0;
        worst_mean_se = std::max(worst_mean_se, mean_se);
        const double gap = vb > 0.0 ? std::fabs(va / vb - 1.0) : (va > 0.0 ? kInf : 0.0);
        worst_ratio_gap = std::max(worst_ratio_gap, gap);
        if (i == 0) var_ratio_0 = vb > 0.0 ? va / vb : 1.0;
    }
    rep.stats["n_eps_over_crit"] = ratio;
    rep.stats["mean_diff_se"] = worst_mean_se;
    rep.stats["var_ratio"] = var_ratio_0;
    rep.stats["var_ratio_gap"] = worst_ratio_gap;
    rep.stats["seeds"] = p.seeds;
    rep.tolerances_met =
        worst_mean_se <= tol.mean_tol_se && worst_ratio_gap <= tol.var_ratio_tol;
    rep.status = classify(in_regime, rep.tolerances_met);
    return rep;
}

CheckReport minibatch_vs_sde_check(const QuadraticModel& model, const SgdVsSdeParams& p,
                                   std::uint64_t seed, const CheckTolerances& tol) {
    const double eps_crit = model.critical_lr();
    const double eps = p.eps > 0.0 ? p.eps : tol.pair_regime_fraction * eps_crit;
    require(p.batch_size >= 1, "minibatch_vs_sde_check: batch size must be >= 1");
    require(model.n_examples() >= 64 * p.batch_size,
            "minibatch_vs_sde_check: need N >= 64 B");
    require(2 * p.batch_size <= model.n_examples(),
            "minibatch_vs_sde_check: need 2B <= N for the doubled run");

    const bool in_regime = eps <= tol.regime_fraction * eps_crit + 1e-12;
    if (!in_regime && p.enforce_regime) {
        std::ostringstream oss;
        oss << "minibatch_vs_sde_check: eps = " << eps << " exceeds "
            << tol.regime_fraction << " * eps_crit = " << tol.regime_fraction * eps_crit;
        throw Error(oss.str());
    }

    const double temp = temperature(eps, p.batch_size);
    const Vec v_sgd = sgd_stationary_variance(model, p.batch_size, eps, p.steps, p.burnin,
                                              p.seeds, stream_seed(seed, {1}));
    const Vec v_sde = sde_stationary_variance(model, eps, temp, p.steps, p.burnin, p.seeds,
                                              stream_seed(seed, {2}));
    const Vec v_pair = sgd_stationary_variance(model, 2 * p.batch_size, 2.0 * eps, p.steps,
                                               p.burnin, p.seeds, stream_seed(seed, {3}));

    CheckReport rep;
    rep.name = "sde-vs-sgd";
    rep.in_regime = in_regime;
    rep.stats["eps"] = eps;
    rep.stats["eps_over_crit"] = eps / eps_crit;
    rep.stats["temperature"] = temp;

    const double sgd_sde_gap = max_abs_ratio_gap(v_sgd, v_sde);
    const double pair_gap = max_abs_ratio_gap(v_pair, v_sgd);
    // Temperature rescaling is only expected to hold (to 10%) deeper inside
    // the regime than the SGD-vs-SDE comparison itself.
    const bool doubling_binds = eps <= tol.pair_regime_fraction * eps_crit + 1e-12;
    rep.stats["sgd_var"] = v_sgd[0];
    rep.stats["sde_var"] = v_sde[0];
    rep.stats["doubled_var"] = v_pair[0];
    rep.stats["sgd_vs_sde_gap"] = sgd_sde_gap;
    rep.stats["doubling_gap"] = pair_gap;
    rep.stats["doubling_checked"] = doubling_binds ? 1.0 : 0.0;

    // Analytic fixed point per eigendirection, available for diagonal models.
    bool analytic_ok = true;
    if (model.eigen()) {
        const SymMatrix f = model.noise_covariance_analytic();
        double worst = 0.0;
        for (int i = 0; i < model.dim(); ++i) {
            const double lambda = model.eigen()->lambda[static_cast<std::size_t>(i)];
            if (!(lambda > 0.0)) continue;
            if (eps * lambda >= 2.0) {
                worst = kInf;
                break;
            }
            const double pred = ou_stationary_variance(lambda, f(i, i), eps, temp);
            const double gap =
                pred > 0.0 ? std::fabs(v_sgd[static_cast<std::size_t>(i)] / pred - 1.0) : 0.0;
            worst = std::max(worst, gap);
        }
        rep.stats["sgd_vs_analytic_gap"] = worst;
        analytic_ok = worst <= tol.sgd_sde_var_tol;
    }

    rep.tolerances_met = sgd_sde_gap <= tol.sgd_sde_var_tol && analytic_ok &&
                         (!doubling_binds || pair_gap <= tol.pair_var_tol);
    if (!in_regime && !rep.tolerances_met && pair_gap > tol.boundary_gap_min) {
        rep.note = "regime boundary: temperature rescaling no longer preserves the "
                   "stationary distribution";
    }
    rep.status = classify(in_regime, rep.tolerances_met);
    return rep;
}

CheckReport temperature_invariance_check(const QuadraticModel& model,
                                         const TemperaturePairParams& p,
                                         std::uint64_t seed, const CheckTolerances& tol) {
    const double eps_crit = model.critical_lr();
    const double eps = p.eps > 0.0 ? p.eps : tol.pair_regime_fraction * eps_crit;
    require(2 * p.batch_size <= model.n_examples(),
            "temperature_invariance_check: need 2B <= N");

    const bool in_regime = eps <= tol.pair_regime_fraction * eps_crit + 1e-12;
    if (!in_regime && p.enforce_regime) {
        throw Error("temperature_invariance_check: eps beyond the small-step regime");
    }

    const Vec v_base = sgd_stationary_variance(model, p.batch_size, eps, p.steps, p.burnin,
                                               p.seeds, stream_seed(seed, {11}));
    const Vec v_doubled = sgd_stationary_variance(model, 2 * p.batch_size, 2.0 * eps,
                                                  p.steps, p.burnin, p.seeds,
                                                  stream_seed(seed, {12}));

    CheckReport rep;
    rep.name = "temperature-invariance";
    rep.in_regime = in_regime;
    const double gap = max_abs_ratio_gap(v_doubled, v_base);
    rep.stats["eps"] = eps;
    rep.stats["eps_over_crit"] = eps / eps_crit;
    rep.stats["base_var"] = v_base[0];
    rep.stats["doubled_var"] = v_doubled[0];
    rep.stats["gap"] = gap;
    rep.tolerances_met = gap <= tol.pair_var_tol;
    if (!in_regime && gap > tol.boundary_gap_min) {
        rep.note = "regime boundary gap exceeds the documented threshold";
    }
    rep.status = classify(in_regime, rep.tolerances_met);
    return rep;
}

CheckReport eps_crit_check(const EpsCritParams& p, const CheckTolerances&) {
    QuadraticModel model = QuadraticModel::diagonal({0.5, 2.0}, 2, 0.0, 1);
    const double eps_crit = model.critical_lr();

    CheckReport rep;
    rep.name = "eps-crit";
    rep.in_regime = true;
    rep.stats["eps_crit"] = eps_crit;

    // Just below the critical rate: loss must fall monotonically after step 1.
    bool monotone = true;
    {
        OptimizerState st = OptimizerState::make({3.0, 3.0}, 0.0);
        Vec grad;
        double prev = kInf;
        for (int t = 0; t < p.converge_steps; ++t) {
            model.full_grad(st.omega, grad);
            sgd_step(st, grad, (1.0 - p.margin) * eps_crit);
            const double loss = model.full_loss(st.omega);
            if (t >= 1 && loss >= prev) {
                monotone = false;
                break;
            }
            prev = loss;
        }
        rep.stats["final_loss_below"] = model.full_loss(st.omega);
    }

    // Just above: the divergence signal must fire within max_steps.
    bool diverged = false;
    {
        OptimizerState st = OptimizerState::make({3.0, 3.0}, 0.0);
        Vec grad;
        const double init_loss = model.full_loss(st.omega);
        try {
            for (int t = 0; t < p.max_steps; ++t) {
                model.full_grad(st.omega, grad);
                sgd_step(st, grad, (1.0 + p.margin) * eps_crit);
                if (model.full_loss(st.omega) > 1e6 * init_loss) {
                    diverged = true;
                    rep.stats["diverged_at_step"] = st.step;
                    break;
                }
            }
        } catch (const DivergenceSignal& sig) {
            diverged = true;
            rep.stats["diverged_at_step"] = static_cast<double>(sig.step());
        }
    }

    rep.stats["monotone_below"] = monotone ? 1.0 : 0.0;
    rep.stats["diverged_above"] = diverged ? 1.0 : 0.0;
    rep.tolerances_met = monotone && diverged;
    rep.status = classify(true, rep.tolerances_met);
    return rep;
}

CheckReport momentum_equiv_check(const QuadraticModel& model, const MomentumEquivParams& p,
                                 std::uint64_t seed) {
    const double eps_crit = model.critical_lr();
    const double eps_eff = p.eps_eff > 0.0 ? p.eps_eff : 0.05 * eps_crit;
    require(p.m >= 0.0 && p.m < 1.0, "momentum_equiv_check: m must be in [0, 1)");

    auto mean_final_gap = [&](double m, double eps, std::uint64_t arm) {
        double total = 0.0;
        Vec grad;
        for (int s = 0; s < p.seeds; ++s) {
            BatchSampler sampler(model.n_examples(), p.batch_size,
                                 SamplerMode::PerUpdateRandomSubset,
                                 stream_seed(seed, {arm, static_cast<std::uint64_t>(s)}));
            OptimizerState st =
                OptimizerState::make(zeros(static_cast<std::size_t>(model.dim())), m);
            for (int t = 0; t < p.steps; ++t) {
                model.minibatch_grad(st.omega, sampler.next(), grad);
                momentum_step(st, grad, eps);
            }
            total += model.excess_loss(st.omega);
        }
        return total / p.seeds;
    };

    const double sgd_gap = mean_final_gap(0.0, eps_eff, 21);
    const double mom_gap = mean_final_gap(p.m, eps_eff * (1.0 - p.m), 22);

    CheckReport rep;
    rep.name = "momentum-equiv";
    rep.in_regime = eps_eff <= 0.25 * eps_crit;
    rep.stats["eps_eff"] = eps_eff;
    rep.stats["sgd_mean_gap"] = sgd_gap;
    rep.stats["momentum_mean_gap"] = mom_gap;
    const double rel = std::fabs(sgd_gap - mom_gap) / (0.5 * (sgd_gap + mom_gap));
    rep.stats["relative_difference"] = rel;
    rep.tolerances_met = rel < p.rel_tol;
    rep.status = classify(rep.in_regime, rep.tolerances_met);
    return rep;
}

std::vector<std::string> check_names() {
    return {"lin-scaling", "sde-vs-sgd", "eps-crit", "momentum-equiv"};
}

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    for (auto it = j.begin(); it != j.end(); ++it) {
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

} // namespace

CheckReport run_named_check(const std::string& name, std::uint64_t seed,
                            const std::string& params_json) {
    json params = json::object();
    if (!params_json.empty()) {
        params = json::parse(params_json, nullptr, false);
        if (params.is_discarded() || !params.is_object()) {
            throw ConfigError("check params: invalid JSON object");
        }
    }

    if (name == "lin-scaling") {
        reject_unknown_keys(params, {"eps", "n", "temperature", "seeds", "n_eps_over_crit"},
                            "lin-scaling");
        QuadraticModel model = QuadraticModel::diagonal({1.0}, 64, 1.0, 7);
        LinScalingParams p;
        p.omega0 = {1.0};
        if (params.contains("n")) p.n = params["n"].get<int>();
        if (params.contains("eps")) p.eps = params["eps"].get<double>();
        if (params.contains("temperature")) p.temperature = params["temperature"].get<double>();
        if (params.contains("seeds")) p.seeds = params["seeds"].get<int>();
        if (params.contains("n_eps_over_crit")) {
            p.eps = params["n_eps_over_crit"].get<double>() * model.critical_lr() / p.n;
            p.omega0 = {0.0};
        }
        // Explicit overrides run unguarded so boundary configurations report
        // expected-fail instead of refusing to run.
        p.enforce_regime = params.empty();
        return linear_scaling_check(model, p, seed);
    }
    if (name == "sde-vs-sgd") {
        reject_unknown_keys(params, {"eps_scale", "batch_size", "steps", "seeds"},
                            "sde-vs-sgd");
        QuadraticModel model = QuadraticModel::diagonal({1.0}, 1024, 1.0, 11);
        SgdVsSdeParams p;
        if (params.contains("batch_size")) p.batch_size = params["batch_size"].get<int>();
        if (params.contains("eps_scale")) {
            p.eps = params["eps_scale"].get<double>() * model.critical_lr();
        }
        if (params.contains("steps")) p.steps = params["steps"].get<int>();
        if (params.contains("seeds")) p.seeds = params["seeds"].get<int>();
        p.enforce_regime = params.empty();
        return minibatch_vs_sde_check(model, p, seed);
    }
    if (name == "eps-crit") {
        reject_unknown_keys(params, {}, "eps-crit");
        return eps_crit_check(EpsCritParams{});
    }
    if (name == "momentum-equiv") {
        reject_unknown_keys(params, {"seeds", "steps", "batch_size"}, "momentum-equiv");
        Vec eig(64);
        for (std::size_t i = 0; i < eig.size(); ++i) {
            eig[i] = 0.5 * std::pow(4.0, static_cast<double>(i) / (eig.size() - 1));
        }
        QuadraticModel model = QuadraticModel::diagonal(eig, 512, 1.0, 13);
        MomentumEquivParams p;
        if (params.contains("seeds")) p.seeds = params["seeds"].get<int>();
        if (params.contains("steps")) p.steps = params["steps"].get<int>();
        if (params.contains("batch_size")) p.batch_size = params["batch_size"].get<int>();
        return momentum_equiv_check(model, p, seed);
    }

    std::string valid;
    for (const auto& n : check_names()) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw ConfigError("unknown check '" + name + "'; valid names: " + valid);
}

} // namespace sgdlab
