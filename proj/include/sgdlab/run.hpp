#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/dataset.hpp"
#include "sgdlab/mlp.hpp"
#include "sgdlab/quadratic.hpp"
#include "sgdlab/sampler.hpp"
#include "sgdlab/schedule.hpp"
#include "sgdlab/vec.hpp"

namespace sgdlab {

struct QuadraticSpec {
    Vec eigenvalues{1.0, 2.0};
    int n_examples = 256;
    double center_std = 1.0;
    double start_scale = 3.0; ///< omega0 = start_scale * ones
};

struct MlpSpec {
    MlpConfig mlp;
    DatasetParams data;
};

struct ModelSpec {
    enum class Kind { Quadratic, Mlp };
    Kind kind = Kind::Quadratic;
    QuadraticSpec quadratic;
    MlpSpec mlp;
};

/// Everything shared by the runs of one experiment: the loss model and (for
/// the MLP) the dataset. Immutable after construction; safe to share across
/// worker threads.
class ExperimentContext {
public:
    static std::shared_ptr<const ExperimentContext> create(const ModelSpec& spec,
                                                           std::uint64_t base_seed);

    const ModelSpec& spec() const noexcept { return spec_; }
    bool is_mlp() const noexcept { return spec_.kind == ModelSpec::Kind::Mlp; }
    const QuadraticModel& quadratic() const { return *quad_; }
    const MlpModel& mlp() const { return *mlp_; }
    const SyntheticDataset& dataset() const { return *data_; }
    int train_size() const;

private:
    ModelSpec spec_;
    std::shared_ptr<const QuadraticModel> quad_;
    std::shared_ptr<const MlpModel> mlp_;
    std::shared_ptr<const SyntheticDataset> data_;
};

enum class OptimizerKind { Sgd, Momentum };

const char* to_string(OptimizerKind k);

struct RunParams {
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double m = 0.9;        ///< momentum coefficient when optimizer == Momentum
    double eps0_eff = 0.1; ///< initial effective learning rate
    double gamma = 2.0;
    double eps_f = 0.0;    ///< > 0 selects the decoupled (eps0, eps_f) schedule
    Budget budget = Budget::constant_step(40);
    int batch_size = 1;
    SamplerMode sampler = SamplerMode::PerUpdateRandomSubset;
    std::optional<Granularity> granularity; ///< default: chosen by budget kind
    int curve_eval_size = 512;              ///< MLP curve points use this eval subset
};

struct CurvePoint {
    std::int64_t step = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double test_metric = 0.0; ///< NaN when the model has no test set
};

/// One training run. Diverged runs are ordinary records, not errors.
struct RunRecord {
    // configuration echo
    std::string optimizer = "sgd";
    double m = 0.0;
    double eps0_eff = 0.0;
    double gamma = 2.0;
    double eps_f = 0.0;
    std::string budget_kind = "constant_step";
    std::int64_t budget_units = 0;
    int batch_size = 0;
    std::uint64_t run_seed = 0;

    // outcome
    bool completed = false;
    std::int64_t diverged_step = -1;
    double final_train_loss = 0.0;
    double final_test_accuracy = 0.0; ///< NaN when not applicable
    double final_test_mse = 0.0;      ///< NaN when not applicable
    std::vector<CurvePoint> curve;

    std::string to_json_line() const;
    static RunRecord from_json_line(const std::string& line);
};

/// Executes one budgeted training run. Deterministic given (context params,
/// run_seed): the sampler stream, parameter initialization and every metric
/// derive from them alone.
RunRecord run_training(const ExperimentContext& ctx, const RunParams& params,
                       std::uint64_t run_seed);

/// Effective-LR schedule helper: the raw step size handed to the optimizer is
/// eps_eff * (1 - m).
LRSchedule build_schedule(const RunParams& params, std::int64_t steps_per_epoch);

} // namespace sgdlab
