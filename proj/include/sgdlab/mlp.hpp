#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sgdlab/rng.hpp"
#include "sgdlab/vec.hpp"

namespace sgdlab {

struct MlpConfig {
    int input_dim = 20;
    std::vector<int> hidden{64, 64};
    int classes = 4;
    bool ghost_bn = true;      ///< ghost batch normalization on hidden layers
    int ghost_batch_size = 64;
    double l2_coeff = 5e-4;
    double bn_eps = 1e-5;
    double bn_momentum = 0.9;  ///< running = momentum * running + (1-momentum) * batch
};

/// Per-group batch-norm cache produced by the train-mode forward pass and
/// consumed by the backward pass.
struct BnCache {
    std::vector<std::pair<int, int>> groups; ///< [begin, end) row ranges
    Vec mean;    ///< groups x features
    Vec inv_sd;  ///< groups x features, 1/sqrt(var + eps)
    Vec xhat;    ///< rows x features, normalized pre-scale activations
    Vec batch_mean, batch_var; ///< size-weighted average over groups
    int features = 0;
};

/// Train-mode ghost batch normalization over row-major activations
/// (rows x features). Rows are cut into contiguous groups of ghost_size;
/// a final remainder group of size >= 2 normalizes with its own statistics,
/// a remainder of 1 is an error. Normalization uses the biased group
/// variance. out = scale * xhat + shift.
void ghost_bn_forward_train(const double* z, int rows, int features, int ghost_size,
                            const double* scale, const double* shift, double eps,
                            double* out, BnCache& cache);

/// Eval-mode normalization with running statistics.
void ghost_bn_forward_eval(const double* z, int rows, int features,
                           const double* running_mean, const double* running_var,
                           const double* scale, const double* shift, double eps,
                           double* out);

/// Backward through the train-mode forward. Accumulates into dscale/dshift,
/// overwrites dz.
void ghost_bn_backward(const double* dout, const BnCache& cache, const double* scale,
                       double* dz, double* dscale, double* dshift);

/// Small fully connected classifier with rectifier activations, optional
/// ghost batch normalization on the hidden layers, softmax cross-entropy and
/// L2 regularization of the full parameter vector:
///   loss = mean CE + (l2_coeff / 2) * |params|^2.
///
/// The model itself is immutable topology; parameters live in a flat Vec and
/// running BN statistics in a BnState, both owned by the training run.
class MlpModel {
public:
    explicit MlpModel(MlpConfig cfg);

    struct BnState {
        std::vector<Vec> running_mean;
        std::vector<Vec> running_var;
    };

    struct Batch {
        const double* x = nullptr; ///< row-major, count x input_dim
        const int* labels = nullptr;
        int count = 0;
    };

    enum class Mode { Train, Eval };

    /// Scratch buffers; reuse across steps of one run. Not thread-safe.
    struct Workspace {
        std::vector<Vec> act;   // activations entering each linear layer
        std::vector<Vec> pre;   // linear outputs
        std::vector<Vec> post;  // after BN (or alias of pre when BN is off)
        std::vector<BnCache> bn;
        Vec logits, probs;
        std::vector<Vec> dact;
        Vec gathered; // batch gather buffer for callers
    };

    const MlpConfig& config() const noexcept { return cfg_; }
    int param_count() const noexcept { return param_count_; }

    Vec init_params(Rng& rng) const;
    BnState init_bn_state() const;

    /// Loss and exact gradient of (mean cross-entropy + L2). In train mode
    /// with ghost BN, normalization statistics come from the batch and the
    /// running statistics in `bn` are updated; eval mode uses `bn` read-only.
    /// Throws NumericsError naming the layer if an activation overflows.
    double loss_and_grad(const Vec& params, BnState& bn, const Batch& batch,
                         Mode mode, Vec& grad, Workspace& ws) const;

    /// Forward-only loss (mean CE + L2) in the given mode. Train mode does
    /// not touch running statistics here.
    double loss(const Vec& params, const BnState& bn, const Batch& batch,
                Mode mode, Workspace& ws) const;

    struct EvalMetrics {
        double loss = 0.0;     ///< mean CE + L2
        double accuracy = 0.0; ///< fraction of correct argmax predictions
        double mse = 0.0;      ///< mean |softmax - onehot|^2
    };

    /// Eval-mode metrics over a whole example range, processed in chunks.
    EvalMetrics evaluate(const Vec& params, const BnState& bn, const double* xs,
                         const int* labels, int count, Workspace& ws) const;

    /// Copies the rows named by `indices` into ws.gathered and returns a
    /// Batch over them.
    Batch gather(const double* xs, const int* labels, const std::vector<int>& indices,
                 std::vector<int>& label_buf, Workspace& ws) const;

private:
    struct Layer {
        int in = 0, out = 0;
        int w = 0, b = 0, scale = 0, shift = 0; // offsets into the flat params
    };

    MlpConfig cfg_;
    std::vector<Layer> hidden_;
    Layer out_;
    int param_count_ = 0;

    double forward(const Vec& params, const BnState* bn, const Batch& batch,
                   Mode mode, Workspace& ws, BnState* update_bn) const;
};

} // namespace sgdlab
