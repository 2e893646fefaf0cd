#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgdlab/vec.hpp"

namespace sgdlab {

struct DatasetParams {
    int input_dim = 20;
    int classes = 4;
    int n_train = 4096;
    int n_test = 2048;
    double label_noise = 0.15; ///< fraction of training labels resampled
    std::uint64_t seed = 0;
};

/// Synthetic classification data, generated deterministically from a seed.
///
/// Inputs are standard Gaussian; clean labels come from a fixed random
/// one-hidden-layer tanh teacher. Exactly floor(label_noise * n_train)
/// distinct training examples are then given a uniformly random *different*
/// label, so exactly that many training labels differ from the clean ones.
/// Test labels are always clean.
class SyntheticDataset {
public:
    static SyntheticDataset generate(const DatasetParams& params);

    const DatasetParams& params() const noexcept { return params_; }
    int input_dim() const noexcept { return params_.input_dim; }
    int classes() const noexcept { return params_.classes; }
    int n_train() const noexcept { return params_.n_train; }
    int n_test() const noexcept { return params_.n_test; }

    const double* train_input(int i) const {
        return train_x_.data() + static_cast<std::size_t>(i) * params_.input_dim;
    }
    const double* test_input(int i) const {
        return test_x_.data() + static_cast<std::size_t>(i) * params_.input_dim;
    }
    int train_label(int i) const { return train_y_[static_cast<std::size_t>(i)]; }
    int test_label(int i) const { return test_y_[static_cast<std::size_t>(i)]; }
    int clean_train_label(int i) const { return clean_train_y_[static_cast<std::size_t>(i)]; }

    const Vec& train_inputs() const noexcept { return train_x_; }
    const Vec& test_inputs() const noexcept { return test_x_; }
    const std::vector<int>& train_labels() const noexcept { return train_y_; }
    const std::vector<int>& test_labels() const noexcept { return test_y_; }

    /// Columnar text format: a header carrying (dims, classes, seed, noise,
    /// split sizes), then one row per example with features followed by the
    /// label; train rows first.
    void save(const std::string& path) const;
    static SyntheticDataset load(const std::string& path);

private:
    DatasetParams params_;
    Vec train_x_, test_x_;
    std::vector<int> train_y_, test_y_, clean_train_y_;
};

} // namespace sgdlab
