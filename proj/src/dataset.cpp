#include "sgdlab/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "sgdlab/error.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

namespace {

constexpr int kTeacherHidden = 32;

// Fixed random tanh teacher: argmax over class scores.
struct Teacher {
    Vec w1; // hidden x input
    Vec w2; // classes x hidden
    int input_dim;
    int classes;

    static Teacher make(int input_dim, int classes, std::uint64_t seed) {
        Teacher t;
        t.input_dim = input_dim;
        t.classes = classes;
        Rng rng(seed);
        t.w1.resize(static_cast<std::size_t>(kTeacherHidden) * input_dim);
        for (double& v : t.w1) v = rng.gaussian() / std::sqrt(static_cast<double>(input_dim));
        t.w2.resize(static_cast<std::size_t>(classes) * kTeacherHidden);
        for (double& v : t.w2) v = rng.gaussian() / std::sqrt(static_cast<double>(kTeacherHidden));
        return t;
    }

    int label(const double* x) const {
        double h[kTeacherHidden];
        for (int j = 0; j < kTeacherHidden; ++j) {
            const double* row = w1.data() + static_cast<std::size_t>(j) * input_dim;
            double s = 0.0;
            for (int i = 0; i < input_dim; ++i) s += row[i] * x[i];
            h[j] = std::tanh(s);
        }
        int best = 0;
        double best_score = -1e300;
        for (int k = 0; k < classes; ++k) {
            const double* row = w2.data() + static_cast<std::size_t>(k) * kTeacherHidden;
            double s = 0.0;
            for (int j = 0; j < kTeacherHidden; ++j) s += row[j] * h[j];
            if (s > best_score) {
                best_score = s;
                best = k;
            }
        }
        return best;
    }
};

} // namespace

SyntheticDataset SyntheticDataset::generate(const DatasetParams& params) {
    require(params.input_dim >= 1, "dataset: input_dim must be >= 1");
    require(params.classes >= 2, "dataset: classes must be >= 2");
    require(params.n_train >= 1 && params.n_test >= 0, "dataset: bad split sizes");
    require(params.label_noise >= 0.0 && params.label_noise < 1.0,
            "dataset: label_noise must be in [0, 1)");

    SyntheticDataset ds;
    ds.params_ = params;

    const Teacher teacher =
        Teacher::make(params.input_dim, params.classes, stream_seed(params.seed, {0x7e0cull}));

    Rng xrng(stream_seed(params.seed, {0xdaull}));
    auto fill_split = [&](int count, Vec& xs, std::vector<int>& ys) {
        xs.resize(static_cast<std::size_t>(count) * params.input_dim);
        ys.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            double* row = xs.data() + static_cast<std::size_t>(i) * params.input_dim;
            for (int d = 0; d < params.input_dim; ++d) row[d] = xrng.gaussian();
            ys[static_cast<std::size_t>(i)] = teacher.label(row);
        }
    };
    fill_split(params.n_train, ds.train_x_, ds.train_y_);
    fill_split(params.n_test, ds.test_x_, ds.test_y_);
    ds.clean_train_y_ = ds.train_y_;

    // Resample exactly floor(rho * n_train) distinct training labels to a
    // uniformly random different class.
    const int n_flip = static_cast<int>(params.label_noise * params.n_train);
    if (n_flip > 0) {
        Rng frng(stream_seed(params.seed, {0xf11bull}));
        std::vector<int> idx(static_cast<std::size_t>(params.n_train));
        for (int i = 0; i < params.n_train; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < n_flip; ++i) {
            const int j =
                i + static_cast<int>(frng.below(static_cast<std::uint64_t>(params.n_train - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        for (int i = 0; i < n_flip; ++i) {
            const int ex = idx[static_cast<std::size_t>(i)];
            const int old = ds.train_y_[static_cast<std::size_t>(ex)];
            int offset = 1 + static_cast<int>(frng.below(static_cast<std::uint64_t>(params.classes - 1)));
            ds.train_y_[static_cast<std::size_t>(ex)] = (old + offset) % params.classes;
        }
    }
    return ds;
}

void SyntheticDataset::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("dataset: cannot open for writing: " + path);
    out << "sgdlab-dataset v1\n";
    char header[256];
    std::snprintf(header, sizeof(header), "dims %d classes %d seed %llu noise %.17g train %d test %d\n",
                  params_.input_dim, params_.classes,
                  static_cast<unsigned long long>(params_.seed), params_.label_noise,
                  params_.n_train, params_.n_test);
    out << header;
    char buf[64];
    auto write_split = [&](const Vec& xs, const std::vector<int>& ys, int count) {
        for (int i = 0; i < count; ++i) {
            const double* row = xs.data() + static_cast<std::size_t>(i) * params_.input_dim;
            for (int d = 0; d < params_.input_dim; ++d) {
                std::snprintf(buf, sizeof(buf), "%.17g ", row[d]);
                out << buf;
            }
            out << ys[static_cast<std::size_t>(i)] << '\n';
        }
    };
    write_split(train_x_, train_y_, params_.n_train);
    write_split(test_x_, test_y_, params_.n_test);
    if (!out) throw Error("dataset: write failed: " + path);
}

SyntheticDataset SyntheticDataset::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("dataset: cannot open: " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "sgdlab-dataset" || version != "v1") {
        throw Error("dataset: unrecognized file format: " + path);
    }
    SyntheticDataset ds;
    std::string key;
    unsigned long long seed = 0;
    in >> key >> ds.params_.input_dim >> key >> ds.params_.classes >> key >> seed >> key >>
        ds.params_.label_noise >> key >> ds.params_.n_train >> key >> ds.params_.n_test;
    ds.params_.seed = seed;
    if (!in) throw Error("dataset: malformed header: " + path);

    auto read_split = [&](Vec& xs, std::vector<int>& ys, int count) {
        xs.resize(static_cast<std::size_t>(count) * ds.params_.input_dim);
        ys.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            double* row = xs.data() + static_cast<std::size_t>(i) * ds.params_.input_dim;
            for (int d = 0; d < ds.params_.input_dim; ++d) in >> row[d];
            in >> ys[static_cast<std::size_t>(i)];
        }
    };
    read_split(ds.train_x_, ds.train_y_, ds.params_.n_train);
    read_split(ds.test_x_, ds.test_y_, ds.params_.n_test);
    if (!in) throw Error("dataset: truncated file: " + path);
    ds.clean_train_y_ = ds.train_y_; // clean labels are not serialized
    return ds;
}

} // namespace sgdlab
