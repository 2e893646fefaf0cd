#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "sgdlab/dataset.hpp"
#include "sgdlab/error.hpp"
#include "sgdlab/sampler.hpp"

using namespace sgdlab;

TEST_CASE("per-update sampler: size, no duplicates, full-batch case") {
    BatchSampler sampler(8, 3, SamplerMode::PerUpdateRandomSubset, 1);
    for (int i = 0; i < 100; ++i) {
        const auto& batch = sampler.next();
        CHECK(batch.size() == 3);
        std::set<int> unique(batch.begin(), batch.end());
        CHECK(unique.size() == 3);
        for (int idx : batch) {
            CHECK(idx >= 0);
            CHECK(idx < 8);
        }
    }
    BatchSampler full(4, 4, SamplerMode::PerUpdateRandomSubset, 1);
    const auto& batch = full.next();
    CHECK(std::set<int>(batch.begin(), batch.end()) == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("epoch shuffle covers every example exactly once per epoch") {
    BatchSampler sampler(8, 2, SamplerMode::EpochShuffle, 3);
    for (int epoch = 0; epoch < 5; ++epoch) {
        std::multiset<int> seen;
        for (int b = 0; b < 4; ++b) {
            const auto& batch = sampler.next();
            CHECK(batch.size() == 2);
            seen.insert(batch.begin(), batch.end());
        }
        CHECK(seen == std::multiset<int>{0, 1, 2, 3, 4, 5, 6, 7});
    }
}

TEST_CASE("B > N is an explicit error") {
    CHECK_THROWS_AS(BatchSampler(4, 5, SamplerMode::PerUpdateRandomSubset, 1), Error);
}

TEST_CASE("per-update subsets are uniform over unordered pairs") {
    // N=4, B=2: 6 unordered pairs, each with probability 1/6.
    BatchSampler sampler(4, 2, SamplerMode::PerUpdateRandomSubset, 99);
    std::map<std::pair<int, int>, int> counts;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        auto batch = sampler.next();
        std::sort(batch.begin(), batch.end());
        ++counts[{batch[0], batch[1]}];
    }
    CHECK(counts.size() == 6);
    const double p = 1.0 / 6.0;
    const double se = std::sqrt(p * (1.0 - p) / draws);
    for (const auto& [pair, count] : counts) {
        CAPTURE(pair.first);
        CAPTURE(pair.second);
        CHECK(std::fabs(static_cast<double>(count) / draws - p) < 5.0 * se);
    }
}

TEST_CASE("sampler determinism") {
    BatchSampler a(16, 4, SamplerMode::PerUpdateRandomSubset, 7);
    BatchSampler b(16, 4, SamplerMode::PerUpdateRandomSubset, 7);
    for (int i = 0; i < 50; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("synthetic dataset: determinism and exact label-noise count") {
    DatasetParams params;
    params.input_dim = 6;
    params.classes = 3;
    params.n_train = 200;
    params.n_test = 50;
    params.label_noise = 0.15;
    params.seed = 42;

    const SyntheticDataset a = SyntheticDataset::generate(params);
    const SyntheticDataset b = SyntheticDataset::generate(params);
    CHECK(a.train_inputs() == b.train_inputs());
    CHECK(a.train_labels() == b.train_labels());

    int flipped = 0;
    for (int i = 0; i < params.n_train; ++i) {
        if (a.train_label(i) != a.clean_train_label(i)) ++flipped;
        CHECK(a.train_label(i) >= 0);
        CHECK(a.train_label(i) < params.classes);
    }
    CHECK(flipped == 30); // exactly floor(0.15 * 200)

    // Test labels stay clean: regenerate with zero noise and compare.
    DatasetParams clean = params;
    clean.label_noise = 0.0;
    const SyntheticDataset c = SyntheticDataset::generate(clean);
    CHECK(a.test_labels() == c.test_labels());
    for (int i = 0; i < params.n_train; ++i) {
        CHECK(a.clean_train_label(i) == c.train_label(i));
    }
}

TEST_CASE("dataset text round trip") {
    DatasetParams params;
    params.input_dim = 4;
    params.classes = 2;
    params.n_train = 32;
    params.n_test = 8;
    params.label_noise = 0.25;
    params.seed = 9;
    const SyntheticDataset ds = SyntheticDataset::generate(params);

    const std::string path = "/tmp/sgdlab_test_dataset.txt";
    ds.save(path);
    const SyntheticDataset loaded = SyntheticDataset::load(path);
    std::remove(path.c_str());

    CHECK(loaded.params().input_dim == params.input_dim);
    CHECK(loaded.params().classes == params.classes);
    CHECK(loaded.params().label_noise == params.label_noise);
    CHECK(loaded.train_labels() == ds.train_labels());
    CHECK(loaded.test_labels() == ds.test_labels());
    CHECK(loaded.train_inputs() == ds.train_inputs()); // %.17g round trip is exact
}

TEST_CASE("dataset load rejects garbage") {
    const std::string path = "/tmp/sgdlab_bad_dataset.txt";
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("not-a-dataset\n", f);
    std::fclose(f);
    CHECK_THROWS_AS(SyntheticDataset::load(path), Error);
    std::remove(path.c_str());
}
