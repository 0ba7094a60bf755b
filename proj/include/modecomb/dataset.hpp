#pragma once

// Deterministic synthetic classification data: a Gaussian mixture with one
// seed-derived unit-vector center per class. Identical specs produce
// bit-identical datasets; every variate is a pure function of
// (seed, stream, index, coordinate).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "modecomb/errors.hpp"
#include "modecomb/net.hpp"
#include "modecomb/rng.hpp"

namespace modecomb {

enum class Split { train, test };

inline const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

struct DatasetSpec {
    std::uint64_t seed = 1;
    int num_classes = 10;
    int input_dim = 32;
    int train_size = 2048;
    int test_size = 1024;
    double class_separation = 3.0;
    double noise_sigma = 1.0;

    void validate() const {
        if (num_classes <= 0 || input_dim <= 0)
            throw ValidationError("dataset: num_classes and input_dim must be positive");
        if (train_size <= 0 || test_size <= 0)
            throw ValidationError("dataset: train_size and test_size must be positive");
        if (train_size < num_classes || test_size < num_classes)
            throw ValidationError("dataset: split sizes must be >= num_classes");
        if (class_separation < 0.0 || noise_sigma < 0.0)
            throw ValidationError("dataset: class_separation and noise_sigma must be nonnegative");
    }
};

template <typename T>
struct Dataset {
    DatasetSpec spec;
    MatX<T> centers;  // num_classes x input_dim
    MatX<T> train_x;
    MatX<T> test_x;
    std::vector<int> train_y;
    std::vector<int> test_y;

    const MatX<T>& inputs(Split s) const { return s == Split::train ? train_x : test_x; }
    const std::vector<int>& labels(Split s) const { return s == Split::train ? train_y : test_y; }
};

namespace detail {

enum : std::uint64_t { kStreamCenter = 0xC0, kStreamTrain = 0x11, kStreamTest = 0x22 };

template <typename T>
void fill_split(const DatasetSpec& spec, const MatX<T>& centers, std::uint64_t stream, int size,
                MatX<T>& x, std::vector<int>& y) {
    x.resize(size, spec.input_dim);
    y.resize(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) {
        const int label = i % spec.num_classes;  // balanced to within +-1 per class
        y[static_cast<std::size_t>(i)] = label;
        for (int j = 0; j < spec.input_dim; ++j) {
            const double noise = spec.noise_sigma * counter_normal(spec.seed, stream, i, j);
            x(i, j) = static_cast<T>(static_cast<double>(centers(label, j)) + noise);
        }
    }
}

}  // namespace detail

template <typename T = float>
Dataset<T> make_dataset(const DatasetSpec& spec) {
    spec.validate();
    Dataset<T> data;
    data.spec = spec;

    // Class centers: normalized Gaussian directions scaled by class_separation.
    data.centers.resize(spec.num_classes, spec.input_dim);
    for (int c = 0; c < spec.num_classes; ++c) {
        std::vector<double> dir(static_cast<std::size_t>(spec.input_dim));
        double norm_sq = 0.0;
        for (int j = 0; j < spec.input_dim; ++j) {
            dir[static_cast<std::size_t>(j)] = counter_normal(spec.seed, detail::kStreamCenter, c, j);
            norm_sq += dir[static_cast<std::size_t>(j)] * dir[static_cast<std::size_t>(j)];
        }
        const double scale = spec.class_separation / std::sqrt(norm_sq);
        for (int j = 0; j < spec.input_dim; ++j)
            data.centers(c, j) = static_cast<T>(dir[static_cast<std::size_t>(j)] * scale);
    }

    detail::fill_split(spec, data.centers, detail::kStreamTrain, spec.train_size, data.train_x, data.train_y);
    detail::fill_split(spec, data.centers, detail::kStreamTest, spec.test_size, data.test_x, data.test_y);
    return data;
}

// Standard-normal probe batch, used for functional-equivalence checks and
// activation statistics.
template <typename T = float>
MatX<T> probe_inputs(int count, int input_dim, std::uint64_t seed) {
    if (count <= 0 || input_dim <= 0)
        throw ValidationError("probe_inputs: count and input_dim must be positive");
    MatX<T> x(count, input_dim);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < input_dim; ++j)
            x(i, j) = static_cast<T>(counter_normal(seed, 0x9e0bULL, i, j));
    return x;
}

}  // namespace modecomb
