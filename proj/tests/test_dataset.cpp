#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "modecomb/dataset.hpp"

using namespace modecomb;

namespace {

DatasetSpec small_spec() {
    DatasetSpec spec;
    spec.seed = 7;
    spec.num_classes = 4;
    spec.input_dim = 8;
    spec.train_size = 100;
    spec.test_size = 60;
    spec.class_separation = 6.0;
    spec.noise_sigma = 0.5;
    return spec;
}

}  // namespace

TEST_CASE("datasets are bit-identical across calls and differ across seeds") {
    const auto a = make_dataset<float>(small_spec());
    const auto b = make_dataset<float>(small_spec());
    CHECK(a.train_x == b.train_x);
    CHECK(a.test_x == b.test_x);
    CHECK(a.train_y == b.train_y);
    CHECK(a.centers == b.centers);

    DatasetSpec other = small_spec();
    other.seed = 8;
    const auto c = make_dataset<float>(other);
    CHECK(a.train_x != c.train_x);
    CHECK(a.centers != c.centers);
}

TEST_CASE("labels are balanced to within one sample per class") {
    const auto data = make_dataset<float>(small_spec());
    for (Split split : {Split::train, Split::test}) {
        const auto& y = data.labels(split);
        std::vector<int> counts(4, 0);
        for (int label : y) {
            REQUIRE(label >= 0);
            REQUIRE(label < 4);
            ++counts[static_cast<std::size_t>(label)];
        }
        const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
        CHECK(*hi - *lo <= 1);
    }
}

TEST_CASE("class centers have the requested norm and empirical means approach them") {
    DatasetSpec spec = small_spec();
    spec.train_size = 4000;
    spec.noise_sigma = 1.0;
    const auto data = make_dataset<float>(spec);

    for (int c = 0; c < spec.num_classes; ++c)
        CHECK_THAT(data.centers.row(c).norm(), Catch::Matchers::WithinAbs(spec.class_separation, 1e-4));

    // Per-class sample mean ~ center +- O(sigma / sqrt(1000)).
    for (int c = 0; c < spec.num_classes; ++c) {
        VecX<double> mean = VecX<double>::Zero(spec.input_dim);
        int count = 0;
        for (int i = 0; i < spec.train_size; ++i) {
            if (data.train_y[static_cast<std::size_t>(i)] != c) continue;
            mean += data.train_x.row(i).cast<double>().transpose();
            ++count;
        }
        mean /= count;
        const double err = (mean - data.centers.row(c).cast<double>().transpose()).norm();
        CHECK(err < 0.25);  // ~ sigma * sqrt(dim / count) = sqrt(8/1000) ~ 0.09
    }
}

TEST_CASE("nearest-centroid classification is near-perfect at high separation") {
    DatasetSpec spec = small_spec();
    spec.class_separation = 10.0;
    const auto data = make_dataset<float>(spec);
    int correct = 0;
    for (int i = 0; i < spec.test_size; ++i) {
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int c = 0; c < spec.num_classes; ++c) {
            const double dist = (data.test_x.row(i) - data.centers.row(c)).cast<double>().squaredNorm();
            if (dist < best_dist) {
                best_dist = dist;
                best = c;
            }
        }
        correct += best == data.test_y[static_cast<std::size_t>(i)];
    }
    CHECK(correct == spec.test_size);
}

TEST_CASE("train and test splits use disjoint variate streams") {
    DatasetSpec spec = small_spec();
    spec.test_size = spec.train_size;
    const auto data = make_dataset<float>(spec);
    CHECK(data.train_x != data.test_x);
}

TEST_CASE("dataset validation rejects bad specs") {
    DatasetSpec spec = small_spec();
    spec.train_size = 2;  // below num_classes
    CHECK_THROWS_AS(make_dataset<float>(spec), ValidationError);
    spec = small_spec();
    spec.noise_sigma = -0.1;
    CHECK_THROWS_AS(make_dataset<float>(spec), ValidationError);
    spec = small_spec();
    spec.input_dim = 0;
    CHECK_THROWS_AS(make_dataset<float>(spec), ValidationError);
}

TEST_CASE("probe inputs are deterministic standard-normal batches") {
    const auto a = probe_inputs<float>(64, 16, 5);
    const auto b = probe_inputs<float>(64, 16, 5);
    CHECK(a == b);
    const auto c = probe_inputs<float>(64, 16, 6);
    CHECK(a != c);

    const double mean = a.cast<double>().mean();
    const double var = (a.cast<double>().array() - mean).square().mean();
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 0.1));
    CHECK_THAT(var, Catch::Matchers::WithinAbs(1.0, 0.15));
    CHECK_THROWS_AS(probe_inputs<float>(0, 4, 1), ValidationError);
}
