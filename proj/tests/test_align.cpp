#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "modecomb/align.hpp"
#include "modecomb/dataset.hpp"
#include "modecomb/train.hpp"

using namespace modecomb;

namespace {

Architecture small_arch(bool layernorm = false) {
    Architecture arch;
    arch.input_dim = 5;
    arch.num_classes = 3;
    arch.depth = 4;
    arch.base_width = 8;
    arch.width_multiplier = 1;
    arch.layernorm = layernorm;
    return arch;
}

PermutationSet random_perm(const Architecture& arch, std::uint64_t seed) {
    PermutationSet pi = PermutationSet::identity(arch);
    SplitMix64 rng(seed);
    for (auto& p : pi.perms) shuffle(p, rng);
    return pi;
}

}  // namespace

TEST_CASE("alignment objective is a symmetric inner product at the identity") {
    const Architecture arch = small_arch(true);
    const WeightsF a = init_params<float>(arch, 1);
    const WeightsF b = init_params<float>(arch, 2);
    const PermutationSet id = PermutationSet::identity(arch);

    double dot = 0.0;
    const auto fa = flatten(a);
    const auto fb = flatten(b);
    for (std::size_t i = 0; i < fa.size(); ++i)
        dot += static_cast<double>(fa[i]) * static_cast<double>(fb[i]);

    CHECK_THAT(alignment_objective(a, b, id), Catch::Matchers::WithinAbs(dot, 1e-9));
    CHECK_THAT(alignment_objective(b, a, id), Catch::Matchers::WithinAbs(dot, 1e-9));

    double self = 0.0;
    for (float x : fa) self += static_cast<double>(x) * static_cast<double>(x);
    CHECK_THAT(alignment_objective(a, a, id), Catch::Matchers::WithinAbs(self, 1e-9));
}

TEST_CASE("matching recovers a planted permutation exactly") {
    for (const bool layernorm : {false, true}) {
        const Architecture arch = small_arch(layernorm);
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            const WeightsF a = init_params<float>(arch, hash_mix(seed, 100));
            const PermutationSet planted = random_perm(arch, seed + 7);
            const WeightsF b = apply_permutation(a, planted);

            const AlignResult result = weight_match(a, b, seed);
            CHECK(result.converged);
            CHECK(bitwise_equal(apply_permutation(b, result.pi), a));
        }
    }
}

TEST_CASE("objective trace is non-decreasing and ends at least at the identity value") {
    const Architecture arch = small_arch();
    const WeightsF a = init_params<float>(arch, 5);
    const WeightsF b = init_params<float>(arch, 6);  // unrelated model

    const AlignResult result = weight_match(a, b, 3);
    REQUIRE(!result.objective_trace.empty());
    CHECK(std::is_sorted(result.objective_trace.begin(), result.objective_trace.end()));
    CHECK(result.converged);
    CHECK(result.iterations <= 100);
    CHECK(result.objective_trace.back() >=
          alignment_objective(a, b, PermutationSet::identity(arch)));
    CHECK_THAT(result.objective_trace.back(),
               Catch::Matchers::WithinAbs(alignment_objective(a, b, result.pi), 1e-9));
}

TEST_CASE("weight matching is deterministic in its seed") {
    const Architecture arch = small_arch();
    const WeightsF a = init_params<float>(arch, 8);
    const WeightsF b = init_params<float>(arch, 9);
    const AlignResult r1 = weight_match(a, b, 42);
    const AlignResult r2 = weight_match(a, b, 42);
    CHECK(r1.pi == r2.pi);
    CHECK(r1.objective_trace == r2.objective_trace);
}

TEST_CASE("activation correlations are 1 for identical models and 0 for dead units") {
    const Architecture arch = small_arch();
    WeightsF a = init_params<float>(arch, 4);
    a.layers[0].weight.row(0).setZero();  // unit 0 of layer 1 never fires
    a.layers[0].bias(0) = -1.0f;

    const MatX<float> probes = probe_inputs<float>(64, arch.input_dim, 17);
    const std::vector<double> corr = activation_correlations(a, a, probes, 1);
    REQUIRE(corr.size() == static_cast<std::size_t>(arch.hidden_width()));
    CHECK(corr[0] == 0.0);
    int ones = 0;
    for (std::size_t u = 1; u < corr.size(); ++u) {
        if (corr[u] == 0.0) continue;
        CHECK_THAT(corr[u], Catch::Matchers::WithinAbs(1.0, 1e-12));
        ++ones;
    }
    CHECK(ones >= 4);

    CHECK_THROWS_AS(activation_correlations(a, a, MatX<float>(1, arch.input_dim), 1), ValidationError);
}

TEST_CASE("deranging the k worst pairs moves exactly those positions") {
    const Architecture arch = small_arch();
    const PermutationSet pi = random_perm(arch, 12);
    const std::vector<double> corr = {0.9, 0.1, 0.5, 0.3, 0.8, 0.2, 0.7, 0.6};

    PerturbationSpec spec;
    spec.layer = 2;
    spec.k = 3;
    spec.seed = 5;
    const PermutationSet out = derange_lowest_k(pi, corr, spec);
    out.validate();

    for (std::size_t li = 0; li < pi.perms.size(); ++li) {
        if (li == 1) continue;
        CHECK(out.perms[li] == pi.perms[li]);
    }
    const std::vector<int> expected_moved = {1, 3, 5};  // three lowest correlations
    std::vector<int> moved;
    for (int i = 0; i < 8; ++i)
        if (out.perms[1][static_cast<std::size_t>(i)] != pi.perms[1][static_cast<std::size_t>(i)])
            moved.push_back(i);
    CHECK(moved == expected_moved);

    CHECK(out == derange_lowest_k(pi, corr, spec));  // deterministic
}

TEST_CASE("correlation ties break by unit index and k=2 swaps") {
    const Architecture arch = small_arch();
    const PermutationSet pi = random_perm(arch, 30);
    const std::vector<double> corr(8, 0.5);

    PerturbationSpec spec;
    spec.layer = 1;
    spec.k = 2;
    const PermutationSet out = derange_lowest_k(pi, corr, spec);
    CHECK(out.perms[0][0] == pi.perms[0][1]);
    CHECK(out.perms[0][1] == pi.perms[0][0]);
    for (int i = 2; i < 8; ++i)
        CHECK(out.perms[0][static_cast<std::size_t>(i)] == pi.perms[0][static_cast<std::size_t>(i)]);
}

TEST_CASE("derangement validation") {
    const Architecture arch = small_arch();
    const PermutationSet pi = PermutationSet::identity(arch);
    const std::vector<double> corr(8, 0.0);
    PerturbationSpec spec;

    spec.k = 1;
    CHECK_THROWS_AS(derange_lowest_k(pi, corr, spec), ValidationError);
    spec.k = 9;
    CHECK_THROWS_AS(derange_lowest_k(pi, corr, spec), ValidationError);
    spec.k = 2;
    spec.layer = 0;
    CHECK_THROWS_AS(derange_lowest_k(pi, corr, spec), ValidationError);
    spec.layer = 4;  // only 3 hidden layers
    CHECK_THROWS_AS(derange_lowest_k(pi, corr, spec), ValidationError);
    spec.layer = 1;
    CHECK_THROWS_AS(derange_lowest_k(pi, std::vector<double>(7, 0.0), spec), DimensionError);
}
