#pragma once

// Weight matching: coordinate descent over per-layer permutations, each step
// solved exactly as a linear assignment. The objective is the dot product of
// the flattened parameter vectors, so the per-layer score matrix is
//
//   W_l^A P_{l-1} (W_l^B)^T + (W_{l+1}^A)^T P_{l+1} W_{l+1}^B
//     + b_l^A (b_l^B)^T  [+ g_l^A (g_l^B)^T + o_l^A (o_l^B)^T]
//
// the bias/gain/offset outer products being the rank-1 contributions of the
// remaining parameters permuted by P_l. Also hosts the alignment diagnostics:
// per-pair activation correlations and the derangement corruption of the k
// worst-matched unit pairs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "modecomb/errors.hpp"
#include "modecomb/lap.hpp"
#include "modecomb/net.hpp"
#include "modecomb/rng.hpp"

namespace modecomb {

struct AlignResult {
    PermutationSet pi;
    std::vector<double> objective_trace;  // objective after init and after each accepted update
    int iterations = 0;                   // full passes over the layers
    bool converged = false;               // a full pass changed nothing
};

// flatten(theta_a) . flatten(apply_permutation(theta_b, pi)), accumulated in
// double precision.
template <typename T>
double alignment_objective(const ModelWeights<T>& theta_a, const ModelWeights<T>& theta_b,
                           const PermutationSet& pi) {
    if (!(theta_a.arch == theta_b.arch))
        throw DimensionError("alignment_objective: architectures differ");
    const std::vector<T> fa = flatten(theta_a);
    const std::vector<T> fb = flatten(apply_permutation(theta_b, pi));
    double dot = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i)
        dot += static_cast<double>(fa[i]) * static_cast<double>(fb[i]);
    return dot;
}

namespace detail {

// Score matrix for updating the permutation of hidden layer `hidden`
// (0-based) with all other permutations held fixed. Built in double so LAP
// optimality is decided in the same precision as the recorded objective.
template <typename T>
MatX<double> matching_scores(const ModelWeights<T>& a, const ModelWeights<T>& b,
                             const PermutationSet& pi, std::size_t hidden) {
    const std::size_t l = hidden;  // weight layer below is layers[l], above is layers[l+1]
    const Layer<T>& wa = a.layers[l];
    const Layer<T>& wb = b.layers[l];
    const Layer<T>& wa_up = a.layers[l + 1];
    const Layer<T>& wb_up = b.layers[l + 1];

    MatX<double> wb_cols(wb.weight.rows(), wb.weight.cols());
    if (l == 0) {
        wb_cols = wb.weight.template cast<double>();
    } else {
        const std::vector<int>& prev = pi.perms[l - 1];
        for (Eigen::Index j = 0; j < wb.weight.cols(); ++j)
            wb_cols.col(j) = wb.weight.col(prev[static_cast<std::size_t>(j)]).template cast<double>();
    }
    MatX<double> scores = wa.weight.template cast<double>() * wb_cols.transpose();

    MatX<double> wb_up_rows(wb_up.weight.rows(), wb_up.weight.cols());
    if (l + 1 == pi.perms.size()) {
        wb_up_rows = wb_up.weight.template cast<double>();
    } else {
        const std::vector<int>& next = pi.perms[l + 1];
        for (Eigen::Index i = 0; i < wb_up.weight.rows(); ++i)
            wb_up_rows.row(i) = wb_up.weight.row(next[static_cast<std::size_t>(i)]).template cast<double>();
    }
    scores.noalias() += wa_up.weight.template cast<double>().transpose() * wb_up_rows;

    scores.noalias() += wa.bias.template cast<double>() * wb.bias.template cast<double>().transpose();
    if (wa.has_norm()) {
        scores.noalias() += wa.gain.template cast<double>() * wb.gain.template cast<double>().transpose();
        scores.noalias() += wa.offset.template cast<double>() * wb.offset.template cast<double>().transpose();
    }
    return scores;
}

}  // namespace detail

// Coordinate descent on the alignment objective. Permutations start at the
// identity; every pass visits the hidden layers in a freshly shuffled order
// and re-solves each layer's assignment. An update is accepted only when it
// strictly improves its layer score, which makes the trace non-decreasing and
// guarantees termination; ties keep the incumbent.
template <typename T>
AlignResult weight_match(const ModelWeights<T>& theta_a, const ModelWeights<T>& theta_b,
                         std::uint64_t seed, int max_iters = 100) {
    theta_a.validate();
    theta_b.validate();
    if (!(theta_a.arch == theta_b.arch))
        throw ValidationError("weight_match: architectures differ");

    AlignResult result;
    result.pi = PermutationSet::identity(theta_a.arch);
    result.objective_trace.push_back(alignment_objective(theta_a, theta_b, result.pi));

    const std::size_t num_hidden = result.pi.perms.size();
    std::vector<std::size_t> layer_order(num_hidden);
    std::iota(layer_order.begin(), layer_order.end(), 0);
    SplitMix64 rng(hash_mix(seed, 0xA119ULL));

    for (int pass = 0; pass < max_iters; ++pass) {
        shuffle(layer_order, rng);
        bool changed = false;
        for (const std::size_t hidden : layer_order) {
            const MatX<double> scores = detail::matching_scores(theta_a, theta_b, result.pi, hidden);
            std::vector<int> candidate = solve_lap_max(scores);
            if (candidate == result.pi.perms[hidden]) continue;
            const double incumbent = assignment_value(scores, result.pi.perms[hidden]);
            const double proposed = assignment_value(scores, candidate);
            if (proposed > incumbent) {
                result.pi.perms[hidden] = std::move(candidate);
                result.objective_trace.push_back(alignment_objective(theta_a, theta_b, result.pi));
                changed = true;
            }
        }
        ++result.iterations;
        if (!changed) {
            result.converged = true;
            break;
        }
    }
    return result;
}

// Pearson correlation between the post-activation outputs of matched unit
// pairs at hidden layer `layer` (1-based). theta_b_aligned must already carry
// its permutation, so pair i is (unit i of A, unit i of aligned B). Units with
// zero variance on either side score 0.
template <typename T>
std::vector<double> activation_correlations(const ModelWeights<T>& theta_a,
                                            const ModelWeights<T>& theta_b_aligned,
                                            const MatX<T>& probe_inputs, int layer) {
    if (probe_inputs.rows() < 2)
        throw ValidationError("activation_correlations: probe batch must have at least 2 rows");
    if (!(theta_a.arch == theta_b_aligned.arch))
        throw DimensionError("activation_correlations: architectures differ");
    const MatX<T> ha = hidden_activation(theta_a, probe_inputs, layer);
    const MatX<T> hb = hidden_activation(theta_b_aligned, probe_inputs, layer);

    const Eigen::Index n = ha.rows();
    std::vector<double> corr(static_cast<std::size_t>(ha.cols()), 0.0);
    for (Eigen::Index u = 0; u < ha.cols(); ++u) {
        double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
            const double x = static_cast<double>(ha(r, u));
            const double y = static_cast<double>(hb(r, u));
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
        }
        const double va = saa - sa * sa / n;
        const double vb = sbb - sb * sb / n;
        if (va <= 0.0 || vb <= 0.0) continue;  // zero-variance convention
        corr[static_cast<std::size_t>(u)] = (sab - sa * sb / n) / std::sqrt(va * vb);
    }
    return corr;
}

struct PerturbationSpec {
    int layer = 1;  // 1-based hidden layer
    int k = 2;      // number of lowest-correlation pairs to re-match
    std::uint64_t seed = 0;
};

// Re-matches the k lowest-correlation unit pairs of one layer by composing a
// uniform derangement of those positions onto pi. Ties in the correlation
// ranking break by unit index.
inline PermutationSet derange_lowest_k(const PermutationSet& pi, const std::vector<double>& correlations,
                                       const PerturbationSpec& spec) {
    if (spec.layer < 1 || static_cast<std::size_t>(spec.layer) > pi.perms.size())
        throw ValidationError("derange_lowest_k: layer out of range");
    const std::size_t width = pi.perms[static_cast<std::size_t>(spec.layer - 1)].size();
    if (correlations.size() != width)
        throw DimensionError("derange_lowest_k: correlation vector does not match layer width");
    if (spec.k < 2 || static_cast<std::size_t>(spec.k) > width)
        throw ValidationError("derange_lowest_k: k must lie in [2, layer width]");

    std::vector<int> ranked(width);
    std::iota(ranked.begin(), ranked.end(), 0);
    std::sort(ranked.begin(), ranked.end(), [&](int a, int b) {
        const double ca = correlations[static_cast<std::size_t>(a)];
        const double cb = correlations[static_cast<std::size_t>(b)];
        return ca < cb || (ca == cb && a < b);
    });
    ranked.resize(static_cast<std::size_t>(spec.k));

    // Uniform derangement by rejection (expected ~e attempts).
    SplitMix64 rng(hash_mix(spec.seed, 0xDE7AULL, spec.layer, spec.k));
    std::vector<int> slot(static_cast<std::size_t>(spec.k));
    for (;;) {
        std::iota(slot.begin(), slot.end(), 0);
        shuffle(slot, rng);
        bool fixed_point = false;
        for (int t = 0; t < spec.k; ++t)
            if (slot[static_cast<std::size_t>(t)] == t) {
                fixed_point = true;
                break;
            }
        if (!fixed_point) break;
    }

    PermutationSet rematch;
    rematch.perms.resize(pi.perms.size());
    for (std::size_t li = 0; li < pi.perms.size(); ++li) {
        rematch.perms[li].resize(pi.perms[li].size());
        std::iota(rematch.perms[li].begin(), rematch.perms[li].end(), 0);
    }
    auto& target = rematch.perms[static_cast<std::size_t>(spec.layer - 1)];
    for (int t = 0; t < spec.k; ++t)
        target[static_cast<std::size_t>(ranked[static_cast<std::size_t>(t)])] =
            ranked[static_cast<std::size_t>(slot[static_cast<std::size_t>(t)])];

    return pi.compose_after(rematch);
}

}  // namespace modecomb
