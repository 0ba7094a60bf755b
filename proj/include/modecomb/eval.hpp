#pragma once

// Measurement surface: split evaluation, barrier statistics, parameter-grid
// sweeps for every sampling scheme, prediction-agreement partitions,
// edge-length histograms, perturbation sweeps, triangle heatmaps, and width
// ablations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "modecomb/align.hpp"
#include "modecomb/combine.hpp"
#include "modecomb/dataset.hpp"
#include "modecomb/errors.hpp"
#include "modecomb/net.hpp"
#include "modecomb/parallel.hpp"
#include "modecomb/rng.hpp"
#include "modecomb/samplers.hpp"
#include "modecomb/train.hpp"

namespace modecomb {

struct EvalMetrics {
    double loss = 0.0;      // mean cross-entropy
    double accuracy = 0.0;  // correct / total exactly
    Split split = Split::train;
    long correct = 0;
    long total = 0;
};

template <typename T>
std::vector<int> predict(const ModelWeights<T>& weights, const MatX<T>& inputs) {
    const MatX<T> logits = forward(weights, inputs);
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index arg = 0;
        logits.row(i).maxCoeff(&arg);  // ties go to the lowest class index
        out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return out;
}

template <typename T>
EvalMetrics evaluate_on(const ModelWeights<T>& weights, const MatX<T>& inputs,
                        const std::vector<int>& labels, Split split) {
    if (inputs.rows() == 0) throw ValidationError("evaluate: empty split");
    if (static_cast<std::size_t>(inputs.rows()) != labels.size())
        throw DimensionError("evaluate: inputs/labels row mismatch");
    const MatX<T> logits = forward(weights, inputs);
    double loss_sum = 0.0;
    long correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index arg = 0;
        const double mx = static_cast<double>(logits.row(i).maxCoeff(&arg));
        double sum = 0.0;
        for (Eigen::Index c = 0; c < logits.cols(); ++c)
            sum += std::exp(static_cast<double>(logits(i, c)) - mx);
        const int label = labels[static_cast<std::size_t>(i)];
        loss_sum += std::log(sum) + mx - static_cast<double>(logits(i, label));
        if (static_cast<int>(arg) == label) ++correct;
    }
    EvalMetrics m;
    m.split = split;
    m.total = static_cast<long>(logits.rows());
    m.correct = correct;
    m.loss = loss_sum / static_cast<double>(m.total);
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
    return m;
}

template <typename T>
EvalMetrics evaluate(const ModelWeights<T>& weights, const Dataset<T>& data, Split split) {
    return evaluate_on(weights, data.inputs(split), data.labels(split), split);
}

struct SplitMetrics {
    EvalMetrics train;
    EvalMetrics test;
};

template <typename T>
SplitMetrics evaluate_both(const ModelWeights<T>& weights, const Dataset<T>& data) {
    return {evaluate(weights, data, Split::train), evaluate(weights, data, Split::test)};
}

// Excess of the worst path loss over the endpoint mean; negative when the
// whole path beats the endpoints.
inline double loss_barrier(const EvalMetrics& endpoint_a, const EvalMetrics& endpoint_b,
                           const std::vector<EvalMetrics>& path) {
    if (path.empty()) throw ValidationError("barrier: empty path");
    double worst = path.front().loss;
    for (const EvalMetrics& m : path) worst = std::max(worst, m.loss);
    return worst - 0.5 * (endpoint_a.loss + endpoint_b.loss);
}

struct BarrierReport {
    double loss_barrier = 0.0;      // worst sample loss - endpoint mean loss
    double accuracy_barrier = 0.0;  // endpoint mean accuracy - worst sample accuracy
    std::size_t worst_loss_index = 0;
    std::size_t worst_accuracy_index = 0;
};

inline BarrierReport empirical_barrier(const EvalMetrics& endpoint_a, const EvalMetrics& endpoint_b,
                                       const std::vector<EvalMetrics>& samples) {
    if (samples.empty()) throw ValidationError("barrier: no samples");
    BarrierReport report;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].loss > samples[report.worst_loss_index].loss) report.worst_loss_index = i;
        if (samples[i].accuracy < samples[report.worst_accuracy_index].accuracy)
            report.worst_accuracy_index = i;
    }
    report.loss_barrier =
        samples[report.worst_loss_index].loss - 0.5 * (endpoint_a.loss + endpoint_b.loss);
    report.accuracy_barrier =
        0.5 * (endpoint_a.accuracy + endpoint_b.accuracy) - samples[report.worst_accuracy_index].accuracy;
    return report;
}

struct SweepPoint {
    double param = 0.0;
    int sample_index = 0;
    EvalMetrics train;
    EvalMetrics test;
};

struct SweepResult {
    SamplerSpec::Variant scheme = SamplerSpec::Variant::scalar;
    std::vector<double> grid;
    int samples_per_point = 1;
    std::vector<SweepPoint> points;  // grid-major, then sample
    SplitMetrics endpoint_a;
    SplitMetrics endpoint_b;
};

inline int default_samples_per_point(SamplerSpec::Variant variant) {
    SamplerSpec spec;
    spec.variant = variant;
    return spec.stochastic() ? 8 : 1;
}

// Equidistant parameter grid for one scheme. Stitch enumerates the integer
// cut layers 0..depth instead of honoring grid_size; the hyperplane grid is
// open because its mean is confined to (0, 1).
inline std::vector<double> sweep_grid(SamplerSpec::Variant variant, int grid_size, int depth) {
    if (variant == SamplerSpec::Variant::stitch) {
        std::vector<double> grid(static_cast<std::size_t>(depth) + 1);
        for (int l = 0; l <= depth; ++l) grid[static_cast<std::size_t>(l)] = l;
        return grid;
    }
    if (grid_size < 2) throw ValidationError("sweep: grid needs at least two points");
    double lo = 0.0, hi = 1.0;
    switch (variant) {
        case SamplerSpec::Variant::scalar:
        case SamplerSpec::Variant::subcube:
        case SamplerSpec::Variant::bernoulli:
            break;
        case SamplerSpec::Variant::uniform_band:
        case SamplerSpec::Variant::centered_box:
            hi = 0.5;
            break;
        case SamplerSpec::Variant::extrapolate:
            lo = -1.0;
            hi = 2.0;
            break;
        case SamplerSpec::Variant::hyperplane: {
            std::vector<double> grid(static_cast<std::size_t>(grid_size));
            for (int k = 0; k < grid_size; ++k)
                grid[static_cast<std::size_t>(k)] = static_cast<double>(k + 1) / (grid_size + 1);
            return grid;
        }
        default:
            throw ValidationError("sweep: scheme has no parameter grid");
    }
    std::vector<double> grid(static_cast<std::size_t>(grid_size));
    for (int k = 0; k < grid_size; ++k)
        grid[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (grid_size - 1);
    return grid;
}

// Materializes and evaluates combined models over the scheme's grid.
// Point (g, s) uses draw index g * samples_per_point + s, so results are
// independent of evaluation order.
template <typename T>
SweepResult run_sweep(const ModelWeights<T>& theta_a, const ModelWeights<T>& theta_b,
                      SamplerSpec::Variant scheme, const Dataset<T>& data, std::uint64_t seed,
                      int grid_size = 25, int samples_per_point = 0) {
    if (!(theta_a.arch == theta_b.arch)) throw DimensionError("sweep: endpoint architectures differ");
    SweepResult out;
    out.scheme = scheme;
    out.grid = sweep_grid(scheme, grid_size, theta_a.arch.depth);
    out.samples_per_point = samples_per_point > 0 ? samples_per_point : default_samples_per_point(scheme);
    out.endpoint_a = evaluate_both(theta_a, data);
    out.endpoint_b = evaluate_both(theta_b, data);

    const FlatLayout layout = FlatLayout::from_arch(theta_a.arch);
    const std::size_t spp = static_cast<std::size_t>(out.samples_per_point);
    out.points.resize(out.grid.size() * spp);
    parallel_for(out.points.size(), [&](std::size_t idx) {
        const std::size_t g = idx / spp;
        SamplerSpec spec;
        spec.variant = scheme;
        spec.rng_seed = seed;
        if (scheme == SamplerSpec::Variant::stitch)
            spec.cut_layer = static_cast<int>(out.grid[g]);
        else
            spec.param = out.grid[g];
        const CoefficientVector coeffs = sample_coefficients(spec, layout, idx);
        const ModelWeights<T> combined = combine_elementwise(theta_a, theta_b, coeffs);
        SweepPoint& point = out.points[idx];
        point.param = out.grid[g];
        point.sample_index = static_cast<int>(idx % spp);
        point.train = evaluate(combined, data, Split::train);
        point.test = evaluate(combined, data, Split::test);
    });
    return out;
}

inline BarrierReport sweep_barrier(const SweepResult& sweep, Split split) {
    std::vector<EvalMetrics> samples;
    samples.reserve(sweep.points.size());
    for (const SweepPoint& p : sweep.points)
        samples.push_back(split == Split::train ? p.train : p.test);
    const EvalMetrics& a = split == Split::train ? sweep.endpoint_a.train : sweep.endpoint_a.test;
    const EvalMetrics& b = split == Split::train ? sweep.endpoint_b.train : sweep.endpoint_b.test;
    return empirical_barrier(a, b, samples);
}

enum class MatchBucket { a_only = 0, b_only = 1, both = 2, neither = 3 };

inline const char* match_bucket_name(MatchBucket m) {
    switch (m) {
        case MatchBucket::a_only: return "a_only";
        case MatchBucket::b_only: return "b_only";
        case MatchBucket::both: return "both";
        case MatchBucket::neither: return "neither";
    }
    return "?";
}

// Which endpoint(s) the combined model's prediction matches, crossed with
// whether that prediction is correct. The eight buckets partition the split.
struct AgreementCounts {
    std::array<std::array<long, 2>, 4> counts{};  // [bucket][0 = correct, 1 = wrong]

    long& at(MatchBucket m, bool correct) {
        return counts[static_cast<std::size_t>(m)][correct ? 0 : 1];
    }
    long at(MatchBucket m, bool correct) const {
        return counts[static_cast<std::size_t>(m)][correct ? 0 : 1];
    }
    long total() const {
        long sum = 0;
        for (const auto& row : counts) sum += row[0] + row[1];
        return sum;
    }
};

inline AgreementCounts agreement_analysis(const std::vector<int>& preds_a,
                                          const std::vector<int>& preds_b,
                                          const std::vector<int>& preds_m,
                                          const std::vector<int>& labels) {
    if (preds_a.size() != labels.size() || preds_b.size() != labels.size() ||
        preds_m.size() != labels.size())
        throw ValidationError("agreement: prediction/label lengths differ");
    AgreementCounts out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool match_a = preds_m[i] == preds_a[i];
        const bool match_b = preds_m[i] == preds_b[i];
        const MatchBucket bucket = match_a && match_b  ? MatchBucket::both
                                   : match_a           ? MatchBucket::a_only
                                   : match_b           ? MatchBucket::b_only
                                                       : MatchBucket::neither;
        ++out.at(bucket, preds_m[i] == labels[i]);
    }
    return out;
}

struct EdgeHistogram {
    double max_value = 0.0;    // upper edge of the last bin
    std::vector<long> counts;  // equal-width bins on [0, max_value]

    double bin_width() const {
        return counts.empty() ? 0.0 : max_value / static_cast<double>(counts.size());
    }
};

// Histogram of per-coordinate absolute differences |a_i - b_i|.
template <typename T>
EdgeHistogram edge_lengths(const ModelWeights<T>& theta_a, const ModelWeights<T>& theta_b_aligned,
                           int num_bins) {
    if (num_bins < 1) throw ValidationError("edge histogram: need at least one bin");
    if (!(theta_a.arch == theta_b_aligned.arch))
        throw DimensionError("edge histogram: architectures differ");
    const std::vector<T> fa = flatten(theta_a);
    const std::vector<T> fb = flatten(theta_b_aligned);
    EdgeHistogram hist;
    hist.counts.assign(static_cast<std::size_t>(num_bins), 0);
    for (std::size_t i = 0; i < fa.size(); ++i)
        hist.max_value = std::max(
            hist.max_value, std::abs(static_cast<double>(fa[i]) - static_cast<double>(fb[i])));
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double diff = std::abs(static_cast<double>(fa[i]) - static_cast<double>(fb[i]));
        std::size_t bin = 0;
        if (hist.max_value > 0.0)
            bin = std::min(static_cast<std::size_t>(num_bins - 1),
                           static_cast<std::size_t>(diff / hist.max_value * num_bins));
        ++hist.counts[bin];
    }
    return hist;
}

struct PerturbationPoint {
    int k = 0;
    BarrierReport train;
    BarrierReport test;
};

// For each k: re-match the k lowest-correlation units of one layer, then
// measure the straight-line barrier against theta_a. Correlations come from
// the training inputs as probes.
template <typename T>
std::vector<PerturbationPoint> perturbation_sweep(const ModelWeights<T>& theta_a,
                                                  const ModelWeights<T>& theta_b,
                                                  const AlignResult& alignment, int layer,
                                                  const std::vector<int>& k_values,
                                                  const Dataset<T>& data, std::uint64_t seed,
                                                  int grid_size = 25) {
    std::vector<PerturbationPoint> out;
    if (k_values.empty()) return out;
    const ModelWeights<T> b_aligned = apply_permutation(theta_b, alignment.pi);
    const std::vector<double> corr =
        activation_correlations(theta_a, b_aligned, data.train_x, layer);
    for (int k : k_values) {
        PerturbationSpec pspec;
        pspec.layer = layer;
        pspec.k = k;
        pspec.seed = seed;
        const PermutationSet corrupted = derange_lowest_k(alignment.pi, corr, pspec);
        const ModelWeights<T> b_corrupted = apply_permutation(theta_b, corrupted);
        const SweepResult sweep = run_sweep(theta_a, b_corrupted, SamplerSpec::Variant::scalar, data,
                                            seed, grid_size, 1);
        out.push_back({k, sweep_barrier(sweep, Split::train), sweep_barrier(sweep, Split::test)});
    }
    return out;
}

struct TrianglePoint {
    double lambda_b = 0.0;
    double lambda_c = 0.0;
    EvalMetrics train;
    EvalMetrics test;
};

struct TriangleHeatmap {
    int resolution = 2;
    std::vector<TrianglePoint> points;   // lambda_b-major
    std::size_t best_index = 0;          // highest test accuracy, ties to first
};

// Barycentric grid over { lambda_b, lambda_c >= 0, lambda_b + lambda_c <= 1 }.
// Resolution r puts r points on each edge; r = 2 visits only the corners.
template <typename T>
TriangleHeatmap triangle_heatmap(const ModelWeights<T>& theta_a, const ModelWeights<T>& theta_b_pi,
                                 const ModelWeights<T>& theta_c_pi, int resolution,
                                 const Dataset<T>& data) {
    if (resolution < 2) throw ValidationError("triangle: resolution must be >= 2");
    TriangleHeatmap out;
    out.resolution = resolution;
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution - i; ++j)
            out.points.push_back({static_cast<double>(i) / (resolution - 1),
                                  static_cast<double>(j) / (resolution - 1),
                                  {},
                                  {}});
    parallel_for(out.points.size(), [&](std::size_t idx) {
        TrianglePoint& p = out.points[idx];
        const ModelWeights<T> combined =
            combine_three(theta_a, theta_b_pi, theta_c_pi, p.lambda_b, p.lambda_c);
        p.train = evaluate(combined, data, Split::train);
        p.test = evaluate(combined, data, Split::test);
    });
    for (std::size_t i = 1; i < out.points.size(); ++i)
        if (out.points[i].test.accuracy > out.points[out.best_index].test.accuracy)
            out.best_index = i;
    return out;
}

struct MinMaxReport {
    SplitMetrics endpoint_a;
    SplitMetrics endpoint_b;
    SplitMetrics min_vertex;
    SplitMetrics max_vertex;
};

template <typename T>
MinMaxReport minmax_report(const ModelWeights<T>& theta_a, const ModelWeights<T>& theta_b_aligned,
                           const Dataset<T>& data) {
    MinMaxReport out;
    out.endpoint_a = evaluate_both(theta_a, data);
    out.endpoint_b = evaluate_both(theta_b_aligned, data);
    const ModelWeights<T> min_model = combine_elementwise(
        theta_a, theta_b_aligned, min_max_vertex(theta_a, theta_b_aligned, VertexMode::min));
    const ModelWeights<T> max_model = combine_elementwise(
        theta_a, theta_b_aligned, min_max_vertex(theta_a, theta_b_aligned, VertexMode::max));
    out.min_vertex = evaluate_both(min_model, data);
    out.max_vertex = evaluate_both(max_model, data);
    return out;
}

struct WidthAblationRow {
    int multiplier = 1;
    SamplerSpec::Variant scheme = SamplerSpec::Variant::scalar;
    BarrierReport train;
    BarrierReport test;
};

// Trains a fresh pair per multiplier, aligns, and tabulates worst-case
// barriers for each scheme's sweep.
template <typename T>
std::vector<WidthAblationRow> width_ablation(Architecture arch, const std::vector<int>& multipliers,
                                             const std::vector<SamplerSpec::Variant>& schemes,
                                             const Dataset<T>& data, const TrainConfig& base_cfg,
                                             std::uint64_t seed_a, std::uint64_t seed_b,
                                             int grid_size = 25, int samples_per_point = 0) {
    if (multipliers.empty() || schemes.empty())
        throw ValidationError("width ablation: need at least one multiplier and one scheme");
    std::vector<WidthAblationRow> rows;
    for (int multiplier : multipliers) {
        arch.width_multiplier = multiplier;
        TrainConfig cfg_a = base_cfg;
        cfg_a.seed = seed_a;
        TrainConfig cfg_b = base_cfg;
        cfg_b.seed = seed_b;
        const ModelWeights<T> theta_a = train(init_params<T>(arch, seed_a), data, cfg_a);
        const ModelWeights<T> theta_b = train(init_params<T>(arch, seed_b), data, cfg_b);
        const AlignResult alignment = weight_match(theta_a, theta_b, hash_mix(seed_a, 0xA11F00ULL, seed_b));
        const ModelWeights<T> b_aligned = apply_permutation(theta_b, alignment.pi);
        for (SamplerSpec::Variant scheme : schemes) {
            const SweepResult sweep =
                run_sweep(theta_a, b_aligned, scheme, data,
                          hash_mix(seed_a, seed_b, static_cast<std::uint64_t>(scheme)), grid_size,
                          samples_per_point);
            rows.push_back({multiplier, scheme, sweep_barrier(sweep, Split::train),
                            sweep_barrier(sweep, Split::test)});
        }
    }
    return rows;
}

}  // namespace modecomb
