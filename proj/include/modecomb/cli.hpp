#pragma once

// Command-line driver. Every subcommand is a pure function of its config and
// input archives, so pipelines re-run to byte-identical outputs.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modecomb/archive.hpp"
#include "modecomb/config.hpp"
#include "modecomb/csv.hpp"
#include "modecomb/errors.hpp"
#include "modecomb/eval.hpp"
#include "modecomb/rng.hpp"

namespace modecomb {
namespace detail {

inline std::string config_digest(const std::string& text) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (unsigned char c : text) h = splitmix64(h ^ c);
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
    return buffer;
}

struct CliState {
    std::string config_path;
    std::string model_a, model_b, model_c;
    std::string perm, perm_b, perm_c;
    std::string out, results;
    std::uint64_t seed = 0;
    bool seed_given = false;

    std::string config_text;
    ExperimentConfig config;

    void load_config() {
        config_text = read_file_bytes(config_path);
        config = parse_config(config_text);
        if (seed_given) config.training.seed = seed;
    }

    WeightsF model(const std::string& path) const { return load_weights(path); }

    // Loads model B (or C) and applies the optional permutation file.
    WeightsF permuted_model(const std::string& path, const std::string& perm_path) const {
        WeightsF weights = load_weights(path);
        if (!perm_path.empty()) weights = apply_permutation(weights, load_permutations(perm_path));
        return weights;
    }
};

inline void print_split_metrics(const char* tag, const SplitMetrics& m) {
    std::printf("%s: train loss %.6f acc %.4f | test loss %.6f acc %.4f\n", tag, m.train.loss,
                m.train.accuracy, m.test.loss, m.test.accuracy);
}

inline void print_sweep_barriers(const SweepResult& sweep) {
    const BarrierReport train = sweep_barrier(sweep, Split::train);
    const BarrierReport test = sweep_barrier(sweep, Split::test);
    std::printf("%s barriers: train loss %.6f acc %.4f | test loss %.6f acc %.4f\n",
                sampler_name(sweep.scheme), train.loss_barrier, train.accuracy_barrier,
                test.loss_barrier, test.accuracy_barrier);
}

inline void run_train(CliState& state) {
    state.load_config();
    const ExperimentConfig& cfg = state.config;
    const auto data = make_dataset<float>(cfg.dataset);
    TrainTrace trace;
    const WeightsF weights =
        train(init_params<float>(cfg.arch, cfg.training.seed), data, cfg.training, &trace);
    for (std::size_t e = 0; e < trace.epoch_mean_loss.size(); ++e)
        if ((e + 1) % 10 == 0 || e + 1 == trace.epoch_mean_loss.size())
            std::printf("epoch %zu: mean loss %.6f\n", e + 1, trace.epoch_mean_loss[e]);
    print_split_metrics("final", evaluate_both(weights, data));
    ArchiveMeta meta;
    meta.seed = cfg.training.seed;
    meta.config_digest = config_digest(state.config_text);
    save_weights(weights, state.out, meta);
    std::printf("saved %s\n", state.out.c_str());
}

inline void run_align(CliState& state) {
    std::uint64_t seed = 0;
    if (!state.config_path.empty()) {
        state.load_config();
        seed = state.config.experiment.seed;
    }
    const WeightsF a = state.model(state.model_a);
    const WeightsF b = state.model(state.model_b);
    const AlignResult result = weight_match(a, b, seed);
    for (std::size_t i = 0; i < result.objective_trace.size(); ++i)
        std::printf("step %zu: objective %.6f\n", i, result.objective_trace[i]);
    std::printf("converged %s after %d passes\n", result.converged ? "yes" : "no",
                result.iterations);
    save_permutations(result.pi, state.out);
    std::printf("saved %s\n", state.out.c_str());
}

inline void run_sweep_command(CliState& state, SamplerSpec::Variant scheme) {
    state.load_config();
    const ExperimentConfig& cfg = state.config;
    const auto data = make_dataset<float>(cfg.dataset);
    const WeightsF a = state.model(state.model_a);
    const WeightsF b = state.permuted_model(state.model_b, state.perm);
    const SweepResult sweep = run_sweep(a, b, scheme, data, cfg.experiment.seed,
                                        cfg.experiment.grid_size, cfg.experiment.samples_per_point);
    print_split_metrics("endpoint A", sweep.endpoint_a);
    print_split_metrics("endpoint B", sweep.endpoint_b);
    print_sweep_barriers(sweep);
    emit_results(sweep, state.results);
    std::printf("saved %s\n", state.results.c_str());
}

inline void run_minmax(CliState& state) {
    state.load_config();
    const auto data = make_dataset<float>(state.config.dataset);
    const WeightsF a = state.model(state.model_a);
    const WeightsF b = state.permuted_model(state.model_b, state.perm);
    const MinMaxReport report = minmax_report(a, b, data);
    print_split_metrics("endpoint A", report.endpoint_a);
    print_split_metrics("endpoint B", report.endpoint_b);
    print_split_metrics("min vertex", report.min_vertex);
    print_split_metrics("max vertex", report.max_vertex);
    emit_results(report, state.results);
    std::printf("saved %s\n", state.results.c_str());
}

inline void run_triangle(CliState& state) {
    state.load_config();
    const auto data = make_dataset<float>(state.config.dataset);
    const WeightsF a = state.model(state.model_a);
    const WeightsF b = state.permuted_model(state.model_b, state.perm_b);
    const WeightsF c = state.permuted_model(state.model_c, state.perm_c);
    const TriangleHeatmap heatmap =
        triangle_heatmap(a, b, c, state.config.experiment.triangle_resolution, data);
    const TrianglePoint& best = heatmap.points[heatmap.best_index];
    std::printf("best: lambda_b %.4f lambda_c %.4f test acc %.4f\n", best.lambda_b, best.lambda_c,
                best.test.accuracy);
    emit_results(heatmap, state.results);
    std::printf("saved %s\n", state.results.c_str());
}

inline void run_perturb(CliState& state) {
    state.load_config();
    const ExperimentConfig& cfg = state.config;
    const auto data = make_dataset<float>(cfg.dataset);
    const WeightsF a = state.model(state.model_a);
    const WeightsF b = state.model(state.model_b);
    const AlignResult alignment = weight_match(a, b, cfg.experiment.seed);
    const auto points = perturbation_sweep(a, b, alignment, cfg.experiment.layer,
                                           cfg.experiment.k_values, data, cfg.experiment.seed,
                                           cfg.experiment.grid_size);
    for (const PerturbationPoint& point : points)
        std::printf("k %d: test loss barrier %.6f acc barrier %.4f\n", point.k,
                    point.test.loss_barrier, point.test.accuracy_barrier);
    emit_results(points, state.results);
    std::printf("saved %s\n", state.results.c_str());
}

inline void run_agreement(CliState& state) {
    state.load_config();
    const auto data = make_dataset<float>(state.config.dataset);
    const WeightsF a = state.model(state.model_a);
    const WeightsF b = state.model(state.model_b);
    const WeightsF m = state.model(state.model_c);  // the combined model
    const AgreementCounts counts =
        agreement_analysis(predict(a, data.test_x), predict(b, data.test_x),
                           predict(m, data.test_x), data.test_y);
    for (MatchBucket bucket : {MatchBucket::a_only, MatchBucket::b_only, MatchBucket::both,
                               MatchBucket::neither})
        std::printf("%-8s correct %ld wrong %ld\n", match_bucket_name(bucket),
                    counts.at(bucket, true), counts.at(bucket, false));
    emit_results(counts, state.results);
    std::printf("saved %s\n", state.results.c_str());
}

inline void run_edges(CliState& state) {
    state.load_config();
    const WeightsF a = state.model(state.model_a);
    const WeightsF b = state.permuted_model(state.model_b, state.perm);
    const EdgeHistogram hist = edge_lengths(a, b, state.config.experiment.bins);
    emit_results(hist, state.results);
    std::printf("saved %s\n", state.results.c_str());
}

inline void run_widths(CliState& state) {
    state.load_config();
    const ExperimentConfig& cfg = state.config;
    const auto data = make_dataset<float>(cfg.dataset);
    const auto rows = width_ablation(cfg.arch, cfg.experiment.multipliers, cfg.experiment.schemes,
                                     data, cfg.training, cfg.training.seed, cfg.training.seed + 1,
                                     cfg.experiment.grid_size, cfg.experiment.samples_per_point);
    for (const WidthAblationRow& row : rows)
        std::printf("multiplier %d %s: test loss barrier %.6f acc barrier %.4f\n", row.multiplier,
                    sampler_name(row.scheme), row.test.loss_barrier, row.test.accuracy_barrier);
    emit_results(rows, state.results);
    std::printf("saved %s\n", state.results.c_str());
}

inline void run_report(CliState& state) {
    state.load_config();
    const ExperimentConfig& cfg = state.config;
    const auto data = make_dataset<float>(cfg.dataset);
    const WeightsF a = state.model(state.model_a);
    const WeightsF b = state.permuted_model(state.model_b, state.perm);
    const SweepResult sweep =
        run_sweep(a, b, cfg.experiment.scheme, data, cfg.experiment.seed, cfg.experiment.grid_size,
                  cfg.experiment.samples_per_point);
    const BarrierReport train = sweep_barrier(sweep, Split::train);
    const BarrierReport test = sweep_barrier(sweep, Split::test);
    print_sweep_barriers(sweep);
    emit_results(train, test, state.results);
    std::printf("saved %s\n", state.results.c_str());
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
    detail::CliState state;
    CLI::App app{"element-wise model combination lab"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub, bool needs_config, bool needs_a, bool needs_b) {
        auto* config = sub->add_option("--config", state.config_path, "experiment config file");
        if (needs_config) config->required();
        auto* a = sub->add_option("--model-a", state.model_a, "weight archive A");
        if (needs_a) a->required();
        auto* b = sub->add_option("--model-b", state.model_b, "weight archive B");
        if (needs_b) b->required();
        return sub;
    };
    auto add_results = [&](CLI::App* sub) {
        sub->add_option("--results", state.results, "output CSV path")->required();
    };
    auto add_perm = [&](CLI::App* sub) {
        sub->add_option("--perm", state.perm, "permutation file applied to model B");
    };

    std::function<void()> action;

    auto* train_cmd = add_common(app.add_subcommand("train", "train one model"), true, false, false);
    train_cmd->add_option("--out", state.out, "output weight archive")->required();
    train_cmd->add_option("--seed", state.seed, "override training seed")
        ->each([&](const std::string&) { state.seed_given = true; });
    train_cmd->callback([&] { action = [&] { detail::run_train(state); }; });

    auto* align_cmd = add_common(app.add_subcommand("align", "match hidden units of B onto A"),
                                 false, true, true);
    align_cmd->add_option("--out", state.out, "output permutation file")->required();
    align_cmd->callback([&] { action = [&] { detail::run_align(state); }; });

    auto* sweep_cmd = add_common(
        app.add_subcommand("sweep", "evaluate combinations over the configured scheme's grid"),
        true, true, true);
    add_results(sweep_cmd);
    add_perm(sweep_cmd);
    sweep_cmd->callback([&] {
        action = [&] { detail::run_sweep_command(state, state.config.experiment.scheme); };
    });

    auto* stitch_cmd = add_common(
        app.add_subcommand("stitch", "evaluate layer-stitched models at every cut"), true, true,
        true);
    add_results(stitch_cmd);
    add_perm(stitch_cmd);
    stitch_cmd->callback([&] {
        action = [&] { detail::run_sweep_command(state, SamplerSpec::Variant::stitch); };
    });

    auto* minmax_cmd = add_common(
        app.add_subcommand("minmax", "evaluate the min/max-magnitude cube vertices"), true, true,
        true);
    add_results(minmax_cmd);
    add_perm(minmax_cmd);
    minmax_cmd->callback([&] { action = [&] { detail::run_minmax(state); }; });

    auto* extra_cmd = add_common(
        app.add_subcommand("extrapolate", "sweep the interpolation line beyond both endpoints"),
        true, true, true);
    add_results(extra_cmd);
    add_perm(extra_cmd);
    extra_cmd->callback([&] {
        action = [&] { detail::run_sweep_command(state, SamplerSpec::Variant::extrapolate); };
    });

    auto* triangle_cmd = add_common(
        app.add_subcommand("triangle", "three-model barycentric heatmap"), true, true, true);
    triangle_cmd->add_option("--model-c", state.model_c, "weight archive C")->required();
    triangle_cmd->add_option("--perm-b", state.perm_b, "permutation file applied to model B");
    triangle_cmd->add_option("--perm-c", state.perm_c, "permutation file applied to model C");
    add_results(triangle_cmd);
    triangle_cmd->callback([&] { action = [&] { detail::run_triangle(state); }; });

    auto* perturb_cmd = add_common(
        app.add_subcommand("perturb", "corrupt the k lowest-correlation matches and re-measure"),
        true, true, true);
    add_results(perturb_cmd);
    perturb_cmd->callback([&] { action = [&] { detail::run_perturb(state); }; });

    auto* agree_cmd = add_common(
        app.add_subcommand("agreement", "partition test predictions of A, B and the combined model"),
        true, true, true);
    agree_cmd->add_option("--model-c", state.model_c, "combined-model weight archive")->required();
    add_results(agree_cmd);
    agree_cmd->callback([&] { action = [&] { detail::run_agreement(state); }; });

    auto* edges_cmd = add_common(
        app.add_subcommand("edges", "histogram of aligned per-coordinate weight differences"),
        true, true, true);
    add_results(edges_cmd);
    add_perm(edges_cmd);
    edges_cmd->callback([&] { action = [&] { detail::run_edges(state); }; });

    auto* widths_cmd = add_common(
        app.add_subcommand("widths", "train pairs per width multiplier and tabulate barriers"),
        true, false, false);
    add_results(widths_cmd);
    widths_cmd->callback([&] { action = [&] { detail::run_widths(state); }; });

    auto* report_cmd = add_common(
        app.add_subcommand("report", "barrier summary of the configured sweep"), true, true, true);
    add_results(report_cmd);
    add_perm(report_cmd);
    report_cmd->callback([&] { action = [&] { detail::run_report(state); }; });

    try {
        app.parse(argc, argv);
        action();
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

}  // namespace modecomb
