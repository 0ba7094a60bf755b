#pragma once

// CSV emission for every result type. Row order is fixed (grid-major, then
// sample, then split) and numbers are formatted deterministically, so
// re-emitting the same result reproduces the file byte for byte.

#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "modecomb/errors.hpp"
#include "modecomb/eval.hpp"
#include "modecomb/samplers.hpp"

namespace modecomb {
namespace detail {

inline std::string csv_number(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.12g", value);
    return buffer;
}

inline void write_text_file(const std::string& text, const std::string& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file << text;
    if (!file) throw IoError("write failed for '" + path + "'");
}

inline void append_metrics_row(std::string& out, const std::string& prefix, const EvalMetrics& m) {
    out += prefix;
    out += split_name(m.split);
    out += ',';
    out += csv_number(m.loss);
    out += ',';
    out += csv_number(m.accuracy);
    out += '\n';
}

}  // namespace detail

inline std::string render_results(const SweepResult& sweep) {
    std::string out = "scheme,param,sample_index,split,loss,accuracy\n";
    const std::string scheme = sampler_name(sweep.scheme);
    for (const SweepPoint& point : sweep.points) {
        const std::string prefix = scheme + "," + detail::csv_number(point.param) + "," +
                                   std::to_string(point.sample_index) + ",";
        detail::append_metrics_row(out, prefix, point.train);
        detail::append_metrics_row(out, prefix, point.test);
    }
    return out;
}

// Barrier summary for one sweep, both splits.
inline std::string render_results(const BarrierReport& train, const BarrierReport& test) {
    std::string out = "split,loss_barrier,accuracy_barrier,worst_loss_index,worst_accuracy_index\n";
    const BarrierReport* reports[2] = {&train, &test};
    const Split splits[2] = {Split::train, Split::test};
    for (int i = 0; i < 2; ++i) {
        out += split_name(splits[i]);
        out += ',';
        out += detail::csv_number(reports[i]->loss_barrier);
        out += ',';
        out += detail::csv_number(reports[i]->accuracy_barrier);
        out += ',';
        out += std::to_string(reports[i]->worst_loss_index);
        out += ',';
        out += std::to_string(reports[i]->worst_accuracy_index);
        out += '\n';
    }
    return out;
}

inline std::string render_results(const AgreementCounts& counts) {
    std::string out = "bucket,outcome,count\n";
    for (MatchBucket bucket : {MatchBucket::a_only, MatchBucket::b_only, MatchBucket::both,
                               MatchBucket::neither}) {
        for (bool correct : {true, false}) {
            out += match_bucket_name(bucket);
            out += ',';
            out += correct ? "correct" : "wrong";
            out += ',';
            out += std::to_string(counts.at(bucket, correct));
            out += '\n';
        }
    }
    return out;
}

inline std::string render_results(const EdgeHistogram& hist) {
    std::string out = "bin,lower,upper,count\n";
    const double width = hist.bin_width();
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        out += std::to_string(b);
        out += ',';
        out += detail::csv_number(width * static_cast<double>(b));
        out += ',';
        out += detail::csv_number(width * static_cast<double>(b + 1));
        out += ',';
        out += std::to_string(hist.counts[b]);
        out += '\n';
    }
    return out;
}

inline std::string render_results(const TriangleHeatmap& heatmap) {
    std::string out = "lambda_b,lambda_c,split,loss,accuracy\n";
    for (const TrianglePoint& point : heatmap.points) {
        const std::string prefix =
            detail::csv_number(point.lambda_b) + "," + detail::csv_number(point.lambda_c) + ",";
        detail::append_metrics_row(out, prefix, point.train);
        detail::append_metrics_row(out, prefix, point.test);
    }
    return out;
}

inline std::string render_results(const MinMaxReport& report) {
    std::string out = "model,split,loss,accuracy\n";
    const std::pair<const char*, const SplitMetrics*> models[4] = {
        {"endpoint_a", &report.endpoint_a},
        {"endpoint_b", &report.endpoint_b},
        {"min_vertex", &report.min_vertex},
        {"max_vertex", &report.max_vertex},
    };
    for (const auto& [name, metrics] : models) {
        detail::append_metrics_row(out, std::string(name) + ",", metrics->train);
        detail::append_metrics_row(out, std::string(name) + ",", metrics->test);
    }
    return out;
}

inline std::string render_results(const std::vector<PerturbationPoint>& points) {
    std::string out = "k,split,loss_barrier,accuracy_barrier\n";
    for (const PerturbationPoint& point : points) {
        const BarrierReport* reports[2] = {&point.train, &point.test};
        const Split splits[2] = {Split::train, Split::test};
        for (int i = 0; i < 2; ++i) {
            out += std::to_string(point.k);
            out += ',';
            out += split_name(splits[i]);
            out += ',';
            out += detail::csv_number(reports[i]->loss_barrier);
            out += ',';
            out += detail::csv_number(reports[i]->accuracy_barrier);
            out += '\n';
        }
    }
    return out;
}

inline std::string render_results(const std::vector<WidthAblationRow>& rows) {
    std::string out = "multiplier,scheme,split,loss_barrier,accuracy_barrier\n";
    for (const WidthAblationRow& row : rows) {
        const BarrierReport* reports[2] = {&row.train, &row.test};
        const Split splits[2] = {Split::train, Split::test};
        for (int i = 0; i < 2; ++i) {
            out += std::to_string(row.multiplier);
            out += ',';
            out += sampler_name(row.scheme);
            out += ',';
            out += split_name(splits[i]);
            out += ',';
            out += detail::csv_number(reports[i]->loss_barrier);
            out += ',';
            out += detail::csv_number(reports[i]->accuracy_barrier);
            out += '\n';
        }
    }
    return out;
}

template <typename Result>
void emit_results(const Result& result, const std::string& path) {
    detail::write_text_file(render_results(result), path);
}

inline void emit_results(const BarrierReport& train, const BarrierReport& test,
                         const std::string& path) {
    detail::write_text_file(render_results(train, test), path);
}

}  // namespace modecomb
