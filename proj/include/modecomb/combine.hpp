#pragma once

// Element-wise convex (and beyond-convex) combination of weight vectors, the
// min/max-magnitude cube vertices, and the three-model barycentric variant.

#include <cstdint>
#include <vector>

#include "modecomb/errors.hpp"
#include "modecomb/net.hpp"
#include "modecomb/samplers.hpp"

namespace modecomb {

// theta_v[i] = v[i] * a[i] + (1 - v[i]) * b[i], accumulated in double.
// v == 1 and v == 0 reproduce the endpoint bytes exactly.
template <typename T>
ModelWeights<T> combine_elementwise(const ModelWeights<T>& a, const ModelWeights<T>& b,
                                    const CoefficientVector& coeffs) {
    if (a.arch != b.arch) throw DimensionError("combine: endpoint architectures differ");
    const std::vector<T> fa = flatten(a);
    const std::vector<T> fb = flatten(b);
    if (coeffs.v.size() != fa.size())
        throw DimensionError("combine: coefficient vector length does not match parameter count");
    std::vector<T> out(fa.size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double v = coeffs.v[i];
        if (v == 1.0)
            out[i] = fa[i];
        else if (v == 0.0)
            out[i] = fb[i];
        else
            out[i] = static_cast<T>(static_cast<double>(fb[i]) +
                                    v * (static_cast<double>(fa[i]) - static_cast<double>(fb[i])));
    }
    return unflatten(out, a.arch);
}

enum class VertexMode { min, max };

// Cube vertex picking, per coordinate, the endpoint with the smaller (min) or
// larger (max) magnitude. Ties go to model A.
template <typename T>
CoefficientVector min_max_vertex(const ModelWeights<T>& a, const ModelWeights<T>& b, VertexMode mode) {
    if (a.arch != b.arch) throw DimensionError("combine: endpoint architectures differ");
    const std::vector<T> fa = flatten(a);
    const std::vector<T> fb = flatten(b);
    CoefficientVector out;
    out.provenance.variant =
        mode == VertexMode::min ? SamplerSpec::Variant::min_vertex : SamplerSpec::Variant::max_vertex;
    out.v.resize(fa.size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double ma = std::abs(static_cast<double>(fa[i]));
        const double mb = std::abs(static_cast<double>(fb[i]));
        const bool pick_a = mode == VertexMode::min ? ma <= mb : ma >= mb;
        out.v[i] = pick_a ? 1.0 : 0.0;
    }
    return out;
}

// theta = a + lb * (b - a) + lc * (c - a); b and c are expected to be already
// aligned onto a. (lb, lc) = (0,0), (1,0), (0,1) hit the corners exactly.
template <typename T>
ModelWeights<T> combine_three(const ModelWeights<T>& a, const ModelWeights<T>& b,
                              const ModelWeights<T>& c, double lb, double lc) {
    if (a.arch != b.arch || a.arch != c.arch)
        throw DimensionError("combine: endpoint architectures differ");
    if (lb == 0.0 && lc == 0.0) return a;
    if (lb == 1.0 && lc == 0.0) return b;
    if (lb == 0.0 && lc == 1.0) return c;
    const std::vector<T> fa = flatten(a);
    const std::vector<T> fb = flatten(b);
    const std::vector<T> fc = flatten(c);
    std::vector<T> out(fa.size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double base = static_cast<double>(fa[i]);
        out[i] = static_cast<T>(base + lb * (static_cast<double>(fb[i]) - base) +
                                lc * (static_cast<double>(fc[i]) - base));
    }
    return unflatten(out, a.arch);
}

}  // namespace modecomb
