#pragma once

// Parameter container, deterministic forward pass, and exact permutation
// application for plain dense ReLU networks with optional pre-activation
// layer normalization:
//
//     hidden layer:  affine -> [layernorm] -> relu
//     final layer:   affine
//
// Layers are numbered 1..L in the public API (matching the config and CLI);
// hidden layer l (1 <= l <= L-1) owns permutation P_l. Internally everything
// is 0-based.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "modecomb/errors.hpp"

namespace modecomb {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

constexpr float kLayerNormEpsilon = 1e-5f;

struct Architecture {
    int input_dim = 32;
    int num_classes = 10;
    int depth = 4;  // number of weight layers L
    int base_width = 16;
    int width_multiplier = 1;
    bool layernorm = false;

    int hidden_width() const { return base_width * width_multiplier; }

    int layer_in(int layer) const {  // layer is 1-based
        return layer == 1 ? input_dim : hidden_width();
    }
    int layer_out(int layer) const {
        return layer == depth ? num_classes : hidden_width();
    }

    void validate() const {
        if (input_dim <= 0 || num_classes <= 0 || base_width <= 0 || width_multiplier <= 0)
            throw ValidationError("architecture: all dimensions must be positive");
        if (depth < 2) throw ValidationError("architecture: depth must be >= 2");
    }

    bool operator==(const Architecture&) const = default;
};

// Flattened parameter order, fixed and relied upon by the archive format and
// the coefficient samplers: for each layer l = 1..L in order, W_l row-major,
// then b_l, then (hidden layers with layernorm) gain_l and offset_l.
struct FlatLayout {
    struct Span {
        int layer = 0;  // 1-based owning layer; 0 for unstructured layouts
        std::size_t offset = 0;
        std::size_t size = 0;
    };
    std::size_t total = 0;
    std::vector<Span> spans;

    static FlatLayout from_arch(const Architecture& arch) {
        arch.validate();
        FlatLayout layout;
        for (int l = 1; l <= arch.depth; ++l) {
            const std::size_t out = static_cast<std::size_t>(arch.layer_out(l));
            const std::size_t in = static_cast<std::size_t>(arch.layer_in(l));
            std::size_t size = out * in + out;
            if (arch.layernorm && l < arch.depth) size += 2 * out;
            layout.spans.push_back({l, layout.total, size});
            layout.total += size;
        }
        return layout;
    }

    // Layout with no layer structure; enough for any per-coordinate sampler.
    static FlatLayout unstructured(std::size_t d) {
        return FlatLayout{d, {}};
    }
};

template <typename T>
struct Layer {
    MatX<T> weight;  // out x in
    VecX<T> bias;    // out
    VecX<T> gain;    // out, hidden layers with layernorm only (else empty)
    VecX<T> offset;  // likewise

    bool has_norm() const { return gain.size() > 0; }
};

template <typename T>
struct ModelWeights {
    Architecture arch;
    std::vector<Layer<T>> layers;

    // Zero-initialized weights of the given architecture.
    static ModelWeights zeros(const Architecture& arch) {
        arch.validate();
        ModelWeights w;
        w.arch = arch;
        w.layers.resize(static_cast<std::size_t>(arch.depth));
        for (int l = 1; l <= arch.depth; ++l) {
            Layer<T>& layer = w.layers[static_cast<std::size_t>(l - 1)];
            layer.weight = MatX<T>::Zero(arch.layer_out(l), arch.layer_in(l));
            layer.bias = VecX<T>::Zero(arch.layer_out(l));
            if (arch.layernorm && l < arch.depth) {
                layer.gain = VecX<T>::Zero(arch.layer_out(l));
                layer.offset = VecX<T>::Zero(arch.layer_out(l));
            }
        }
        return w;
    }

    std::size_t param_count() const {
        std::size_t d = 0;
        for (const auto& layer : layers) {
            d += static_cast<std::size_t>(layer.weight.size()) +
                 static_cast<std::size_t>(layer.bias.size()) +
                 static_cast<std::size_t>(layer.gain.size()) +
                 static_cast<std::size_t>(layer.offset.size());
        }
        return d;
    }

    void validate() const {
        arch.validate();
        if (layers.size() != static_cast<std::size_t>(arch.depth))
            throw DimensionError("model: expected " + std::to_string(arch.depth) + " layers, have " +
                                 std::to_string(layers.size()));
        for (int l = 1; l <= arch.depth; ++l) {
            const Layer<T>& layer = layers[static_cast<std::size_t>(l - 1)];
            if (layer.weight.rows() != arch.layer_out(l) || layer.weight.cols() != arch.layer_in(l))
                throw DimensionError("model: layer " + std::to_string(l) + " weight shape mismatch");
            if (layer.bias.size() != arch.layer_out(l))
                throw DimensionError("model: layer " + std::to_string(l) + " bias size mismatch");
            const bool wants_norm = arch.layernorm && l < arch.depth;
            if (wants_norm != layer.has_norm() ||
                (wants_norm && (layer.gain.size() != arch.layer_out(l) || layer.offset.size() != arch.layer_out(l))))
                throw DimensionError("model: layer " + std::to_string(l) + " normalization params mismatch");
        }
    }

    void validate_finite() const {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& layer = layers[i];
            const bool ok = layer.weight.allFinite() && layer.bias.allFinite() &&
                            (!layer.has_norm() || (layer.gain.allFinite() && layer.offset.allFinite()));
            if (!ok)
                throw ValidationError("model: non-finite parameter in layer " + std::to_string(i + 1));
        }
    }
};

using WeightsF = ModelWeights<float>;

// Per-hidden-layer permutations; perms[k] acts on hidden layer k+1 and is
// stored as a row-selection map: unit i of the permuted model is unit
// perms[k][i] of the original.
struct PermutationSet {
    std::vector<std::vector<int>> perms;

    static PermutationSet identity(const Architecture& arch) {
        arch.validate();
        PermutationSet pi;
        pi.perms.assign(static_cast<std::size_t>(arch.depth - 1),
                        std::vector<int>(static_cast<std::size_t>(arch.hidden_width())));
        for (auto& p : pi.perms) std::iota(p.begin(), p.end(), 0);
        return pi;
    }

    void validate() const {
        for (std::size_t k = 0; k < perms.size(); ++k) {
            const auto& p = perms[k];
            std::vector<bool> seen(p.size(), false);
            for (int v : p) {
                if (v < 0 || static_cast<std::size_t>(v) >= p.size() || seen[static_cast<std::size_t>(v)])
                    throw ValidationError("permutation: layer " + std::to_string(k + 1) + " is not a bijection");
                seen[static_cast<std::size_t>(v)] = true;
            }
        }
    }

    PermutationSet inverse() const {
        PermutationSet inv;
        inv.perms.resize(perms.size());
        for (std::size_t k = 0; k < perms.size(); ++k) {
            inv.perms[k].resize(perms[k].size());
            for (std::size_t i = 0; i < perms[k].size(); ++i)
                inv.perms[k][static_cast<std::size_t>(perms[k][i])] = static_cast<int>(i);
        }
        return inv;
    }

    // Applying the result equals applying *this first, then `outer`.
    PermutationSet compose_after(const PermutationSet& outer) const {
        if (outer.perms.size() != perms.size())
            throw DimensionError("permutation: layer count mismatch in composition");
        PermutationSet out;
        out.perms.resize(perms.size());
        for (std::size_t k = 0; k < perms.size(); ++k) {
            if (outer.perms[k].size() != perms[k].size())
                throw DimensionError("permutation: size mismatch in composition at layer " + std::to_string(k + 1));
            out.perms[k].resize(perms[k].size());
            for (std::size_t i = 0; i < perms[k].size(); ++i)
                out.perms[k][i] = perms[k][static_cast<std::size_t>(outer.perms[k][i])];
        }
        return out;
    }

    bool operator==(const PermutationSet&) const = default;
};

namespace detail {

template <typename T>
void layernorm_rows(MatX<T>& z, const VecX<T>& gain, const VecX<T>& offset) {
    const Eigen::Index width = z.cols();
    const T eps = static_cast<T>(kLayerNormEpsilon);
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        const T mean = row.mean();
        const T var = (row.array() - mean).square().sum() / static_cast<T>(width);
        const T inv_std = T(1) / std::sqrt(var + eps);
        row = (((row.array() - mean) * inv_std) * gain.transpose().array() + offset.transpose().array()).matrix();
    }
}

}  // namespace detail

// Logits for a batch of inputs. Deterministic: identical weights and inputs
// give bit-identical outputs on one platform.
template <typename T>
MatX<T> forward(const ModelWeights<T>& weights, const MatX<T>& inputs) {
    weights.validate();
    weights.validate_finite();
    if (inputs.cols() != weights.arch.input_dim)
        throw DimensionError("forward: input has " + std::to_string(inputs.cols()) + " columns, expected " +
                             std::to_string(weights.arch.input_dim));
    MatX<T> h = inputs;
    const int depth = weights.arch.depth;
    for (int l = 1; l <= depth; ++l) {
        const Layer<T>& layer = weights.layers[static_cast<std::size_t>(l - 1)];
        MatX<T> z = h * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        if (l < depth) {
            if (layer.has_norm()) detail::layernorm_rows(z, layer.gain, layer.offset);
            h = z.cwiseMax(T(0));
        } else {
            h = std::move(z);
        }
    }
    return h;
}

// Post-activation output of hidden layer `layer` (1-based, 1 <= layer <= L-1).
template <typename T>
MatX<T> hidden_activation(const ModelWeights<T>& weights, const MatX<T>& inputs, int layer) {
    weights.validate();
    if (layer < 1 || layer >= weights.arch.depth)
        throw ValidationError("hidden_activation: layer must lie in [1, L-1]");
    if (inputs.cols() != weights.arch.input_dim)
        throw DimensionError("hidden_activation: input width does not match architecture");
    MatX<T> h = inputs;
    for (int l = 1; l <= layer; ++l) {
        const Layer<T>& lw = weights.layers[static_cast<std::size_t>(l - 1)];
        MatX<T> z = h * lw.weight.transpose();
        z.rowwise() += lw.bias.transpose();
        if (lw.has_norm()) detail::layernorm_rows(z, lw.gain, lw.offset);
        h = z.cwiseMax(T(0));
    }
    return h;
}

// W_l' = P_l W_l P_{l-1}^T (P_0 = P_L = identity), realized as pure gathers so
// the result holds exactly the same float values. Functionally identical to
// the input model.
template <typename T>
ModelWeights<T> apply_permutation(const ModelWeights<T>& weights, const PermutationSet& pi) {
    weights.validate();
    pi.validate();
    const int depth = weights.arch.depth;
    if (pi.perms.size() != static_cast<std::size_t>(depth - 1))
        throw DimensionError("apply_permutation: expected " + std::to_string(depth - 1) + " permutations, have " +
                             std::to_string(pi.perms.size()));
    for (const auto& p : pi.perms)
        if (p.size() != static_cast<std::size_t>(weights.arch.hidden_width()))
            throw DimensionError("apply_permutation: permutation size does not match hidden width");

    ModelWeights<T> out = weights;
    for (int l = 1; l <= depth; ++l) {
        const Layer<T>& src = weights.layers[static_cast<std::size_t>(l - 1)];
        Layer<T>& dst = out.layers[static_cast<std::size_t>(l - 1)];
        const std::vector<int>* rows = l < depth ? &pi.perms[static_cast<std::size_t>(l - 1)] : nullptr;
        const std::vector<int>* cols = l > 1 ? &pi.perms[static_cast<std::size_t>(l - 2)] : nullptr;
        for (Eigen::Index i = 0; i < dst.weight.rows(); ++i) {
            const Eigen::Index si = rows ? (*rows)[static_cast<std::size_t>(i)] : i;
            if (cols) {
                for (Eigen::Index j = 0; j < dst.weight.cols(); ++j)
                    dst.weight(i, j) = src.weight(si, (*cols)[static_cast<std::size_t>(j)]);
            } else {
                dst.weight.row(i) = src.weight.row(si);
            }
            if (rows) {
                dst.bias(i) = src.bias(si);
                if (src.has_norm()) {
                    dst.gain(i) = src.gain(si);
                    dst.offset(i) = src.offset(si);
                }
            }
        }
    }
    return out;
}

template <typename T>
std::vector<T> flatten(const ModelWeights<T>& weights) {
    weights.validate();
    std::vector<T> flat;
    flat.reserve(weights.param_count());
    for (const auto& layer : weights.layers) {
        flat.insert(flat.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
        flat.insert(flat.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
        if (layer.has_norm()) {
            flat.insert(flat.end(), layer.gain.data(), layer.gain.data() + layer.gain.size());
            flat.insert(flat.end(), layer.offset.data(), layer.offset.data() + layer.offset.size());
        }
    }
    return flat;
}

template <typename T>
ModelWeights<T> unflatten(const std::vector<T>& flat, const Architecture& arch) {
    ModelWeights<T> weights = ModelWeights<T>::zeros(arch);
    if (flat.size() != weights.param_count())
        throw DimensionError("unflatten: vector length " + std::to_string(flat.size()) + " does not match d = " +
                             std::to_string(weights.param_count()));
    std::size_t pos = 0;
    for (auto& layer : weights.layers) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.weight.size(), layer.weight.data());
        pos += static_cast<std::size_t>(layer.weight.size());
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.bias.size(), layer.bias.data());
        pos += static_cast<std::size_t>(layer.bias.size());
        if (layer.has_norm()) {
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.gain.size(), layer.gain.data());
            pos += static_cast<std::size_t>(layer.gain.size());
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.offset.size(), layer.offset.data());
            pos += static_cast<std::size_t>(layer.offset.size());
        }
    }
    return weights;
}

template <typename T>
bool bitwise_equal(const ModelWeights<T>& a, const ModelWeights<T>& b) {
    if (!(a.arch == b.arch) || a.layers.size() != b.layers.size()) return false;
    const std::vector<T> fa = flatten(a);
    const std::vector<T> fb = flatten(b);
    if (fa.size() != fb.size()) return false;
    return std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(T)) == 0;
}

}  // namespace modecomb
