#pragma once

// Mini-batch SGD with momentum, L2 weight decay on weight matrices, and the
// two learning-rate schedules used throughout: step decay (divide by 10 at
// one third and two thirds of training) and cosine decay with linear warmup.
// Training is bit-deterministic in (init, dataset, config).

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "modecomb/dataset.hpp"
#include "modecomb/errors.hpp"
#include "modecomb/net.hpp"
#include "modecomb/rng.hpp"

namespace modecomb {

struct Schedule {
    enum class Kind { step_thirds, cosine_warmup };
    Kind kind = Kind::step_thirds;
    double initial_lr = 0.01;  // step_thirds
    double peak_lr = 0.1;      // cosine_warmup
    int warmup_epochs = 1;     // cosine_warmup

    static Schedule step_thirds(double initial_lr) {
        Schedule s;
        s.kind = Kind::step_thirds;
        s.initial_lr = initial_lr;
        return s;
    }
    static Schedule cosine_warmup(double peak_lr, int warmup_epochs) {
        Schedule s;
        s.kind = Kind::cosine_warmup;
        s.peak_lr = peak_lr;
        s.warmup_epochs = warmup_epochs;
        return s;
    }

    void validate(int total_epochs) const {
        if (kind == Kind::step_thirds && initial_lr <= 0.0)
            throw ValidationError("schedule: initial_lr must be positive");
        if (kind == Kind::cosine_warmup) {
            if (peak_lr <= 0.0) throw ValidationError("schedule: peak_lr must be positive");
            if (warmup_epochs < 0 || (total_epochs > 0 && warmup_epochs > total_epochs))
                throw ValidationError("schedule: warmup_epochs out of range");
        }
    }
};

struct TrainConfig {
    int epochs = 50;
    int batch_size = 100;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    Schedule schedule = Schedule::step_thirds(0.01);
    std::uint64_t seed = 1;  // controls batch order (and init, when used via init_params)

    void validate() const {
        if (epochs < 0) throw ValidationError("training: epochs must be nonnegative");
        if (batch_size <= 0) throw ValidationError("training: batch_size must be positive");
        if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("training: momentum must lie in [0, 1)");
        if (weight_decay < 0.0) throw ValidationError("training: weight_decay must be nonnegative");
        schedule.validate(epochs);
    }
};

constexpr double kWarmupFloorLr = 1e-6;

// Learning rate at (epoch, step). Step decay uses epoch-fraction progress
// with drops at 1/3 and 2/3; cosine decay reaches exactly zero on the final
// step after a linear ramp from 1e-6 to the peak.
inline double lr_at(const Schedule& schedule, int epoch, int step_in_epoch, int steps_per_epoch,
                    int total_epochs) {
    if (epoch < 0 || step_in_epoch < 0 || steps_per_epoch <= 0 || total_epochs <= 0 ||
        epoch >= total_epochs || step_in_epoch >= steps_per_epoch)
        throw ValidationError("lr_at: step indices out of range");
    if (schedule.kind == Schedule::Kind::step_thirds) {
        const double progress =
            (static_cast<double>(epoch) + static_cast<double>(step_in_epoch) / steps_per_epoch) / total_epochs;
        int drops = static_cast<int>(std::floor(3.0 * progress));
        drops = std::clamp(drops, 0, 2);
        return schedule.initial_lr * std::pow(10.0, -drops);
    }
    const long total_steps = static_cast<long>(total_epochs) * steps_per_epoch;
    const long warmup_steps = static_cast<long>(schedule.warmup_epochs) * steps_per_epoch;
    const long t = static_cast<long>(epoch) * steps_per_epoch + step_in_epoch;
    if (t < warmup_steps)
        return kWarmupFloorLr +
               (schedule.peak_lr - kWarmupFloorLr) * static_cast<double>(t) / static_cast<double>(warmup_steps);
    const long decay_steps = total_steps - 1 - warmup_steps;
    if (decay_steps <= 0) return schedule.peak_lr;
    const double phase = static_cast<double>(t - warmup_steps) / static_cast<double>(decay_steps);
    return schedule.peak_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * phase));
}

// Fan-in-scaled uniform init: every weight and bias of layer l is uniform on
// [-sqrt(1/in_l), sqrt(1/in_l)); layernorm gains start at 1, offsets at 0.
template <typename T = float>
ModelWeights<T> init_params(const Architecture& arch, std::uint64_t seed) {
    ModelWeights<T> w = ModelWeights<T>::zeros(arch);
    for (int l = 1; l <= arch.depth; ++l) {
        Layer<T>& layer = w.layers[static_cast<std::size_t>(l - 1)];
        const double bound = std::sqrt(1.0 / arch.layer_in(l));
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
                layer.weight(i, j) =
                    static_cast<T>((2.0 * counter_uniform(seed, 0x77ULL, l, i, j) - 1.0) * bound);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
            layer.bias(i) = static_cast<T>((2.0 * counter_uniform(seed, 0xB1ULL, l, i) - 1.0) * bound);
        if (layer.has_norm()) {
            layer.gain.setOnes();
            layer.offset.setZero();
        }
    }
    return w;
}

namespace detail {

// Forward pass retaining what backward needs.
template <typename T>
struct ForwardTape {
    std::vector<MatX<T>> activations;  // activations[l] = input to layer l+1; [0] = batch inputs
    std::vector<MatX<T>> pre_relu;     // per hidden layer: values fed to relu
    std::vector<MatX<T>> normalized;   // per hidden layer with norm: (z - mu) / std
    std::vector<VecX<T>> inv_std;      // per hidden layer with norm: 1/std per row
    MatX<T> logits;
};

template <typename T>
void forward_tape(const ModelWeights<T>& w, const MatX<T>& inputs, ForwardTape<T>& tape) {
    const int depth = w.arch.depth;
    tape.activations.assign(static_cast<std::size_t>(depth), {});
    tape.pre_relu.assign(static_cast<std::size_t>(depth - 1), {});
    tape.normalized.assign(static_cast<std::size_t>(depth - 1), {});
    tape.inv_std.assign(static_cast<std::size_t>(depth - 1), {});
    tape.activations[0] = inputs;
    for (int l = 1; l <= depth; ++l) {
        const Layer<T>& layer = w.layers[static_cast<std::size_t>(l - 1)];
        MatX<T> z = tape.activations[static_cast<std::size_t>(l - 1)] * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        if (l == depth) {
            tape.logits = std::move(z);
            break;
        }
        const std::size_t h = static_cast<std::size_t>(l - 1);
        if (layer.has_norm()) {
            const Eigen::Index width = z.cols();
            MatX<T>& zhat = tape.normalized[h];
            zhat.resize(z.rows(), z.cols());
            VecX<T>& inv_std = tape.inv_std[h];
            inv_std.resize(z.rows());
            const T eps = static_cast<T>(kLayerNormEpsilon);
            for (Eigen::Index r = 0; r < z.rows(); ++r) {
                const T mean = z.row(r).mean();
                const T var = (z.row(r).array() - mean).square().sum() / static_cast<T>(width);
                const T is = T(1) / std::sqrt(var + eps);
                inv_std(r) = is;
                zhat.row(r) = ((z.row(r).array() - mean) * is).matrix();
            }
            z = (zhat.array().rowwise() * layer.gain.transpose().array()).matrix();
            z.rowwise() += layer.offset.transpose();
        }
        tape.pre_relu[h] = z;
        tape.activations[static_cast<std::size_t>(l)] = z.cwiseMax(T(0));
    }
}

// Softmax cross-entropy over a batch: total loss (double) and d loss / d logits
// for the *sum* (not mean) of per-sample losses.
template <typename T>
double softmax_xent_backward(const MatX<T>& logits, const int* labels, Eigen::Index count, MatX<T>& dlogits) {
    double loss_sum = 0.0;
    dlogits.resize(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < count; ++r) {
        const T max_logit = logits.row(r).maxCoeff();
        double denom = 0.0;
        for (Eigen::Index c = 0; c < logits.cols(); ++c)
            denom += std::exp(static_cast<double>(logits(r, c) - max_logit));
        const int label = labels[r];
        loss_sum += std::log(denom) - static_cast<double>(logits(r, label) - max_logit);
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            const double p = std::exp(static_cast<double>(logits(r, c) - max_logit)) / denom;
            dlogits(r, c) = static_cast<T>(p) - static_cast<T>(c == label ? 1 : 0);
        }
    }
    return loss_sum;
}

}  // namespace detail

// Mean cross-entropy on a batch, plus gradients in the same container shape
// as the weights (weight decay not included). Exposed for gradient checking.
template <typename T>
std::pair<double, ModelWeights<T>> cross_entropy_gradients(const ModelWeights<T>& w, const MatX<T>& inputs,
                                                           const std::vector<int>& labels) {
    w.validate();
    if (inputs.rows() != static_cast<Eigen::Index>(labels.size()))
        throw DimensionError("gradients: inputs and labels disagree on batch size");
    if (inputs.cols() != w.arch.input_dim)
        throw DimensionError("gradients: input width does not match architecture");
    const Eigen::Index batch = inputs.rows();
    const T inv_batch = T(1) / static_cast<T>(batch);

    detail::ForwardTape<T> tape;
    detail::forward_tape(w, inputs, tape);

    MatX<T> delta;
    const double loss = detail::softmax_xent_backward(tape.logits, labels.data(), batch, delta) /
                        static_cast<double>(batch);
    delta *= inv_batch;

    ModelWeights<T> grads = ModelWeights<T>::zeros(w.arch);
    for (int l = w.arch.depth; l >= 1; --l) {
        const Layer<T>& layer = w.layers[static_cast<std::size_t>(l - 1)];
        Layer<T>& grad = grads.layers[static_cast<std::size_t>(l - 1)];
        grad.weight.noalias() = delta.transpose() * tape.activations[static_cast<std::size_t>(l - 1)];
        grad.bias = delta.colwise().sum().transpose();
        if (l == 1) break;
        MatX<T> dprev = delta * layer.weight;  // gradient w.r.t. this layer's input activation

        // Backprop through relu (+ optional layernorm) of layer l-1.
        const std::size_t h = static_cast<std::size_t>(l - 2);
        const Layer<T>& prev = w.layers[h];
        MatX<T> dy =
            (tape.pre_relu[h].array() > T(0)).select(dprev, MatX<T>::Zero(dprev.rows(), dprev.cols()));
        if (prev.has_norm()) {
            Layer<T>& prev_grad = grads.layers[h];
            prev_grad.gain = (dy.array() * tape.normalized[h].array()).colwise().sum().transpose();
            prev_grad.offset = dy.colwise().sum().transpose();
            MatX<T> dzhat = (dy.array().rowwise() * prev.gain.transpose().array()).matrix();
            const T width = static_cast<T>(dzhat.cols());
            delta.resize(dzhat.rows(), dzhat.cols());
            for (Eigen::Index r = 0; r < dzhat.rows(); ++r) {
                const T m1 = dzhat.row(r).sum() / width;
                const T m2 = (dzhat.row(r).array() * tape.normalized[h].row(r).array()).sum() / width;
                delta.row(r) = ((dzhat.row(r).array() - m1 - tape.normalized[h].row(r).array() * m2) *
                                tape.inv_std[h](r))
                                   .matrix();
            }
        } else {
            delta = std::move(dy);
        }
    }
    return {loss, std::move(grads)};
}

struct TrainTrace {
    std::vector<double> epoch_mean_loss;
};

// SGD with momentum; weight decay applies to weight matrices only. Batch
// order reshuffles every epoch from cfg.seed. The last partial batch is kept.
template <typename T>
ModelWeights<T> train(const ModelWeights<T>& init, const Dataset<T>& data, const TrainConfig& cfg,
                      TrainTrace* trace = nullptr) {
    cfg.validate();
    init.validate();
    if (init.arch.input_dim != data.spec.input_dim || init.arch.num_classes != data.spec.num_classes)
        throw DimensionError("train: architecture and dataset dimensions disagree");
    if (cfg.epochs == 0) return init;

    ModelWeights<T> w = init;
    ModelWeights<T> velocity = ModelWeights<T>::zeros(init.arch);
    const int n = data.spec.train_size;
    const int steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    MatX<T> batch_x;
    std::vector<int> batch_y;
    const T momentum = static_cast<T>(cfg.momentum);
    const T decay = static_cast<T>(cfg.weight_decay);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SplitMix64 rng(hash_mix(cfg.seed, 0xBA7C4ULL, epoch));
        shuffle(order, rng);
        double epoch_loss_sum = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            const int begin = step * cfg.batch_size;
            const int count = std::min(cfg.batch_size, n - begin);
            batch_x.resize(count, data.spec.input_dim);
            batch_y.resize(static_cast<std::size_t>(count));
            for (int r = 0; r < count; ++r) {
                const int src = order[static_cast<std::size_t>(begin + r)];
                batch_x.row(r) = data.train_x.row(src);
                batch_y[static_cast<std::size_t>(r)] = data.train_y[static_cast<std::size_t>(src)];
            }

            auto [loss, grads] = cross_entropy_gradients(w, batch_x, batch_y);
            if (!std::isfinite(loss))
                throw DivergenceError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
            epoch_loss_sum += loss * count;

            const T lr = static_cast<T>(lr_at(cfg.schedule, epoch, step, steps_per_epoch, cfg.epochs));
            for (std::size_t li = 0; li < w.layers.size(); ++li) {
                Layer<T>& layer = w.layers[li];
                Layer<T>& g = grads.layers[li];
                Layer<T>& v = velocity.layers[li];
                if (decay != T(0)) g.weight += decay * layer.weight;
                v.weight = momentum * v.weight + g.weight;
                layer.weight -= lr * v.weight;
                v.bias = momentum * v.bias + g.bias;
                layer.bias -= lr * v.bias;
                if (layer.has_norm()) {
                    v.gain = momentum * v.gain + g.gain;
                    layer.gain -= lr * v.gain;
                    v.offset = momentum * v.offset + g.offset;
                    layer.offset -= lr * v.offset;
                }
            }
        }
        if (trace) trace->epoch_mean_loss.push_back(epoch_loss_sum / n);
    }
    return w;
}

}  // namespace modecomb
