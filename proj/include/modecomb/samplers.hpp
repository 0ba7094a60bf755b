#pragma once

// Coefficient-vector distributions over the hypercube spanned by an aligned
// model pair, plus the beyond-cube families (centered boxes, extrapolation).
// Orientation convention, applied uniformly: the interpolation parameter at 0
// reproduces model A (v = all-ones), at its far end model B.
//
// Every variate is a pure function of (rng_seed, draw_index, coordinate), so
// sampling is deterministic and order-independent under parallel evaluation.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "modecomb/errors.hpp"
#include "modecomb/net.hpp"
#include "modecomb/rng.hpp"

namespace modecomb {

struct SamplerSpec {
    enum class Variant {
        scalar,        // v = (1 - lambda) * 1,  lambda in [0, 1]
        uniform_band,  // v_i ~ U[0.5 - s, 0.5 + s],  s in [0, 0.5]
        subcube,       // uniform on the corner cube selected by lambda in [0, 1]
        hyperplane,    // v_i ~ truncated exponential on [0,1] with mean 1 - alpha
        bernoulli,     // v_i in {0, 1},  P(v_i = 0) = p
        stitch,        // v_i = 0 for layers <= cut_layer, 1 above
        centered_box,  // v_i ~ U[1 - s, 1 + s],  s >= 0
        extrapolate,   // v = (1 - lambda) * 1,  lambda in [-1, 2]
        min_vertex,    // produced by min_max_vertex, never sampled
        max_vertex,
    };

    Variant variant = Variant::scalar;
    double param = 0.0;  // lambda / s / alpha / p, by variant
    int cut_layer = 0;   // stitch only
    std::uint64_t rng_seed = 0;

    static SamplerSpec scalar(double lambda, std::uint64_t seed = 0) { return {Variant::scalar, lambda, 0, seed}; }
    static SamplerSpec uniform_band(double s, std::uint64_t seed) { return {Variant::uniform_band, s, 0, seed}; }
    static SamplerSpec subcube(double lambda, std::uint64_t seed) { return {Variant::subcube, lambda, 0, seed}; }
    static SamplerSpec hyperplane(double alpha, std::uint64_t seed) { return {Variant::hyperplane, alpha, 0, seed}; }
    static SamplerSpec bernoulli(double p, std::uint64_t seed) { return {Variant::bernoulli, p, 0, seed}; }
    static SamplerSpec stitch(int cut_layer) { return {Variant::stitch, 0.0, cut_layer, 0}; }
    static SamplerSpec centered_box(double s, std::uint64_t seed) { return {Variant::centered_box, s, 0, seed}; }
    static SamplerSpec extrapolate(double lambda) { return {Variant::extrapolate, lambda, 0, 0}; }

    // True for variants whose draws are non-degenerate distributions.
    bool stochastic() const {
        switch (variant) {
            case Variant::uniform_band:
            case Variant::subcube:
            case Variant::hyperplane:
            case Variant::bernoulli:
            case Variant::centered_box:
                return true;
            default:
                return false;
        }
    }

    void validate() const {
        switch (variant) {
            case Variant::scalar:
            case Variant::subcube:
                if (param < 0.0 || param > 1.0)
                    throw ValidationError("sampler: interpolation parameter must lie in [0, 1]");
                break;
            case Variant::uniform_band:
                if (param < 0.0 || param > 0.5)
                    throw ValidationError("sampler: band half-width must lie in [0, 0.5]");
                break;
            case Variant::hyperplane:
                if (!(param > 0.0 && param < 1.0))
                    throw ValidationError("sampler: hyperplane mean must lie in (0, 1)");
                break;
            case Variant::bernoulli:
                if (param < 0.0 || param > 1.0)
                    throw ValidationError("sampler: Bernoulli parameter must lie in [0, 1]");
                break;
            case Variant::stitch:
                if (cut_layer < 0) throw ValidationError("sampler: stitch cut layer must be nonnegative");
                break;
            case Variant::centered_box:
                if (param < 0.0) throw ValidationError("sampler: box half-width must be nonnegative");
                break;
            case Variant::extrapolate:
                if (param < -1.0 || param > 2.0)
                    throw ValidationError("sampler: extrapolation parameter must lie in [-1, 2]");
                break;
            case Variant::min_vertex:
            case Variant::max_vertex:
                break;
        }
    }
};

inline const char* sampler_name(SamplerSpec::Variant v) {
    switch (v) {
        case SamplerSpec::Variant::scalar: return "scalar";
        case SamplerSpec::Variant::uniform_band: return "uniform_band";
        case SamplerSpec::Variant::subcube: return "subcube";
        case SamplerSpec::Variant::hyperplane: return "hyperplane";
        case SamplerSpec::Variant::bernoulli: return "bernoulli";
        case SamplerSpec::Variant::stitch: return "stitch";
        case SamplerSpec::Variant::centered_box: return "centered_box";
        case SamplerSpec::Variant::extrapolate: return "extrapolate";
        case SamplerSpec::Variant::min_vertex: return "min_vertex";
        case SamplerSpec::Variant::max_vertex: return "max_vertex";
    }
    return "?";
}

struct CoefficientVector {
    std::vector<double> v;
    SamplerSpec provenance;
};

// Exponential distribution truncated to [0, 1]. rate > 0 skews mass toward 0,
// rate < 0 toward 1, rate == 0 is the uniform limit. Closed-form mean:
// 1/rate - 1/(e^rate - 1).
struct TruncExpSolver {
    double target_mean = 0.5;
    double rate = 0.0;
    double tolerance = 1e-10;

    static double mean_for_rate(double rate) {
        if (std::abs(rate) < 1e-5) {
            // Series around 0; the closed form loses precision there.
            return 0.5 - rate / 12.0 + rate * rate * rate / 720.0;
        }
        return 1.0 / rate - 1.0 / std::expm1(rate);
    }

    static TruncExpSolver from_mean(double alpha, double tolerance = 1e-10) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ValidationError("truncexp: mean must lie in (0, 1)");
        TruncExpSolver solver;
        solver.target_mean = alpha;
        solver.tolerance = tolerance;
        if (alpha == 0.5) return solver;

        // mean_for_rate is strictly decreasing; bracket then bisect.
        double hi = 1.0;
        while (mean_for_rate(hi) > alpha) hi *= 2.0;
        double lo = -1.0;
        while (mean_for_rate(lo) < alpha) lo *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double m = mean_for_rate(mid);
            if (std::abs(m - alpha) < tolerance && it > 20) {
                solver.rate = mid;
                return solver;
            }
            if (m > alpha)
                lo = mid;
            else
                hi = mid;
        }
        solver.rate = 0.5 * (lo + hi);
        return solver;
    }

    // Inverse CDF; u in [0, 1).
    double sample(double u) const {
        if (std::abs(rate) < 1e-9) return u;
        return -std::log1p(u * std::expm1(-rate)) / rate;
    }
};

// Rate of the max-entropy distribution on [0,1] with the given mean, accurate
// to 1e-10 in the mean.
inline double solve_truncexp_rate(double alpha) {
    return TruncExpSolver::from_mean(alpha).rate;
}

// Draws one coefficient vector. The layout carries d and, for the stitch
// variant, which flat span belongs to which layer.
inline CoefficientVector sample_coefficients(const SamplerSpec& spec, const FlatLayout& layout,
                                             std::uint64_t draw_index) {
    spec.validate();
    CoefficientVector out;
    out.provenance = spec;
    out.v.resize(layout.total);
    auto uniform = [&](std::size_t i) { return counter_uniform(spec.rng_seed, draw_index, i); };

    switch (spec.variant) {
        case SamplerSpec::Variant::scalar:
        case SamplerSpec::Variant::extrapolate: {
            const double value = 1.0 - spec.param;
            std::fill(out.v.begin(), out.v.end(), value);
            break;
        }
        case SamplerSpec::Variant::uniform_band: {
            const double lo = 0.5 - spec.param;
            const double width = 2.0 * spec.param;
            for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = lo + width * uniform(i);
            break;
        }
        case SamplerSpec::Variant::subcube: {
            const double lo = spec.param <= 0.5 ? 1.0 - 2.0 * spec.param : 0.0;
            const double hi = spec.param <= 0.5 ? 1.0 : 2.0 * (1.0 - spec.param);
            const double width = hi - lo;
            for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = lo + width * uniform(i);
            break;
        }
        case SamplerSpec::Variant::hyperplane: {
            const TruncExpSolver solver = TruncExpSolver::from_mean(1.0 - spec.param);
            for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = solver.sample(uniform(i));
            break;
        }
        case SamplerSpec::Variant::bernoulli: {
            for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = uniform(i) < spec.param ? 0.0 : 1.0;
            break;
        }
        case SamplerSpec::Variant::stitch: {
            if (layout.spans.empty())
                throw ValidationError("sampler: stitch needs a layered flat layout");
            if (spec.cut_layer > layout.spans.back().layer)
                throw ValidationError("sampler: stitch cut layer exceeds network depth");
            for (const auto& span : layout.spans) {
                const double value = span.layer <= spec.cut_layer ? 0.0 : 1.0;
                std::fill(out.v.begin() + static_cast<std::ptrdiff_t>(span.offset),
                          out.v.begin() + static_cast<std::ptrdiff_t>(span.offset + span.size), value);
            }
            break;
        }
        case SamplerSpec::Variant::centered_box: {
            const double lo = 1.0 - spec.param;
            const double width = 2.0 * spec.param;
            for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = lo + width * uniform(i);
            break;
        }
        case SamplerSpec::Variant::min_vertex:
        case SamplerSpec::Variant::max_vertex:
            throw ValidationError("sampler: vertex coefficients come from min_max_vertex");
    }
    return out;
}

}  // namespace modecomb
