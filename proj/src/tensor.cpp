#include "syllab/tensor.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "syllab/error.hpp"

namespace syllab {

namespace {

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// SplitMix64 finalizer; decorrelates nearby seeds and stream ids.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != element_count(shape_)) {
        throw ShapeError("tensor of shape " + shape_string(shape_) + " given " + std::to_string(data_.size()) +
                         " values");
    }
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Tensor::squared_norm() const noexcept {
    double acc = 0.0;
    for (double v : data_) acc += v * v;
    return acc;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
    out << ']';
    return out.str();
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), engine_(mix64(seed ^ mix64(stream + 0x51ED270B27F5A1C3ULL))) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw ShapeError("Rng::below requires bound >= 1");
    // Reject the top partial block of 2^64 so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

double Rng::normal() {
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor glorot_uniform_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in == 0 || fan_out == 0) throw ShapeError("glorot_uniform_init: fan_in and fan_out must be >= 1");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor out({fan_out, fan_in});
    for (double& v : out.values()) v = rng.uniform(-limit, limit);
    return out;
}

AdamState AdamState::for_parameter(const Tensor& param, AdamHyperparameters hyper) {
    return AdamState{0, Tensor(param.shape()), Tensor(param.shape()), hyper};
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
    if (param.shape() != grad.shape() || state.first_moment.shape() != param.shape() ||
        state.second_moment.shape() != param.shape()) {
        throw ShapeError("adam_step: parameter " + shape_string(param.shape()) + " vs gradient " +
                         shape_string(grad.shape()));
    }
    if (!grad.all_finite()) throw NumericError("adam_step: non-finite gradient");

    const auto& h = state.hyper;
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(h.beta1, t);
    const double correction2 = 1.0 - std::pow(h.beta2, t);
    double* p = param.data();
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
    const double* g = grad.data();
    for (std::size_t i = 0, n = param.size(); i < n; ++i) {
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        p[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
}

double clip_global_norm(std::span<Tensor* const> grads, double threshold) {
    if (!(threshold > 0.0)) throw ShapeError("clip_global_norm: threshold must be positive");
    double total = 0.0;
    for (const Tensor* g : grads) total += g->squared_norm();
    const double norm = std::sqrt(total);
    if (!std::isfinite(norm)) throw NumericError("clip_global_norm: non-finite gradient norm");
    if (norm > threshold) {
        const double scale = threshold / norm;
        for (Tensor* g : grads) {
            for (double& v : g->values()) v *= scale;
        }
    }
    return norm;
}

Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ShapeError("dropout_mask: rate must be in [0, 1)");
    Tensor mask(shape, 1.0);
    if (rate == 0.0) return mask;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& v : mask.values()) v = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

double GradientCheckResult::max_tensor_relative_error() const {
    double worst = 0.0;
    for (double e : tensor_relative_errors) worst = std::isfinite(e) ? std::max(worst, e) : e;
    return worst;
}

GradientCheckResult gradient_check(const std::function<double()>& loss,
                                   std::span<Tensor* const> params,
                                   std::span<const Tensor* const> analytic,
                                   double epsilon) {
    if (params.size() != analytic.size()) throw ShapeError("gradient_check: parameter/gradient count mismatch");
    GradientCheckResult result;
    for (std::size_t t = 0; t < params.size(); ++t) {
        Tensor& p = *params[t];
        const Tensor& g = *analytic[t];
        if (p.shape() != g.shape()) {
            throw ShapeError("gradient_check: tensor " + std::to_string(t) + " shape mismatch");
        }
        double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            p[i] = saved + epsilon;
            const double plus = loss();
            p[i] = saved - epsilon;
            const double minus = loss();
            p[i] = saved;
            const double numeric = (plus - minus) / (2.0 * epsilon);
            const double a = g[i];
            diff_sq += (a - numeric) * (a - numeric);
            a_sq += a * a;
            n_sq += numeric * numeric;
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            ++result.checked;
            if (rel > result.max_relative_error || !std::isfinite(rel)) {
                result.max_relative_error = rel;
                result.worst_tensor = t;
                result.worst_index = i;
                result.analytic = a;
                result.numeric = numeric;
            }
        }
        result.tensor_relative_errors.push_back(std::sqrt(diff_sq) /
                                                std::max(1e-8, std::sqrt(a_sq) + std::sqrt(n_sq)));
    }
    return result;
}

}  // namespace syllab
