#pragma once
// Minimal dense-array core: value-type tensors, a reproducible RNG, Adam,
// global-norm clipping, inverted dropout and a central-difference gradient
// checker.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace syllab {

using Shape = std::vector<std::size_t>;

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Row-major 2-D access.
    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double* row(std::size_t r) { return data_.data() + r * shape_[1]; }
    const double* row(std::size_t r) const { return data_.data() + r * shape_[1]; }

    void fill(double value);
    bool all_finite() const noexcept;
    double squared_norm() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

std::string shape_string(const Shape& shape);

// Seeded pseudo-random stream. Raw bits come from std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the mappings to reals and bounded
// integers below are done here rather than through <random> distributions,
// whose algorithms are implementation-defined. Together that gives the same
// stream on every conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer on [0, bound); bound >= 1. Unbiased (rejection sampling).
    std::uint64_t below(std::uint64_t bound);
    // Standard normal via Box-Muller.
    double normal();

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

// Values i.i.d. uniform on +-sqrt(6 / (fan_in + fan_out)); shape {fan_out, fan_in}.
Tensor glorot_uniform_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct AdamHyperparameters {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::uint64_t step_count = 0;
    Tensor first_moment;
    Tensor second_moment;
    AdamHyperparameters hyper;

    static AdamState for_parameter(const Tensor& param, AdamHyperparameters hyper = {});
};

// Bias-corrected Adam update in place. Throws ShapeError on mismatched shapes
// and NumericError on a non-finite gradient (param and state are untouched).
void adam_step(Tensor& param, const Tensor& grad, AdamState& state);

// Rescales all tensors by threshold / norm when their joint L2 norm exceeds
// threshold. Returns the norm before clipping.
double clip_global_norm(std::span<Tensor* const> grads, double threshold);

// Inverted dropout: each element is 0 with probability `rate`, else 1/(1-rate).
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_tensor = 0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
    // Per tensor: ||a - n|| / max(1e-8, ||a|| + ||n||) over all its elements.
    std::vector<double> tensor_relative_errors;

    double max_tensor_relative_error() const;
};

// Central differences (f(x+eps) - f(x-eps)) / 2eps against `analytic`, one
// element at a time; each element is restored exactly after probing. The
// relative error is |a - n| / max(1e-8, |a| + |n|).
GradientCheckResult gradient_check(const std::function<double()>& loss,
                                   std::span<Tensor* const> params,
                                   std::span<const Tensor* const> analytic,
                                   double epsilon = 1e-5);

}  // namespace syllab
