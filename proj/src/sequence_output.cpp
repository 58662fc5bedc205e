#include "syllab/sequence_output.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "syllab/error.hpp"

namespace syllab {

namespace {

double log_sum_exp(double a, double b) {
    const double m = std::max(a, b);
    if (m == -std::numeric_limits<double>::infinity()) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_emissions(const Tensor& emissions, std::size_t true_len) {
    if (emissions.rank() != 2 || emissions.dim(1) != kNumLabels) {
        throw ShapeError("emissions must have shape [n x 2], got " + shape_string(emissions.shape()));
    }
    if (true_len == 0 || true_len > emissions.dim(0)) {
        throw ShapeError("true_len " + std::to_string(true_len) + " outside [1, " + std::to_string(emissions.dim(0)) +
                         "]");
    }
}

void check_labels(std::span<const Label> labels, std::size_t true_len) {
    if (labels.size() < true_len) throw ShapeError("fewer labels than true_len");
    for (std::size_t t = 0; t < true_len; ++t) {
        if (labels[t] > 1) throw ShapeError("labels must be 0 or 1");
    }
}

using Lattice = std::vector<std::array<double, kNumLabels>>;

// alpha[t][k]: log-sum of all prefix scores ending in label k at position t.
Lattice forward_lattice(const Tensor& e, const CrfParameters& crf, std::size_t L) {
    Lattice alpha(L);
    for (std::size_t k = 0; k < kNumLabels; ++k) alpha[0][k] = crf.start[k] + e(0, k);
    for (std::size_t t = 1; t < L; ++t) {
        for (std::size_t b = 0; b < kNumLabels; ++b) {
            alpha[t][b] = log_sum_exp(alpha[t - 1][0] + crf.transition(0, b), alpha[t - 1][1] + crf.transition(1, b)) +
                          e(t, b);
        }
    }
    return alpha;
}

// beta[t][k]: log-sum of all suffix scores after position t given label k at t.
Lattice backward_lattice(const Tensor& e, const CrfParameters& crf, std::size_t L) {
    Lattice beta(L);
    beta[L - 1] = {0.0, 0.0};
    for (std::size_t t = L - 1; t-- > 0;) {
        for (std::size_t a = 0; a < kNumLabels; ++a) {
            beta[t][a] = log_sum_exp(crf.transition(a, 0) + e(t + 1, 0) + beta[t + 1][0],
                                     crf.transition(a, 1) + e(t + 1, 1) + beta[t + 1][1]);
        }
    }
    return beta;
}

}  // namespace

std::array<double, kNumLabels> softmax_position(double score0, double score1) {
    const double m = std::max(score0, score1);
    const double a = std::exp(score0 - m);
    const double b = std::exp(score1 - m);
    return {a / (a + b), b / (a + b)};
}

LabelPath softmax_decode(const Tensor& emissions, std::size_t true_len) {
    check_emissions(emissions, true_len);
    LabelPath path;
    path.labels.resize(true_len);
    for (std::size_t t = 0; t < true_len; ++t) {
        const double s0 = emissions(t, 0);
        const double s1 = emissions(t, 1);
        const Label y = s1 > s0 ? 1 : 0;
        path.labels[t] = y;
        path.score += emissions(t, y);
        // log max softmax = chosen - logsumexp
        path.log_probability += emissions(t, y) - log_sum_exp(s0, s1);
    }
    return path;
}

double softmax_nll(const Tensor& emissions, std::span<const Label> labels, std::size_t true_len, Tensor* d_emissions,
                   double scale) {
    check_emissions(emissions, true_len);
    check_labels(labels, true_len);
    double loss = 0.0;
    for (std::size_t t = 0; t < true_len; ++t) {
        const double s0 = emissions(t, 0);
        const double s1 = emissions(t, 1);
        loss += log_sum_exp(s0, s1) - emissions(t, labels[t]);
        if (d_emissions != nullptr) {
            const auto p = softmax_position(s0, s1);
            for (std::size_t k = 0; k < kNumLabels; ++k) {
                (*d_emissions)(t, k) += scale * (p[k] - (labels[t] == k ? 1.0 : 0.0));
            }
        }
    }
    return loss;
}

double crf_path_score(const Tensor& emissions, const CrfParameters& crf, std::span<const Label> labels,
                      std::size_t true_len) {
    check_emissions(emissions, true_len);
    check_labels(labels, true_len);
    double score = crf.start[labels[0]];
    for (std::size_t t = 0; t < true_len; ++t) {
        score += emissions(t, labels[t]);
        if (t > 0) score += crf.transition(labels[t - 1], labels[t]);
    }
    return score;
}

double crf_log_partition(const Tensor& emissions, const CrfParameters& crf, std::size_t true_len) {
    check_emissions(emissions, true_len);
    const auto alpha = forward_lattice(emissions, crf, true_len);
    return log_sum_exp(alpha.back()[0], alpha.back()[1]);
}

double crf_nll(const Tensor& emissions, const CrfParameters& crf, std::span<const Label> labels,
               std::size_t true_len) {
    return crf_log_partition(emissions, crf, true_len) - crf_path_score(emissions, crf, labels, true_len);
}

double crf_nll_backward(const Tensor& emissions, const CrfParameters& crf, std::span<const Label> labels,
                        std::size_t true_len, Tensor& d_emissions, CrfParameters& d_crf, double scale) {
    check_emissions(emissions, true_len);
    check_labels(labels, true_len);
    if (d_emissions.shape() != emissions.shape()) throw ShapeError("crf_nll_backward: gradient shape mismatch");
    const std::size_t L = true_len;
    const auto alpha = forward_lattice(emissions, crf, L);
    const auto beta = backward_lattice(emissions, crf, L);
    const double log_z = log_sum_exp(alpha.back()[0], alpha.back()[1]);

    for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t k = 0; k < kNumLabels; ++k) {
            const double marginal = std::exp(alpha[t][k] + beta[t][k] - log_z);
            const double gold = labels[t] == k ? 1.0 : 0.0;
            d_emissions(t, k) += scale * (marginal - gold);
            if (t == 0) d_crf.start[k] += scale * (marginal - gold);
        }
    }
    for (std::size_t t = 1; t < L; ++t) {
        for (std::size_t a = 0; a < kNumLabels; ++a) {
            for (std::size_t b = 0; b < kNumLabels; ++b) {
                const double pair =
                    std::exp(alpha[t - 1][a] + crf.transition(a, b) + emissions(t, b) + beta[t][b] - log_z);
                const double gold = (labels[t - 1] == a && labels[t] == b) ? 1.0 : 0.0;
                d_crf.transition(a, b) += scale * (pair - gold);
            }
        }
    }
    return log_z - crf_path_score(emissions, crf, labels, L);
}

LabelPath viterbi_decode(const Tensor& emissions, const CrfParameters& crf, std::size_t true_len) {
    check_emissions(emissions, true_len);
    const std::size_t L = true_len;
    std::vector<std::array<double, kNumLabels>> best(L);
    std::vector<std::array<Label, kNumLabels>> back(L);
    for (std::size_t k = 0; k < kNumLabels; ++k) best[0][k] = crf.start[k] + emissions(0, k);
    for (std::size_t t = 1; t < L; ++t) {
        for (std::size_t b = 0; b < kNumLabels; ++b) {
            const double via0 = best[t - 1][0] + crf.transition(0, b);
            const double via1 = best[t - 1][1] + crf.transition(1, b);
            back[t][b] = via1 > via0 ? 1 : 0;
            best[t][b] = std::max(via0, via1) + emissions(t, b);
        }
    }
    LabelPath path;
    path.labels.resize(L);
    Label y = best[L - 1][1] > best[L - 1][0] ? 1 : 0;
    path.score = best[L - 1][y];
    for (std::size_t t = L; t-- > 0;) {
        path.labels[t] = y;
        if (t > 0) y = back[t][y];
    }
    path.log_probability = std::min(0.0, path.score - crf_log_partition(emissions, crf, L));
    return path;
}

std::vector<LabelPath> brute_force_paths(const Tensor& emissions, const CrfParameters& crf, std::size_t true_len) {
    check_emissions(emissions, true_len);
    if (true_len > kMaxBruteForceLength) {
        throw ShapeError("brute_force_paths refuses true_len " + std::to_string(true_len) + " > " +
                         std::to_string(kMaxBruteForceLength));
    }
    const std::size_t count = std::size_t{1} << true_len;
    std::vector<LabelPath> paths(count);
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < count; ++mask) {
        LabelPath& p = paths[mask];
        p.labels.resize(true_len);
        for (std::size_t t = 0; t < true_len; ++t) p.labels[t] = static_cast<Label>((mask >> t) & 1U);
        p.score = crf_path_score(emissions, crf, p.labels, true_len);
        max_score = std::max(max_score, p.score);
    }
    double sum = 0.0;
    for (const auto& p : paths) sum += std::exp(p.score - max_score);
    const double log_z = max_score + std::log(sum);
    for (auto& p : paths) p.log_probability = p.score - log_z;
    return paths;
}

BruteForceSummary brute_force_summary(const Tensor& emissions, const CrfParameters& crf, std::size_t true_len) {
    auto paths = brute_force_paths(emissions, crf, true_len);
    BruteForceSummary summary;
    std::size_t best = 0;
    for (std::size_t i = 1; i < paths.size(); ++i) {
        if (paths[i].score > paths[best].score) best = i;
    }
    summary.log_partition = paths[best].score - paths[best].log_probability;
    summary.best = std::move(paths[best]);
    return summary;
}

}  // namespace syllab
