#pragma once
// Output heads over per-position emission scores.
//
// Emissions are a {n, 2} tensor, time-major: row t holds the scores of label 0
// (no boundary after phone t) and label 1 (boundary). Only rows < true_len are
// read; everything past true_len is padding.
//
// The linear-chain CRF scores a label path y over L = true_len positions as
//
//     score(y) = start[y0] + sum_t emission[t][y_t] + sum_{t>=1} transition[y_{t-1}][y_t]
//
// with no end score. p(y) = exp(score(y) - log Z). All CRF arithmetic is in
// log space. Ties in every argmax resolve toward label 0.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "syllab/lexicon.hpp"
#include "syllab/tensor.hpp"

namespace syllab {

inline constexpr std::size_t kNumLabels = 2;

struct CrfParameters {
    Tensor transition{{kNumLabels, kNumLabels}};  // transition(a, b): label a followed by b
    Tensor start{{kNumLabels}};

    friend bool operator==(const CrfParameters&, const CrfParameters&) = default;
};

struct LabelPath {
    std::vector<Label> labels;
    double score = 0.0;            // unnormalized path score
    double log_probability = 0.0;  // <= 0
};

std::array<double, kNumLabels> softmax_position(double score0, double score1);

// Independent per-position argmax; log_probability = sum_t log max softmax.
// score is the sum of the chosen emissions.
LabelPath softmax_decode(const Tensor& emissions, std::size_t true_len);

// Per-position cross entropy summed over true_len. When d_emissions is given,
// scale * dloss/demissions is added to it.
double softmax_nll(const Tensor& emissions, std::span<const Label> labels, std::size_t true_len,
                   Tensor* d_emissions = nullptr, double scale = 1.0);

double crf_path_score(const Tensor& emissions, const CrfParameters& crf, std::span<const Label> labels,
                      std::size_t true_len);

double crf_log_partition(const Tensor& emissions, const CrfParameters& crf, std::size_t true_len);

// log Z - score(labels).
double crf_nll(const Tensor& emissions, const CrfParameters& crf, std::span<const Label> labels,
               std::size_t true_len);

// crf_nll plus its gradient (forward-backward marginals minus gold counts),
// scaled by `scale` and accumulated into d_emissions and d_crf.
double crf_nll_backward(const Tensor& emissions, const CrfParameters& crf, std::span<const Label> labels,
                        std::size_t true_len, Tensor& d_emissions, CrfParameters& d_crf, double scale = 1.0);

LabelPath viterbi_decode(const Tensor& emissions, const CrfParameters& crf, std::size_t true_len);

// Exhaustive enumeration, the test oracle for the dynamic programs. Paths are
// ordered by the integer whose bit t is label t, so later positions are the
// most significant. Refuses true_len > 12.
inline constexpr std::size_t kMaxBruteForceLength = 12;
std::vector<LabelPath> brute_force_paths(const Tensor& emissions, const CrfParameters& crf, std::size_t true_len);

struct BruteForceSummary {
    double log_partition = 0.0;
    LabelPath best;  // first maximum in enumeration order (label 0 wins ties, last position first)
};
BruteForceSummary brute_force_summary(const Tensor& emissions, const CrfParameters& crf, std::size_t true_len);

}  // namespace syllab
