#pragma once
// The BiLSTM-CNN encoder: phone embeddings feed a bidirectional LSTM and a
// stack of causal convolution + max-pool blocks; their outputs are
// concatenated per position and projected to two emission scores.
//
// All activations are time-major ({positions, features}). Only the first
// true_len positions are ever computed; emission rows past true_len are zero.
// Because the convolution and pooling windows look only leftwards and the
// backward LSTM starts at true_len - 1, this is exactly the masked model.
//
// Every layer has a hand-written backward pass. Gradients are accumulated
// (+=) into a ModelParameters of the same shape.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "syllab/sequence_output.hpp"
#include "syllab/tensor.hpp"

namespace syllab {

enum class OutputHead { crf, softmax };
enum class Preset { base, small, base_softmax };
enum class Mode { train, eval };

std::string_view to_string(OutputHead head);
OutputHead output_head_from_string(std::string_view name);
std::string_view to_string(Preset preset);
Preset preset_from_string(std::string_view name);

struct ModelConfig {
    std::size_t embedding_dim = 300;
    std::size_t lstm_dim = 300;
    std::size_t conv_blocks = 2;
    std::size_t conv_filters = 200;
    std::size_t conv_width = 3;
    std::size_t pool_size = 2;
    double dropout_rate = 0.25;
    OutputHead output_head = OutputHead::crf;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 120;
    std::size_t patience = 10;
    double clip_threshold = 1.0;
    double learning_rate = 0.001;
    // Initial value of the LSTM forget-gate bias.
    double forget_bias = 1.0;

    static ModelConfig preset(Preset preset);

    // Throws ShapeError naming the first offending field.
    void validate() const;

    std::size_t feature_dim() const { return 2 * lstm_dim + conv_filters; }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Gate rows are stacked in the order input, forget, candidate, output.
struct LstmWeights {
    Tensor input_weights;      // {4l, in}
    Tensor recurrent_weights;  // {4l, l}
    Tensor bias;               // {4l}

    std::size_t hidden_dim() const { return recurrent_weights.dim(1); }
    std::size_t input_dim() const { return input_weights.dim(1); }
};

// filters(j, k * in + c) weights input channel c at window offset k, where
// offset w-1 is the current position.
struct ConvBlock {
    Tensor filters;  // {f, w * in}
    Tensor bias;     // {f}
};

struct ModelParameters {
    OutputHead head = OutputHead::crf;
    Tensor embeddings;  // {V, d}
    LstmWeights forward_lstm;
    LstmWeights backward_lstm;
    std::vector<ConvBlock> conv;
    Tensor projection;       // {2, 2l + f}
    Tensor projection_bias;  // {2}
    CrfParameters crf;       // only trained and serialized with the CRF head

    // Glorot-uniform weights, zero biases, forget-gate bias from the config,
    // zero CRF scores. Draw order: embeddings, forward W, U, backward W, U,
    // conv filters by block, projection.
    static ModelParameters initialize(const ModelConfig& config, std::size_t vocab_size, Rng& rng);
    static ModelParameters zeros(const ModelConfig& config, std::size_t vocab_size);

    // Fixed order used by the optimizer, gradient checks and checkpoints.
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
    std::vector<std::string> tensor_names() const;

    void set_zero();
    std::size_t scalar_count() const;
    std::size_t vocab_size() const { return embeddings.dim(0); }
};

std::size_t count_parameters(const ModelConfig& config, std::size_t vocab_size);

// --- layers -----------------------------------------------------------------

// Row t of the result is embeddings[indices[t]]; shape {indices.size(), d}.
Tensor embed(std::span<const int> indices, const Tensor& embeddings);

struct LstmStep {
    std::vector<double> gates;  // activated i, f, g, o; 4l
    std::vector<double> cell;   // l
    std::vector<double> hidden; // l
};

LstmStep lstm_cell(std::span<const double> x, std::span<const double> h_prev, std::span<const double> c_prev,
                   const LstmWeights& weights);

struct LstmStepGradients {
    std::vector<double> d_input;   // in
    std::vector<double> d_hidden;  // l, w.r.t. h_prev
    std::vector<double> d_cell;    // l, w.r.t. c_prev
};

// Back-propagates dL/dh and dL/dc of one step; weight gradients accumulate
// into `grads`.
LstmStepGradients lstm_cell_backward(std::span<const double> x, std::span<const double> h_prev,
                                     std::span<const double> c_prev, const LstmStep& step,
                                     std::span<const double> d_hidden, std::span<const double> d_cell,
                                     const LstmWeights& weights, LstmWeights& grads);

// x: {n, d}. Returns {n, 2l}: row t is [forward h_t, backward h_t] for
// t < true_len and zeros afterwards.
Tensor bilstm(const Tensor& x, std::size_t true_len, const LstmWeights& forward, const LstmWeights& backward);

// --- whole encoder ----------------------------------------------------------

struct LstmCache {
    Tensor gates;   // {L, 4l}
    Tensor cells;   // {L, l}
    Tensor hidden;  // {L, l}
};

struct ConvCache {
    Tensor padded_input;                   // {w - 1 + L, in}
    Tensor activation;                     // {L, f}, post-ReLU
    std::vector<std::size_t> pool_source;  // L * f, time index that won each pool window
    Tensor output;                         // {L, f}
};

// input: {n, in}. Causal convolution (w-1 zero rows padded in front), ReLU,
// then stride-1 max pool over [t - pool + 1, t]; the first maximum wins a
// tied window. Returns {n, f}.
Tensor conv_block(const Tensor& input, const ConvBlock& block, std::size_t pool_size, ConvCache* cache = nullptr);

// d_output: {n, f}. Filter and bias gradients accumulate into `grads`,
// the input gradient into d_input ({n, in}).
void conv_block_backward(const ConvCache& cache, const Tensor& d_output, const ConvBlock& block, ConvBlock& grads,
                         Tensor& d_input);

struct ForwardCache {
    std::size_t length = 0;
    Tensor embedded;    // {L, d}
    Tensor lstm_input;  // embedded * dropout mask in train mode
    Tensor dropout;     // {L, d} mask; empty in eval mode or with rate 0
    LstmCache forward_lstm;
    LstmCache backward_lstm;
    std::vector<ConvCache> conv;
    Tensor features;  // {L, 2l + f}
};

// Returns emissions {indices.size(), 2}. Train mode draws a dropout mask from
// `rng` (required when dropout_rate > 0). Pass a cache to enable backward.
Tensor encode(std::span<const int> indices, std::size_t true_len, const ModelParameters& params,
              const ModelConfig& config, Mode mode, Rng* rng = nullptr, ForwardCache* cache = nullptr);

void encode_backward(const ForwardCache& cache, std::span<const int> indices, const Tensor& d_emissions,
                     const ModelParameters& params, const ModelConfig& config, ModelParameters& grads);

}  // namespace syllab
