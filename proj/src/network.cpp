#include "syllab/network.hpp"

#include <algorithm>
#include <cmath>

#include "syllab/error.hpp"
#include "syllab/kernels.hpp"

namespace syllab {

std::string_view to_string(OutputHead head) { return head == OutputHead::crf ? "crf" : "softmax"; }

OutputHead output_head_from_string(std::string_view name) {
    if (name == "crf") return OutputHead::crf;
    if (name == "softmax") return OutputHead::softmax;
    throw ShapeError("unknown output head '" + std::string(name) + "'");
}

std::string_view to_string(Preset preset) {
    switch (preset) {
        case Preset::base: return "base";
        case Preset::small: return "small";
        case Preset::base_softmax: return "base-softmax";
    }
    return "base";
}

Preset preset_from_string(std::string_view name) {
    if (name == "base" || name == "Base") return Preset::base;
    if (name == "small" || name == "Small") return Preset::small;
    if (name == "base-softmax" || name == "base_softmax" || name == "BaseSoftmax") return Preset::base_softmax;
    throw ShapeError("unknown preset '" + std::string(name) + "'");
}

ModelConfig ModelConfig::preset(Preset preset) {
    ModelConfig c;  // defaults are the Base model
    if (preset == Preset::small) {
        c.conv_blocks = 1;
        c.conv_filters = 40;
        c.lstm_dim = 50;
        c.embedding_dim = 100;
    } else if (preset == Preset::base_softmax) {
        c.output_head = OutputHead::softmax;
    }
    return c;
}

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v < 1) throw ShapeError(std::string("config: ") + name + " must be >= 1");
    };
    positive(embedding_dim, "embedding_dim");
    positive(lstm_dim, "lstm_dim");
    positive(conv_blocks, "conv_blocks");
    positive(conv_filters, "conv_filters");
    positive(conv_width, "conv_width");
    positive(pool_size, "pool_size");
    positive(batch_size, "batch_size");
    positive(max_epochs, "max_epochs");
    positive(patience, "patience");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ShapeError("config: dropout_rate must be in [0, 1)");
    if (!(clip_threshold > 0.0) || !std::isfinite(clip_threshold)) {
        throw ShapeError("config: clip_threshold must be positive");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ShapeError("config: learning_rate must be positive");
    }
    if (!std::isfinite(forget_bias)) throw ShapeError("config: forget_bias must be finite");
}

// --- parameters -------------------------------------------------------------

namespace {

LstmWeights lstm_zeros(std::size_t in, std::size_t l) {
    return {Tensor({4 * l, in}), Tensor({4 * l, l}), Tensor({4 * l})};
}

std::size_t conv_input_channels(const ModelConfig& c, std::size_t block) {
    return block == 0 ? c.embedding_dim : c.conv_filters;
}

}  // namespace

ModelParameters ModelParameters::zeros(const ModelConfig& config, std::size_t vocab_size) {
    config.validate();
    if (vocab_size < 1) throw ShapeError("vocabulary must not be empty");
    const std::size_t d = config.embedding_dim, l = config.lstm_dim, f = config.conv_filters, w = config.conv_width;
    ModelParameters p;
    p.head = config.output_head;
    p.embeddings = Tensor({vocab_size, d});
    p.forward_lstm = lstm_zeros(d, l);
    p.backward_lstm = lstm_zeros(d, l);
    for (std::size_t b = 0; b < config.conv_blocks; ++b) {
        p.conv.push_back({Tensor({f, w * conv_input_channels(config, b)}), Tensor({f})});
    }
    p.projection = Tensor({kNumLabels, config.feature_dim()});
    p.projection_bias = Tensor({kNumLabels});
    return p;
}

ModelParameters ModelParameters::initialize(const ModelConfig& config, std::size_t vocab_size, Rng& rng) {
    ModelParameters p = zeros(config, vocab_size);
    const std::size_t d = config.embedding_dim, l = config.lstm_dim, f = config.conv_filters, w = config.conv_width;
    p.embeddings = glorot_uniform_init(d, vocab_size, rng);
    for (LstmWeights* lstm : {&p.forward_lstm, &p.backward_lstm}) {
        lstm->input_weights = glorot_uniform_init(d, 4 * l, rng);
        lstm->recurrent_weights = glorot_uniform_init(l, 4 * l, rng);
        for (std::size_t j = 0; j < l; ++j) lstm->bias[l + j] = config.forget_bias;
    }
    for (std::size_t b = 0; b < config.conv_blocks; ++b) {
        p.conv[b].filters = glorot_uniform_init(w * conv_input_channels(config, b), f, rng);
    }
    p.projection = glorot_uniform_init(config.feature_dim(), kNumLabels, rng);
    return p;
}

std::vector<Tensor*> ModelParameters::tensors() {
    std::vector<Tensor*> out{&embeddings,
                             &forward_lstm.input_weights,
                             &forward_lstm.recurrent_weights,
                             &forward_lstm.bias,
                             &backward_lstm.input_weights,
                             &backward_lstm.recurrent_weights,
                             &backward_lstm.bias};
    for (auto& block : conv) {
        out.push_back(&block.filters);
        out.push_back(&block.bias);
    }
    out.push_back(&projection);
    out.push_back(&projection_bias);
    if (head == OutputHead::crf) {
        out.push_back(&crf.transition);
        out.push_back(&crf.start);
    }
    return out;
}

std::vector<const Tensor*> ModelParameters::tensors() const {
    auto mutable_list = const_cast<ModelParameters*>(this)->tensors();
    return {mutable_list.begin(), mutable_list.end()};
}

std::vector<std::string> ModelParameters::tensor_names() const {
    std::vector<std::string> out{"embeddings",          "lstm_forward.input_weights",  "lstm_forward.recurrent_weights",
                                 "lstm_forward.bias",   "lstm_backward.input_weights", "lstm_backward.recurrent_weights",
                                 "lstm_backward.bias"};
    for (std::size_t b = 0; b < conv.size(); ++b) {
        out.push_back("conv" + std::to_string(b) + ".filters");
        out.push_back("conv" + std::to_string(b) + ".bias");
    }
    out.push_back("projection.weights");
    out.push_back("projection.bias");
    if (head == OutputHead::crf) {
        out.push_back("crf.transition");
        out.push_back("crf.start");
    }
    return out;
}

void ModelParameters::set_zero() {
    for (Tensor* t : tensors()) t->fill(0.0);
}

std::size_t ModelParameters::scalar_count() const {
    std::size_t n = 0;
    for (const Tensor* t : tensors()) n += t->size();
    return n;
}

std::size_t count_parameters(const ModelConfig& config, std::size_t vocab_size) {
    config.validate();
    const std::size_t d = config.embedding_dim, l = config.lstm_dim, f = config.conv_filters, w = config.conv_width;
    std::size_t n = vocab_size * d;
    n += 2 * (4 * l * d + 4 * l * l + 4 * l);
    for (std::size_t b = 0; b < config.conv_blocks; ++b) n += f * w * conv_input_channels(config, b) + f;
    n += kNumLabels * config.feature_dim() + kNumLabels;
    if (config.output_head == OutputHead::crf) n += kNumLabels * kNumLabels + kNumLabels;
    return n;
}

// --- LSTM -------------------------------------------------------------------

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// h_prev / c_prev may be null for the zero initial state.
void lstm_step(const double* x, const double* h_prev, const double* c_prev, const LstmWeights& w, double* gates,
               double* cell, double* hidden) {
    const auto& k = kernels::active();
    const std::size_t l = w.hidden_dim();
    const std::size_t in = w.input_dim();
    std::copy_n(w.bias.data(), 4 * l, gates);
    k.gemv(w.input_weights.data(), x, gates, 4 * l, in);
    if (h_prev != nullptr) k.gemv(w.recurrent_weights.data(), h_prev, gates, 4 * l, l);
    for (std::size_t j = 0; j < l; ++j) {
        const double i = sigmoid(gates[j]);
        const double f = sigmoid(gates[l + j]);
        const double g = std::tanh(gates[2 * l + j]);
        const double o = sigmoid(gates[3 * l + j]);
        gates[j] = i;
        gates[l + j] = f;
        gates[2 * l + j] = g;
        gates[3 * l + j] = o;
        cell[j] = i * g + (c_prev != nullptr ? f * c_prev[j] : 0.0);
        hidden[j] = o * std::tanh(cell[j]);
    }
}

// d_cell is read as the incoming gradient; on return d_hidden and d_cell hold
// the gradients w.r.t. h_prev and c_prev. d_input accumulates. dz is scratch (4l).
void lstm_step_backward(const double* x, const double* h_prev, const double* c_prev, const double* gates,
                        const double* cell, double* d_hidden, double* d_cell, const LstmWeights& w,
                        LstmWeights& grads, double* d_input, double* dz) {
    const auto& k = kernels::active();
    const std::size_t l = w.hidden_dim();
    const std::size_t in = w.input_dim();
    for (std::size_t j = 0; j < l; ++j) {
        const double i = gates[j], f = gates[l + j], g = gates[2 * l + j], o = gates[3 * l + j];
        const double tc = std::tanh(cell[j]);
        const double dc = d_cell[j] + d_hidden[j] * o * (1.0 - tc * tc);
        const double d_o = d_hidden[j] * tc;
        const double cp = c_prev != nullptr ? c_prev[j] : 0.0;
        dz[j] = dc * g * i * (1.0 - i);
        dz[l + j] = dc * cp * f * (1.0 - f);
        dz[2 * l + j] = dc * i * (1.0 - g * g);
        dz[3 * l + j] = d_o * o * (1.0 - o);
        d_cell[j] = dc * f;
    }
    k.axpy(1.0, dz, grads.bias.data(), 4 * l);
    k.ger(grads.input_weights.data(), dz, x, 4 * l, in);
    k.gemv_t(w.input_weights.data(), dz, d_input, 4 * l, in);
    std::fill_n(d_hidden, l, 0.0);
    if (h_prev != nullptr) {
        k.ger(grads.recurrent_weights.data(), dz, h_prev, 4 * l, l);
        k.gemv_t(w.recurrent_weights.data(), dz, d_hidden, 4 * l, l);
    }
}

void check_lstm_shapes(const LstmWeights& w, std::size_t in) {
    const std::size_t l = w.hidden_dim();
    if (w.input_weights.shape() != Shape{4 * l, in} || w.recurrent_weights.shape() != Shape{4 * l, l} ||
        w.bias.shape() != Shape{4 * l}) {
        throw ShapeError("LSTM weights inconsistent with input dimension " + std::to_string(in));
    }
}

// Runs one direction over positions [0, L); reverse walks L-1 down to 0.
void run_lstm(const Tensor& x, std::size_t L, const LstmWeights& w, bool reverse, LstmCache& cache) {
    const std::size_t l = w.hidden_dim();
    cache.gates = Tensor({L, 4 * l});
    cache.cells = Tensor({L, l});
    cache.hidden = Tensor({L, l});
    for (std::size_t s = 0; s < L; ++s) {
        const std::size_t t = reverse ? L - 1 - s : s;
        const bool first = s == 0;
        const std::size_t prev = reverse ? t + 1 : t - 1;
        lstm_step(x.row(t), first ? nullptr : cache.hidden.row(prev), first ? nullptr : cache.cells.row(prev), w,
                  cache.gates.row(t), cache.cells.row(t), cache.hidden.row(t));
    }
}

// d_hidden_out: {L, l} gradient on each step's output. d_x accumulates.
void run_lstm_backward(const Tensor& x, std::size_t L, const LstmWeights& w, bool reverse, const LstmCache& cache,
                       const std::vector<double>& d_hidden_out, std::size_t stride, std::size_t offset,
                       LstmWeights& grads, Tensor& d_x) {
    const std::size_t l = w.hidden_dim();
    std::vector<double> dh(l, 0.0), dc(l, 0.0), dz(4 * l);
    for (std::size_t s = L; s-- > 0;) {
        const std::size_t t = reverse ? L - 1 - s : s;
        const bool first = s == 0;
        const std::size_t prev = reverse ? t + 1 : t - 1;
        const double* out_grad = d_hidden_out.data() + t * stride + offset;
        for (std::size_t j = 0; j < l; ++j) dh[j] += out_grad[j];
        lstm_step_backward(x.row(t), first ? nullptr : cache.hidden.row(prev), first ? nullptr : cache.cells.row(prev),
                           cache.gates.row(t), cache.cells.row(t), dh.data(), dc.data(), w, grads, d_x.row(t),
                           dz.data());
    }
}

}  // namespace

LstmStep lstm_cell(std::span<const double> x, std::span<const double> h_prev, std::span<const double> c_prev,
                   const LstmWeights& weights) {
    const std::size_t l = weights.hidden_dim();
    check_lstm_shapes(weights, x.size());
    if (h_prev.size() != l || c_prev.size() != l) throw ShapeError("lstm_cell: state size mismatch");
    LstmStep step{std::vector<double>(4 * l), std::vector<double>(l), std::vector<double>(l)};
    lstm_step(x.data(), h_prev.data(), c_prev.data(), weights, step.gates.data(), step.cell.data(),
              step.hidden.data());
    return step;
}

LstmStepGradients lstm_cell_backward(std::span<const double> x, std::span<const double> h_prev,
                                     std::span<const double> c_prev, const LstmStep& step,
                                     std::span<const double> d_hidden, std::span<const double> d_cell,
                                     const LstmWeights& weights, LstmWeights& grads) {
    const std::size_t l = weights.hidden_dim();
    check_lstm_shapes(weights, x.size());
    if (d_hidden.size() != l || d_cell.size() != l) throw ShapeError("lstm_cell_backward: gradient size mismatch");
    LstmStepGradients out{std::vector<double>(x.size(), 0.0), std::vector<double>(d_hidden.begin(), d_hidden.end()),
                          std::vector<double>(d_cell.begin(), d_cell.end())};
    std::vector<double> dz(4 * l);
    lstm_step_backward(x.data(), h_prev.data(), c_prev.data(), step.gates.data(), step.cell.data(),
                       out.d_hidden.data(), out.d_cell.data(), weights, grads, out.d_input.data(), dz.data());
    return out;
}

Tensor bilstm(const Tensor& x, std::size_t true_len, const LstmWeights& forward, const LstmWeights& backward) {
    if (x.rank() != 2 || true_len > x.dim(0)) throw ShapeError("bilstm: bad input shape or true_len");
    check_lstm_shapes(forward, x.dim(1));
    check_lstm_shapes(backward, x.dim(1));
    const std::size_t l = forward.hidden_dim();
    if (backward.hidden_dim() != l) throw ShapeError("bilstm: directions differ in hidden size");
    Tensor out({x.dim(0), 2 * l});
    if (true_len == 0) return out;
    LstmCache fwd, bwd;
    run_lstm(x, true_len, forward, false, fwd);
    run_lstm(x, true_len, backward, true, bwd);
    for (std::size_t t = 0; t < true_len; ++t) {
        std::copy_n(fwd.hidden.row(t), l, out.row(t));
        std::copy_n(bwd.hidden.row(t), l, out.row(t) + l);
    }
    return out;
}

// --- convolution --------------------------------------------------------------

namespace {

void conv_forward(const Tensor& input, const ConvBlock& block, std::size_t pool_size, ConvCache& cache) {
    const auto& k = kernels::active();
    const std::size_t L = input.dim(0);
    const std::size_t in = input.dim(1);
    const std::size_t f = block.filters.dim(0);
    if (block.filters.dim(1) % in != 0 || block.bias.shape() != Shape{f}) {
        throw ShapeError("conv block filters " + shape_string(block.filters.shape()) + " do not match " +
                         std::to_string(in) + " input channels");
    }
    const std::size_t w = block.filters.dim(1) / in;
    if (w == 0 || pool_size == 0) throw ShapeError("conv block: width and pool size must be >= 1");

    cache.padded_input = Tensor({w - 1 + L, in});
    std::copy_n(input.data(), L * in, cache.padded_input.row(w - 1));
    cache.activation = Tensor({L, f});
    for (std::size_t t = 0; t < L; ++t) {
        double* act = cache.activation.row(t);
        std::copy_n(block.bias.data(), f, act);
        // Window rows t .. t+w-1 of the padded input are contiguous.
        k.gemv(block.filters.data(), cache.padded_input.row(t), act, f, w * in);
        for (std::size_t j = 0; j < f; ++j) act[j] = std::max(act[j], 0.0);
    }
    cache.output = Tensor({L, f});
    cache.pool_source.assign(L * f, 0);
    for (std::size_t t = 0; t < L; ++t) {
        const std::size_t lo = t + 1 >= pool_size ? t + 1 - pool_size : 0;
        for (std::size_t j = 0; j < f; ++j) {
            std::size_t src = lo;
            for (std::size_t s = lo + 1; s <= t; ++s) {
                if (cache.activation(s, j) > cache.activation(src, j)) src = s;
            }
            cache.pool_source[t * f + j] = src;
            cache.output(t, j) = cache.activation(src, j);
        }
    }
}

// d_output: {L, f}. d_input ({L, in}) accumulates.
void conv_backward(const ConvCache& cache, const Tensor& d_output, const ConvBlock& block, ConvBlock& grads,
                   Tensor& d_input) {
    const auto& k = kernels::active();
    const std::size_t L = d_output.dim(0);
    const std::size_t f = d_output.dim(1);
    const std::size_t in = cache.padded_input.dim(1);
    const std::size_t window = block.filters.dim(1);
    const std::size_t w = window / in;

    Tensor d_act({L, f});
    for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t j = 0; j < f; ++j) d_act(cache.pool_source[t * f + j], j) += d_output(t, j);
    }
    Tensor d_padded({w - 1 + L, in});
    for (std::size_t t = 0; t < L; ++t) {
        double* g = d_act.row(t);
        for (std::size_t j = 0; j < f; ++j) {
            if (cache.activation(t, j) <= 0.0) g[j] = 0.0;
        }
        k.axpy(1.0, g, grads.bias.data(), f);
        k.ger(grads.filters.data(), g, cache.padded_input.row(t), f, window);
        k.gemv_t(block.filters.data(), g, d_padded.row(t), f, window);
    }
    k.axpy(1.0, d_padded.row(w - 1), d_input.data(), L * in);
}

}  // namespace

Tensor conv_block(const Tensor& input, const ConvBlock& block, std::size_t pool_size, ConvCache* cache) {
    if (input.rank() != 2) throw ShapeError("conv_block: input must be 2-D");
    ConvCache local;
    ConvCache& c = cache != nullptr ? *cache : local;
    conv_forward(input, block, pool_size, c);
    return c.output;
}

void conv_block_backward(const ConvCache& cache, const Tensor& d_output, const ConvBlock& block, ConvBlock& grads,
                         Tensor& d_input) {
    if (d_output.shape() != cache.output.shape() || d_input.rank() != 2 || d_input.dim(0) != d_output.dim(0) ||
        d_input.dim(1) != cache.padded_input.dim(1) || grads.filters.shape() != block.filters.shape() ||
        grads.bias.shape() != block.bias.shape()) {
        throw ShapeError("conv_block_backward: shape mismatch");
    }
    conv_backward(cache, d_output, block, grads, d_input);
}

Tensor embed(std::span<const int> indices, const Tensor& embeddings) {
    if (embeddings.rank() != 2) throw ShapeError("embed: embeddings must be 2-D");
    const std::size_t d = embeddings.dim(1);
    Tensor out({indices.size(), d});
    for (std::size_t t = 0; t < indices.size(); ++t) {
        if (indices[t] < 0 || static_cast<std::size_t>(indices[t]) >= embeddings.dim(0)) {
            throw ShapeError("embed: phone index " + std::to_string(indices[t]) + " out of range");
        }
        std::copy_n(embeddings.row(static_cast<std::size_t>(indices[t])), d, out.row(t));
    }
    return out;
}

// --- encoder ------------------------------------------------------------------

Tensor encode(std::span<const int> indices, std::size_t true_len, const ModelParameters& params,
              const ModelConfig& config, Mode mode, Rng* rng, ForwardCache* cache) {
    const std::size_t n = indices.size();
    const std::size_t L = true_len;
    const std::size_t d = config.embedding_dim;
    const std::size_t l = config.lstm_dim;
    const std::size_t f = config.conv_filters;
    if (L < 1 || L > n) throw ShapeError("encode: true_len " + std::to_string(L) + " outside [1, " + std::to_string(n) + "]");
    if (params.embeddings.shape() != Shape{params.vocab_size(), d} || params.conv.size() != config.conv_blocks ||
        params.projection.shape() != Shape{kNumLabels, config.feature_dim()}) {
        throw ShapeError("encode: parameters do not match the model config");
    }

    ForwardCache local;
    ForwardCache& c = cache != nullptr ? *cache : local;
    c.length = L;
    c.embedded = embed(indices.first(L), params.embeddings);
    c.lstm_input = c.embedded;
    c.dropout = Tensor();
    if (mode == Mode::train && config.dropout_rate > 0.0) {
        if (rng == nullptr) throw ShapeError("encode: train mode with dropout needs an Rng");
        c.dropout = dropout_mask({L, d}, config.dropout_rate, *rng);
        for (std::size_t i = 0; i < c.lstm_input.size(); ++i) c.lstm_input[i] *= c.dropout[i];
    }
    check_lstm_shapes(params.forward_lstm, d);
    check_lstm_shapes(params.backward_lstm, d);
    run_lstm(c.lstm_input, L, params.forward_lstm, false, c.forward_lstm);
    run_lstm(c.lstm_input, L, params.backward_lstm, true, c.backward_lstm);

    c.conv.resize(config.conv_blocks);
    const Tensor* conv_in = &c.embedded;
    for (std::size_t b = 0; b < config.conv_blocks; ++b) {
        conv_forward(*conv_in, params.conv[b], config.pool_size, c.conv[b]);
        conv_in = &c.conv[b].output;
    }

    const std::size_t width = config.feature_dim();
    c.features = Tensor({L, width});
    for (std::size_t t = 0; t < L; ++t) {
        double* row = c.features.row(t);
        std::copy_n(c.forward_lstm.hidden.row(t), l, row);
        std::copy_n(c.backward_lstm.hidden.row(t), l, row + l);
        std::copy_n(conv_in->row(t), f, row + 2 * l);
    }

    const auto& k = kernels::active();
    Tensor emissions({n, kNumLabels});
    for (std::size_t t = 0; t < L; ++t) {
        std::copy_n(params.projection_bias.data(), kNumLabels, emissions.row(t));
        k.gemv(params.projection.data(), c.features.row(t), emissions.row(t), kNumLabels, width);
    }
    return emissions;
}

void encode_backward(const ForwardCache& cache, std::span<const int> indices, const Tensor& d_emissions,
                     const ModelParameters& params, const ModelConfig& config, ModelParameters& grads) {
    const auto& k = kernels::active();
    const std::size_t L = cache.length;
    const std::size_t d = config.embedding_dim;
    const std::size_t l = config.lstm_dim;
    const std::size_t f = config.conv_filters;
    const std::size_t width = config.feature_dim();
    if (d_emissions.rank() != 2 || d_emissions.dim(0) < L || d_emissions.dim(1) != kNumLabels) {
        throw ShapeError("encode_backward: emission gradient has shape " + shape_string(d_emissions.shape()));
    }

    // projection
    std::vector<double> d_features(L * width, 0.0);
    for (std::size_t t = 0; t < L; ++t) {
        const double* de = d_emissions.row(t);
        k.axpy(1.0, de, grads.projection_bias.data(), kNumLabels);
        k.ger(grads.projection.data(), de, cache.features.row(t), kNumLabels, width);
        k.gemv_t(params.projection.data(), de, d_features.data() + t * width, kNumLabels, width);
    }

    // convolution stack, last block first
    Tensor d_embedded({L, d});
    Tensor d_block({L, f});
    for (std::size_t t = 0; t < L; ++t) std::copy_n(d_features.data() + t * width + 2 * l, f, d_block.row(t));
    for (std::size_t b = config.conv_blocks; b-- > 0;) {
        if (b == 0) {
            conv_backward(cache.conv[b], d_block, params.conv[b], grads.conv[b], d_embedded);
        } else {
            Tensor d_prev({L, f});
            conv_backward(cache.conv[b], d_block, params.conv[b], grads.conv[b], d_prev);
            d_block = std::move(d_prev);
        }
    }

    // both LSTM directions share the (dropped-out) input
    Tensor d_lstm_input({L, d});
    run_lstm_backward(cache.lstm_input, L, params.forward_lstm, false, cache.forward_lstm, d_features, width, 0,
                      grads.forward_lstm, d_lstm_input);
    run_lstm_backward(cache.lstm_input, L, params.backward_lstm, true, cache.backward_lstm, d_features, width, l,
                      grads.backward_lstm, d_lstm_input);
    if (!cache.dropout.empty()) {
        for (std::size_t i = 0; i < d_lstm_input.size(); ++i) d_lstm_input[i] *= cache.dropout[i];
    }
    k.axpy(1.0, d_lstm_input.data(), d_embedded.data(), L * d);

    for (std::size_t t = 0; t < L; ++t) {
        k.axpy(1.0, d_embedded.row(t), grads.embeddings.row(static_cast<std::size_t>(indices[t])), d);
    }
}

}  // namespace syllab
