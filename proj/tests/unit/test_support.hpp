#pragma once

#include <vector>

#include "syllab/network.hpp"
#include "syllab/tensor.hpp"

namespace syllab::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
    Tensor t(shape);
    for (double& v : t.values()) v = scale * rng.normal();
    return t;
}

// The small configuration the gradient checks run on.
inline ModelConfig toy_config(std::size_t conv_blocks, OutputHead head) {
    ModelConfig c;
    c.embedding_dim = 4;
    c.lstm_dim = 3;
    c.conv_filters = 2;
    c.conv_width = 3;
    c.conv_blocks = conv_blocks;
    c.pool_size = 2;
    c.output_head = head;
    c.dropout_rate = 0.25;
    return c;
}

// Initialized parameters with every tensor (biases and CRF included) jittered
// so no gradient is structurally zero.
inline ModelParameters random_parameters(const ModelConfig& config, std::size_t vocab, Rng& rng) {
    ModelParameters p = ModelParameters::initialize(config, vocab, rng);
    for (Tensor* t : p.tensors()) {
        for (double& v : t->values()) v += 0.3 * rng.normal();
    }
    return p;
}

}  // namespace syllab::testing
