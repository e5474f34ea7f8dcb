#include "emoscale/nn_layers.hpp"

#include <cmath>
#include <string>

#include "emoscale/errors.hpp"

namespace emoscale {

namespace {

Tensor glorot(std::mt19937_64& rng, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> w(fan_in * fan_out);
    for (auto& v : w) v = dist(rng);
    return Tensor::from({fan_in, fan_out}, std::move(w), true);
}

}  // namespace

AffineParams init_affine(std::mt19937_64& rng, std::size_t in, std::size_t out) {
    return {glorot(rng, in, out), Tensor::zeros({out}, true)};
}

EmbeddingParams init_embedding(std::mt19937_64& rng, std::size_t d_model) {
    return {glorot(rng, kSignalChannels, d_model), Tensor::zeros({d_model}, true)};
}

AttentionParams init_attention(std::mt19937_64& rng, std::size_t d_model, std::size_t heads) {
    if (heads == 0 || d_model % heads != 0) {
        throw ParameterError("d_model " + std::to_string(d_model) + " is not divisible by " + std::to_string(heads) + " heads");
    }
    const std::size_t d_head = d_model / heads;
    AttentionParams p;
    for (std::size_t h = 0; h < heads; ++h) {
        p.query.push_back(glorot(rng, d_model, d_head));
        p.key.push_back(glorot(rng, d_model, d_head));
        p.value.push_back(glorot(rng, d_model, d_head));
    }
    p.output = glorot(rng, heads * d_head, d_model);
    return p;
}

BlockParams init_block(std::mt19937_64& rng, std::size_t d_model, std::size_t heads, std::size_t d_ff) {
    BlockParams b;
    b.attention = init_attention(rng, d_model, heads);
    b.ln1 = {Tensor::full({d_model}, 1.0, true), Tensor::zeros({d_model}, true)};
    b.ln2 = {Tensor::full({d_model}, 1.0, true), Tensor::zeros({d_model}, true)};
    b.mlp_in = init_affine(rng, d_model, d_ff);
    b.mlp_out = init_affine(rng, d_ff, d_model);
    return b;
}

Tensor affine(const Tensor& x, const AffineParams& p) { return add_bias(matmul(x, p.weight), p.bias); }

Tensor positional_encoding(std::size_t length, std::size_t d_model) {
    std::vector<double> pe(length * d_model);
    for (std::size_t pos = 0; pos < length; ++pos) {
        for (std::size_t j = 0; j < d_model; ++j) {
            const double pair = static_cast<double>(j - j % 2);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, pair / static_cast<double>(d_model));
            pe[pos * d_model + j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return Tensor::from({length, d_model}, std::move(pe));
}

Tensor embed_and_encode(const Tensor& signal, const EmbeddingParams& params) {
    if (signal.rank() != 2 || signal.dim(1) != kSignalChannels) {
        throw DimensionError("embedding expects an [L, 8] signal, got " + shape_to_string(signal.shape()));
    }
    if (params.projection.rank() != 2 || params.projection.dim(0) != kSignalChannels) {
        throw DimensionError("embedding projection must be [8, d_model], got " + shape_to_string(params.projection.shape()));
    }
    const std::size_t d_model = params.projection.dim(1);
    return add(affine(signal, {params.projection, params.bias}), positional_encoding(signal.dim(0), d_model));
}

Tensor multi_head_self_attention(const Tensor& tokens, const AttentionParams& params, std::vector<Tensor>* weights_out) {
    const std::size_t heads = params.heads();
    if (heads == 0 || params.key.size() != heads || params.value.size() != heads) {
        throw DimensionError("attention: inconsistent head parameter counts");
    }
    if (tokens.rank() != 2 || tokens.dim(1) != params.query[0].dim(0) || params.output.dim(1) != tokens.dim(1)) {
        throw DimensionError("attention: tokens " + shape_to_string(tokens.shape()) + " do not match d_model " +
                             std::to_string(params.query[0].dim(0)));
    }
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(params.query[0].dim(1)));
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor q = matmul(tokens, params.query[h]);
        Tensor k = matmul(tokens, params.key[h]);
        Tensor v = matmul(tokens, params.value[h]);
        Tensor weights = softmax(scale(matmul(q, transpose(k)), inv_sqrt), 1);
        if (weights_out) weights_out->push_back(weights);
        head_outputs.push_back(matmul(weights, v));
    }
    return matmul(concat_last(head_outputs), params.output);
}

Tensor transformer_block(const Tensor& x, const BlockParams& p) {
    Tensor y = add(multi_head_self_attention(layer_norm(x, p.ln1.gamma, p.ln1.beta, kLayerNormEps), p.attention), x);
    Tensor hidden = relu(affine(layer_norm(y, p.ln2.gamma, p.ln2.beta, kLayerNormEps), p.mlp_in));
    return add(affine(hidden, p.mlp_out), y);
}

Tensor encoder_stack(const Tensor& x, std::span<const BlockParams> blocks) {
    Tensor h = x;
    for (const auto& b : blocks) h = transformer_block(h, b);
    return h;
}

}  // namespace emoscale
