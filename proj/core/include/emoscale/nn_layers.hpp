#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "emoscale/tensor.hpp"

namespace emoscale {

inline constexpr std::size_t kSignalChannels = 8;
inline constexpr double kLayerNormEps = 1e-5;

struct AffineParams {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]
};

struct LayerNormParams {
    Tensor gamma;
    Tensor beta;
};

struct EmbeddingParams {
    Tensor projection;  // [8, d_model]
    Tensor bias;        // [d_model]
};

struct AttentionParams {
    std::vector<Tensor> query;  // per head [d_model, d_head]
    std::vector<Tensor> key;
    std::vector<Tensor> value;
    Tensor output;              // [heads * d_head, d_model]

    std::size_t heads() const { return query.size(); }
    std::size_t d_model() const { return output.dim(1); }
};

/// Pre-norm encoder block: y = MSA(LN1(x)) + x, out = MLP(LN2(y)) + y.
struct BlockParams {
    AttentionParams attention;
    LayerNormParams ln1;
    LayerNormParams ln2;
    AffineParams mlp_in;   // d_model -> d_ff
    AffineParams mlp_out;  // d_ff -> d_model
};

// Glorot-uniform weights, zero biases, unit LayerNorm gain.
AffineParams init_affine(std::mt19937_64& rng, std::size_t in, std::size_t out);
EmbeddingParams init_embedding(std::mt19937_64& rng, std::size_t d_model);
AttentionParams init_attention(std::mt19937_64& rng, std::size_t d_model, std::size_t heads);
BlockParams init_block(std::mt19937_64& rng, std::size_t d_model, std::size_t heads, std::size_t d_ff);

/// x·W + b for x of shape [n, in].
Tensor affine(const Tensor& x, const AffineParams& p);

/// Sinusoidal table: pe[pos, 2i] = sin(pos / 10000^(2i/d)), pe[pos, 2i+1] = cos(...).
Tensor positional_encoding(std::size_t length, std::size_t d_model);

/// Per-timestep affine embedding of an [L, 8] signal plus positional encoding.
Tensor embed_and_encode(const Tensor& signal, const EmbeddingParams& params);

/// Bidirectional scaled dot-product attention over [L, d_model] tokens.
/// When `weights_out` is given, the per-head [L, L] weight matrices are appended to it.
Tensor multi_head_self_attention(const Tensor& tokens, const AttentionParams& params,
                                 std::vector<Tensor>* weights_out = nullptr);

Tensor transformer_block(const Tensor& x, const BlockParams& params);

Tensor encoder_stack(const Tensor& x, std::span<const BlockParams> blocks);

}  // namespace emoscale
