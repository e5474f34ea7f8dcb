#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoscale/gaussian_features.hpp"
#include "emoscale/nn_layers.hpp"
#include "emoscale/tensor.hpp"

namespace emoscale {

inline constexpr double kScoreMin = 0.5;
inline constexpr double kScoreMax = 9.5;
inline constexpr std::array<std::size_t, 3> kScales{1, 2, 4};

struct ModelConfig {
    std::size_t seq_len = 128;
    std::size_t d_model = 32;
    std::size_t n_layers = 2;
    std::size_t n_heads = 2;
    std::size_t d_ff = 128;
    std::size_t n_gauss_features = 32;
    double gauss_sigma = 1.0;
    std::vector<std::size_t> scales{1, 2, 4};
    std::vector<std::size_t> head_widths{256, 64};
    std::uint64_t seed = 0;

    // 2048 x 1024, 4 layers, 4 heads.
    static ModelConfig paper();
    // Quick-training scale: 128 x 32, 2 layers, 2 heads, 32 Gaussian features.
    static ModelConfig desk();
    // Finite-difference scale: 32 x 16, 2 layers, 2 heads, 8 Gaussian features.
    static ModelConfig gradcheck();
    // "paper", "desk" or "gradcheck"; ParameterError otherwise.
    static ModelConfig preset(const std::string& name);

    void validate() const;
    std::size_t fused_width() const { return scales.size() * (d_model + n_gauss_features); }
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

struct ScaleBranch {
    EmbeddingParams embedding;
    std::vector<BlockParams> blocks;
    GaussianProjection gaussian;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct ModelParams {
    ModelConfig config;
    std::vector<ScaleBranch> branches;  // one per entry of config.scales
    std::vector<AffineParams> head;     // hidden layers then the 2-unit output layer

    // Trainable tensors in a fixed order with stable names.
    std::vector<NamedTensor> named_parameters() const;
    std::size_t parameter_count() const;
};

struct Prediction {
    double valence = 5.0;
    double arousal = 5.0;
};

/// Seeded initialization. Gaussian projections use per-scale seeds derived
/// from config.seed and are never trained.
ModelParams init_model(const ModelConfig& config);

// Seed for the Gaussian projection of branch `scale_index`.
std::uint64_t gaussian_seed(std::uint64_t model_seed, std::size_t scale_index);

/// Signal at lengths L, L/2, L/4 by average pooling the original signal.
std::vector<Tensor> build_pyramid(const Tensor& signal);

/// [d_model + n_gauss_features]: temporal mean of the encoder output, then the Gaussian summary.
Tensor encode_scale(const Tensor& scaled_signal, const ScaleBranch& branch);

/// Concatenation of the per-scale encodings.
Tensor fuse(const Tensor& signal, const ModelParams& params);

/// Differentiable raw output, shape [2] ordered (valence, arousal).
Tensor forward(const Tensor& signal, const ModelParams& params);

/// Inference: raw output clamped to [0.5, 9.5], computed without recording a graph.
Prediction predict(const Tensor& signal, const ModelParams& params);

Prediction clamp_prediction(double valence_raw, double arousal_raw);

}  // namespace emoscale
