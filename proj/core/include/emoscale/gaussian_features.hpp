#pragma once

#include <cstddef>
#include <cstdint>

#include "emoscale/tensor.hpp"

namespace emoscale {

/// Frozen random Fourier feature map approximating the RBF kernel
/// k(x, y) = exp(-|x - y|^2 / (2 sigma^2)).
struct GaussianProjection {
    Tensor weights;  // [d_in, n_features], N(0, 1/sigma^2)
    Tensor offsets;  // [n_features], U[0, 2pi)
    double sigma = 1.0;
    std::uint64_t seed = 0;

    std::size_t d_in() const { return weights.dim(0); }
    std::size_t n_features() const { return weights.dim(1); }
};

GaussianProjection sample_projection(std::uint64_t seed, std::size_t d_in, std::size_t n_features, double sigma);

/// z(x) = sqrt(2/D) cos(x·W + b) for a single [d_in] vector.
Tensor gaussian_transform(const Tensor& x, const GaussianProjection& proj);

/// Temporal mean of the per-timestep transform of an [L, d_in] sequence.
Tensor encode_sequence(const Tensor& signal, const GaussianProjection& proj);

}  // namespace emoscale
