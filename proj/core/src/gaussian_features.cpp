#include "emoscale/gaussian_features.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "emoscale/errors.hpp"

namespace emoscale {

namespace {

void accumulate_features(const double* x, const GaussianProjection& proj, double weight, std::vector<double>& out) {
    const std::size_t d_in = proj.d_in(), n = proj.n_features();
    auto w = proj.weights.data();
    auto b = proj.offsets.data();
    const double amp = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t f = 0; f < n; ++f) {
        double dot = b[f];
        for (std::size_t i = 0; i < d_in; ++i) dot += x[i] * w[i * n + f];
        out[f] += weight * amp * std::cos(dot);
    }
}

}  // namespace

GaussianProjection sample_projection(std::uint64_t seed, std::size_t d_in, std::size_t n_features, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("gaussian projection: sigma must be positive");
    if (d_in == 0 || n_features == 0) throw ParameterError("gaussian projection: dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / sigma);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
    std::vector<double> w(d_in * n_features);
    for (auto& v : w) v = normal(rng);
    std::vector<double> b(n_features);
    for (auto& v : b) {
        do {
            v = uniform(rng);
        } while (v >= 2.0 * std::numbers::pi);
    }
    GaussianProjection p;
    p.weights = Tensor::from({d_in, n_features}, std::move(w));
    p.offsets = Tensor::from({n_features}, std::move(b));
    p.sigma = sigma;
    p.seed = seed;
    return p;
}

Tensor gaussian_transform(const Tensor& x, const GaussianProjection& proj) {
    if (x.rank() != 1 || x.dim(0) != proj.d_in()) {
        throw DimensionError("gaussian_transform: input " + shape_to_string(x.shape()) + " does not match d_in " +
                             std::to_string(proj.d_in()));
    }
    std::vector<double> out(proj.n_features(), 0.0);
    accumulate_features(x.data().data(), proj, 1.0, out);
    return Tensor::from({proj.n_features()}, std::move(out));
}

Tensor encode_sequence(const Tensor& signal, const GaussianProjection& proj) {
    if (signal.rank() != 2 || signal.dim(1) != proj.d_in()) {
        throw DimensionError("encode_sequence: signal " + shape_to_string(signal.shape()) + " does not match d_in " +
                             std::to_string(proj.d_in()));
    }
    const std::size_t len = signal.dim(0);
    std::vector<double> out(proj.n_features(), 0.0);
    auto s = signal.data();
    for (std::size_t t = 0; t < len; ++t) accumulate_features(s.data() + t * proj.d_in(), proj, 1.0, out);
    const double inv = 1.0 / static_cast<double>(len);
    for (auto& v : out) v *= inv;
    return Tensor::from({proj.n_features()}, std::move(out));
}

}  // namespace emoscale
