#include "emoscale/model.hpp"

#include <algorithm>
#include <random>

#include "emoscale/errors.hpp"

namespace emoscale {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

ModelConfig ModelConfig::paper() {
    ModelConfig c;
    c.seq_len = 2048;
    c.d_model = 1024;
    c.n_layers = 4;
    c.n_heads = 4;
    c.d_ff = 4 * 1024;
    c.n_gauss_features = 1024;
    return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::gradcheck() {
    ModelConfig c;
    c.seq_len = 32;
    c.d_model = 16;
    c.n_layers = 2;
    c.n_heads = 2;
    c.d_ff = 64;
    c.n_gauss_features = 8;
    c.head_widths = {32, 16};
    return c;
}

ModelConfig ModelConfig::preset(const std::string& name) {
    if (name == "paper") return paper();
    if (name == "desk") return desk();
    if (name == "gradcheck") return gradcheck();
    throw ParameterError("unknown preset '" + name + "' (expected paper, desk or gradcheck)");
}

void ModelConfig::validate() const {
    if (seq_len == 0 || seq_len % 4 != 0) throw ParameterError("seq_len must be a positive multiple of 4");
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
        throw ParameterError("d_model must be a positive multiple of n_heads");
    }
    if (d_ff == 0 || n_gauss_features == 0) throw ParameterError("d_ff and n_gauss_features must be positive");
    if (!(gauss_sigma > 0.0)) throw ParameterError("gauss_sigma must be positive");
    if (scales != std::vector<std::size_t>(kScales.begin(), kScales.end())) {
        throw ParameterError("scales must be exactly [1, 2, 4]");
    }
    for (auto w : head_widths)
        if (w == 0) throw ParameterError("head widths must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"seq_len", c.seq_len},
                       {"d_model", c.d_model},
                       {"n_layers", c.n_layers},
                       {"n_heads", c.n_heads},
                       {"d_ff", c.d_ff},
                       {"n_gauss_features", c.n_gauss_features},
                       {"gauss_sigma", c.gauss_sigma},
                       {"scales", c.scales},
                       {"head_widths", c.head_widths},
                       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    j.at("seq_len").get_to(c.seq_len);
    j.at("d_model").get_to(c.d_model);
    j.at("n_layers").get_to(c.n_layers);
    j.at("n_heads").get_to(c.n_heads);
    j.at("d_ff").get_to(c.d_ff);
    j.at("n_gauss_features").get_to(c.n_gauss_features);
    j.at("gauss_sigma").get_to(c.gauss_sigma);
    j.at("scales").get_to(c.scales);
    j.at("head_widths").get_to(c.head_widths);
    j.at("seed").get_to(c.seed);
}

std::vector<NamedTensor> ModelParams::named_parameters() const {
    std::vector<NamedTensor> out;
    for (std::size_t s = 0; s < branches.size(); ++s) {
        const auto& br = branches[s];
        const std::string scale = "scale" + std::to_string(config.scales[s]);
        out.push_back({scale + ".embed.projection", br.embedding.projection});
        out.push_back({scale + ".embed.bias", br.embedding.bias});
        for (std::size_t b = 0; b < br.blocks.size(); ++b) {
            const auto& blk = br.blocks[b];
            const std::string pre = scale + ".block" + std::to_string(b);
            for (std::size_t h = 0; h < blk.attention.heads(); ++h) {
                const std::string hs = std::to_string(h);
                out.push_back({pre + ".attn.query" + hs, blk.attention.query[h]});
                out.push_back({pre + ".attn.key" + hs, blk.attention.key[h]});
                out.push_back({pre + ".attn.value" + hs, blk.attention.value[h]});
            }
            out.push_back({pre + ".attn.output", blk.attention.output});
            out.push_back({pre + ".ln1.gamma", blk.ln1.gamma});
            out.push_back({pre + ".ln1.beta", blk.ln1.beta});
            out.push_back({pre + ".ln2.gamma", blk.ln2.gamma});
            out.push_back({pre + ".ln2.beta", blk.ln2.beta});
            out.push_back({pre + ".mlp_in.weight", blk.mlp_in.weight});
            out.push_back({pre + ".mlp_in.bias", blk.mlp_in.bias});
            out.push_back({pre + ".mlp_out.weight", blk.mlp_out.weight});
            out.push_back({pre + ".mlp_out.bias", blk.mlp_out.bias});
        }
    }
    for (std::size_t i = 0; i < head.size(); ++i) {
        const std::string pre = "head.fc" + std::to_string(i);
        out.push_back({pre + ".weight", head[i].weight});
        out.push_back({pre + ".bias", head[i].bias});
    }
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : named_parameters()) n += p.tensor.numel();
    return n;
}

std::uint64_t gaussian_seed(std::uint64_t model_seed, std::size_t scale_index) {
    return splitmix64(model_seed ^ splitmix64(0x6761757373ULL + scale_index));
}

ModelParams init_model(const ModelConfig& config) {
    config.validate();
    ModelParams p;
    p.config = config;
    std::mt19937_64 rng(splitmix64(config.seed));
    for (std::size_t s = 0; s < config.scales.size(); ++s) {
        ScaleBranch br;
        br.embedding = init_embedding(rng, config.d_model);
        for (std::size_t l = 0; l < config.n_layers; ++l)
            br.blocks.push_back(init_block(rng, config.d_model, config.n_heads, config.d_ff));
        br.gaussian = sample_projection(gaussian_seed(config.seed, s), kSignalChannels, config.n_gauss_features,
                                        config.gauss_sigma);
        p.branches.push_back(std::move(br));
    }
    std::size_t in = config.fused_width();
    for (auto w : config.head_widths) {
        p.head.push_back(init_affine(rng, in, w));
        in = w;
    }
    p.head.push_back(init_affine(rng, in, 2));
    // Start from the neutral score so early training is not dominated by the offset.
    auto bias = p.head.back().bias.mutable_data();
    std::fill(bias.begin(), bias.end(), 5.0);
    return p;
}

std::vector<Tensor> build_pyramid(const Tensor& signal) {
    if (signal.rank() != 2) throw DimensionError("build_pyramid: expected [L, C] signal, got " + shape_to_string(signal.shape()));
    const std::size_t len = signal.dim(0);
    if (len % 4 != 0) throw InputError("build_pyramid: length " + std::to_string(len) + " is not divisible by 4");
    std::vector<Tensor> out;
    for (auto factor : kScales) out.push_back(factor == 1 ? signal : avg_pool1d(signal, factor, factor));
    return out;
}

Tensor encode_scale(const Tensor& scaled_signal, const ScaleBranch& branch) {
    if (branch.gaussian.d_in() != kSignalChannels) throw DimensionError("encode_scale: Gaussian projection must take 8 channels");
    Tensor tokens = encoder_stack(embed_and_encode(scaled_signal, branch.embedding), branch.blocks);
    return concat_last({mean_rows(tokens), encode_sequence(scaled_signal, branch.gaussian)});
}

Tensor fuse(const Tensor& signal, const ModelParams& params) {
    const auto& c = params.config;
    if (signal.rank() != 2 || signal.dim(0) != c.seq_len || signal.dim(1) != kSignalChannels) {
        throw DimensionError("forward: signal " + shape_to_string(signal.shape()) + " does not match configured [" +
                             std::to_string(c.seq_len) + ", 8]");
    }
    if (params.branches.size() != kScales.size()) throw DimensionError("forward: expected three scale branches");
    auto pyramid = build_pyramid(signal);
    std::vector<Tensor> parts;
    for (std::size_t s = 0; s < pyramid.size(); ++s) parts.push_back(encode_scale(pyramid[s], params.branches[s]));
    return concat_last(parts);
}

Tensor forward(const Tensor& signal, const ModelParams& params) {
    Tensor h = reshape(fuse(signal, params), {1, params.config.fused_width()});
    for (std::size_t i = 0; i + 1 < params.head.size(); ++i) h = relu(affine(h, params.head[i]));
    Tensor out = affine(h, params.head.back());
    if (out.numel() != 2) throw DimensionError("forward: head must end in 2 outputs");
    return reshape(out, {2});
}

Prediction clamp_prediction(double valence_raw, double arousal_raw) {
    return {std::clamp(valence_raw, kScoreMin, kScoreMax), std::clamp(arousal_raw, kScoreMin, kScoreMax)};
}

Prediction predict(const Tensor& signal, const ModelParams& params) {
    NoGradGuard guard;
    Tensor out = forward(signal, params);
    return clamp_prediction(out[0], out[1]);
}

}  // namespace emoscale
