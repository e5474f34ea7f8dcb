#include "emoscale/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "emoscale/errors.hpp"

namespace emoscale {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

void fnv_u64(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffU;
        h *= kFnvPrime;
    }
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::uint64_t parameter_checksum(std::span<const NamedTensor> params) {
    std::uint64_t h = kFnvOffset;
    for (const auto& p : params) {
        fnv_bytes(h, p.name.data(), p.name.size());
        fnv_u64(h, p.tensor.rank());
        for (auto d : p.tensor.shape()) fnv_u64(h, d);
        for (double v : p.tensor.data()) fnv_u64(h, std::bit_cast<std::uint64_t>(v));
    }
    return h;
}

nlohmann::json checkpoint_to_json(const ModelParams& params) {
    auto named = params.named_parameters();
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& p : named) {
        for (double v : p.tensor.data()) {
            if (!std::isfinite(v)) throw InputError("checkpoint: parameter " + p.name + " holds a non-finite value");
        }
        tensors.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"data", p.tensor.values()}});
    }
    return {{"format", "emoscale-checkpoint"},
            {"version", kCheckpointVersion},
            {"config", params.config},
            {"parameters", std::move(tensors)},
            {"checksum", hex64(parameter_checksum(named))}};
}

ModelParams checkpoint_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "emoscale-checkpoint") throw ParseError("checkpoint: unrecognized format tag");
        const int version = doc.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw ParseError("checkpoint: unsupported version " + std::to_string(version));
        }
        ModelParams params = init_model(doc.at("config").get<ModelConfig>());
        auto named = params.named_parameters();
        std::unordered_map<std::string, Tensor*> by_name;
        for (auto& p : named) by_name.emplace(p.name, &p.tensor);

        const auto& tensors = doc.at("parameters");
        if (tensors.size() != named.size()) {
            throw ParseError("checkpoint: expected " + std::to_string(named.size()) + " parameters, found " +
                             std::to_string(tensors.size()));
        }
        for (const auto& entry : tensors) {
            const auto name = entry.at("name").get<std::string>();
            auto it = by_name.find(name);
            if (it == by_name.end()) throw ParseError("checkpoint: unknown parameter " + name);
            Tensor& target = *it->second;
            if (entry.at("shape").get<Shape>() != target.shape()) {
                throw ParseError("checkpoint: shape mismatch for " + name);
            }
            const auto values = entry.at("data").get<std::vector<double>>();
            if (values.size() != target.numel()) throw ParseError("checkpoint: length mismatch for " + name);
            std::copy(values.begin(), values.end(), target.mutable_data().begin());
        }
        const auto expected = doc.at("checksum").get<std::string>();
        if (hex64(parameter_checksum(named)) != expected) throw ParseError("checkpoint: checksum mismatch");
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(params).dump(1) << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open checkpoint " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(doc);
}

}  // namespace emoscale
