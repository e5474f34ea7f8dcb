#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "emoscale/model.hpp"

namespace emoscale {

inline constexpr int kCheckpointVersion = 1;

// FNV-1a over parameter names, shapes and the raw bytes of their values.
std::uint64_t parameter_checksum(std::span<const NamedTensor> params);

nlohmann::json checkpoint_to_json(const ModelParams& params);
ModelParams checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace emoscale
