#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "deepair/grid/cube.hpp"
#include "deepair/grid/normalize.hpp"
#include "deepair/model/deepair_model.hpp"

namespace deepair::model {

inline constexpr std::string_view kCheckpointFormat = "deepair-checkpoint v1";

struct CheckpointMeta {
  std::string target;  // pollutant channel the model predicts
  grid::CubeVariant variant = grid::CubeVariant::estimation;
  std::uint64_t schema_hash = 0;
  std::vector<std::string> channel_names;
  grid::NormalizationStats normalization;
  std::uint64_t seed = 0;
  nlohmann::json train_config = nlohmann::json::object();
};

// <base>.json holds the manifest; <base>.params holds, for every parameter
// and then every batch-norm running statistic in manifest order: name
// length, name, rank, dims (all u64 little-endian), then the values.
void save_checkpoint(const std::filesystem::path& base, const DeepAirModel& model, const CheckpointMeta& meta);

struct LoadedModel {
  DeepAirModel model;
  CheckpointMeta meta;
};

// Rejects a checkpoint whose schema hash differs from `expected_schema_hash`
// when one is given.
LoadedModel load_checkpoint(const std::filesystem::path& base,
                            std::optional<std::uint64_t> expected_schema_hash = std::nullopt);

}  // namespace deepair::model
