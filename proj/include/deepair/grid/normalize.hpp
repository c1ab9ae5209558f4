#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "deepair/grid/cube.hpp"

namespace deepair::grid {

struct ChannelStats {
  std::string name;
  double mean = 0.0;
  double std = 1.0;
  bool passthrough = false;  // time labels and binary indicators
};

struct NormalizationStats {
  std::vector<ChannelStats> channels;

  const ChannelStats& at(std::size_t c) const { return channels.at(c); }
  const ChannelStats& named(const std::string& name) const;
  double to_physical(std::size_t c, double z) const;
  double to_normalized(std::size_t c, double v) const;
};

inline constexpr double kMinStd = 1e-9;

// Per-channel mean and population std over the listed hours (all cells).
// Channels with std below kMinStd get std 1.
NormalizationStats fit_normalization(const GridCube& cube, const std::vector<std::size_t>& hours);

// z-scores every non-passthrough channel. The stats must list exactly the
// cube's channels, in order.
GridCube normalize(const GridCube& cube, const NormalizationStats& stats);

nlohmann::json to_json(const NormalizationStats& stats);
NormalizationStats normalization_from_json(const nlohmann::json& j);

}  // namespace deepair::grid
