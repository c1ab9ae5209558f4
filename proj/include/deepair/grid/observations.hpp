#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "deepair/grid/cube.hpp"

namespace deepair::grid {

struct Observation {
  std::string source_id;  // registry entry (station, road segment, site)
  std::int64_t minutes = 0;
  std::string channel;
  double value = 0.0;
};

struct TimeRange {
  HourStamp start;
  std::size_t hours = 0;
};

// Places hourly-averaged observations on the grid. Unobserved cells hold
// kMissing; static channels are averaged over all readings for a cell and
// replicated across every hour. Without an explicit range the cube spans the
// first to the last observed hour; with one, out-of-range readings are
// ignored.
GridCube rasterize(const std::vector<Observation>& observations, const GridSpec& spec, const ChannelSchema& schema,
                   const StationRegistry& registry, std::optional<TimeRange> range = std::nullopt);

}  // namespace deepair::grid
