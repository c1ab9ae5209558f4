#include "deepair/grid/observations.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace deepair::grid {

GridCube rasterize(const std::vector<Observation>& observations, const GridSpec& spec, const ChannelSchema& schema,
                   const StationRegistry& registry, std::optional<TimeRange> range) {
  spec.validate();
  registry.validate_channels(schema);

  struct Resolved {
    std::size_t channel, row, col;
    HourStamp hour;
    double value;
  };
  std::vector<Resolved> resolved;
  resolved.reserve(observations.size());
  HourStamp lo{std::numeric_limits<std::int64_t>::max()};
  HourStamp hi{std::numeric_limits<std::int64_t>::min()};
  for (const auto& obs : observations) {
    const StationEntry* entry = registry.find(obs.source_id);
    if (!entry) throw std::invalid_argument("observation from unknown source '" + obs.source_id + "'");
    const auto channel = schema.find(obs.channel);
    if (!channel) {
      throw std::invalid_argument("observation from '" + obs.source_id + "' names unknown channel '" + obs.channel +
                                  "'");
    }
    if (schema[*channel].group == ChannelGroup::time) {
      throw std::invalid_argument("observation from '" + obs.source_id + "' targets derived time channel '" +
                                  obs.channel + "'");
    }
    if (!entry->reports(obs.channel)) {
      throw std::invalid_argument("source '" + obs.source_id + "' is not registered for channel '" + obs.channel + "'");
    }
    if (!std::isfinite(obs.value)) {
      throw std::invalid_argument("non-finite value from '" + obs.source_id + "' for '" + obs.channel + "'");
    }
    const HourStamp hour = hour_from_minutes(obs.minutes);
    if (!schema[*channel].is_static) {
      lo = std::min(lo, hour);
      hi = std::max(hi, hour);
    }
    resolved.push_back({*channel, entry->row, entry->col, hour, obs.value});
  }

  TimeRange span;
  if (range) {
    span = *range;
  } else {
    if (lo > hi) throw std::invalid_argument("rasterize: no time-varying observations to derive the time range");
    span = {lo, static_cast<std::size_t>(hi.hours - lo.hours + 1)};
  }

  GridCube cube(spec, schema, span.start, span.hours, CubeVariant::observed);
  const std::size_t cells = spec.cells();
  const std::size_t channels = schema.size();
  std::vector<double> sums(cube.values.size(), 0.0);
  std::vector<std::uint32_t> counts(cube.values.size(), 0);
  std::vector<double> static_sums(channels * cells, 0.0);
  std::vector<std::uint32_t> static_counts(channels * cells, 0);

  for (const auto& r : resolved) {
    const std::size_t cell = r.row * spec.cols + r.col;
    if (schema[r.channel].is_static) {
      static_sums[r.channel * cells + cell] += r.value;
      ++static_counts[r.channel * cells + cell];
      continue;
    }
    const std::int64_t t = r.hour.hours - span.start.hours;
    if (t < 0 || t >= static_cast<std::int64_t>(span.hours)) continue;
    const std::size_t idx = cube.index(static_cast<std::size_t>(t), r.channel, r.row, r.col);
    sums[idx] += r.value;
    ++counts[idx];
  }
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (counts[i]) cube.values[i] = sums[i] / counts[i];
  }
  for (std::size_t c = 0; c < channels; ++c) {
    if (!schema[c].is_static) continue;
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const std::size_t k = c * cells + cell;
      if (!static_counts[k]) continue;
      const double v = static_sums[k] / static_counts[k];
      for (std::size_t t = 0; t < span.hours; ++t) cube.values[(t * channels + c) * cells + cell] = v;
    }
  }
  return cube;
}

}  // namespace deepair::grid
