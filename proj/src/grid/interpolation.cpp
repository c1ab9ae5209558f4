#include "deepair/grid/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace deepair::grid {
namespace {

bool spatially_interpolated(ChannelGroup g) {
  return g == ChannelGroup::pollutant || g == ChannelGroup::meteorology;
}

}  // namespace

GridCube temporal_interpolate(const GridCube& cube) {
  GridCube out = cube;
  const std::size_t T = cube.hours;
  for (std::size_t c = 0; c < cube.channels(); ++c) {
    const auto& desc = cube.schema[c];
    if (desc.is_static || desc.group == ChannelGroup::time) continue;
    for (std::size_t r = 0; r < cube.spec.rows; ++r) {
      for (std::size_t q = 0; q < cube.spec.cols; ++q) {
        std::vector<std::size_t> observed;
        for (std::size_t t = 0; t < T; ++t) {
          if (!is_missing(cube.at(t, c, r, q))) observed.push_back(t);
        }
        if (observed.empty() || observed.size() == T) continue;
        auto fill = [&](std::size_t t, double v) {
          out.at(t, c, r, q) = v;
          out.imputed[out.index(t, c, r, q)] = 1;
        };
        const double first = cube.at(observed.front(), c, r, q);
        for (std::size_t t = 0; t < observed.front(); ++t) fill(t, first);
        const double last = cube.at(observed.back(), c, r, q);
        for (std::size_t t = observed.back() + 1; t < T; ++t) fill(t, last);
        for (std::size_t k = 0; k + 1 < observed.size(); ++k) {
          const std::size_t a = observed[k], b = observed[k + 1];
          const double va = cube.at(a, c, r, q), vb = cube.at(b, c, r, q);
          for (std::size_t t = a + 1; t < b; ++t) {
            fill(t, va + (vb - va) * static_cast<double>(t - a) / static_cast<double>(b - a));
          }
        }
      }
    }
  }
  return out;
}

double idw_value(const std::vector<IdwSource>& sources, double row, double col, double power) {
  if (sources.empty()) throw std::invalid_argument("idw_value: no sources");
  double num = 0.0, den = 0.0;
  for (const auto& s : sources) {
    const double dr = s.row - row, dc = s.col - col;
    const double d2 = dr * dr + dc * dc;
    if (d2 == 0.0) return s.value;
    const double w = power == 2.0 ? 1.0 / d2 : 1.0 / std::pow(std::sqrt(d2), power);
    num += w * s.value;
    den += w;
  }
  return num / den;
}

GridCube spatial_idw(const GridCube& cube, double power) {
  GridCube out = cube;
  std::vector<IdwSource> sources;
  for (std::size_t c = 0; c < cube.channels(); ++c) {
    const auto& desc = cube.schema[c];
    if (desc.group == ChannelGroup::time) continue;
    for (std::size_t t = 0; t < cube.hours; ++t) {
      if (!spatially_interpolated(desc.group)) {
        for (std::size_t r = 0; r < cube.spec.rows; ++r) {
          for (std::size_t q = 0; q < cube.spec.cols; ++q) {
            if (!is_missing(cube.at(t, c, r, q))) continue;
            out.at(t, c, r, q) = 0.0;
            out.imputed[out.index(t, c, r, q)] = 1;
          }
        }
        continue;
      }
      sources.clear();
      bool any_missing = false;
      for (std::size_t r = 0; r < cube.spec.rows; ++r) {
        for (std::size_t q = 0; q < cube.spec.cols; ++q) {
          const double v = cube.at(t, c, r, q);
          if (is_missing(v)) {
            any_missing = true;
          } else {
            sources.push_back({static_cast<double>(r), static_cast<double>(q), v});
          }
        }
      }
      if (!any_missing) continue;
      if (sources.empty()) {
        throw std::runtime_error("spatial interpolation: channel '" + desc.name + "' has no source at hour " +
                                 format_hour(cube.hour_at(t)));
      }
      for (std::size_t r = 0; r < cube.spec.rows; ++r) {
        for (std::size_t q = 0; q < cube.spec.cols; ++q) {
          if (!is_missing(cube.at(t, c, r, q))) continue;
          out.at(t, c, r, q) = idw_value(sources, static_cast<double>(r), static_cast<double>(q), power);
          out.imputed[out.index(t, c, r, q)] = 1;
        }
      }
    }
  }
  return out;
}

std::size_t GroundTruth::station_index(const std::string& id) const {
  auto it = std::find(station_ids.begin(), station_ids.end(), id);
  if (it == station_ids.end()) throw std::invalid_argument("ground truth has no station '" + id + "'");
  return static_cast<std::size_t>(it - station_ids.begin());
}

std::size_t GroundTruth::pollutant_index(const std::string& name) const {
  auto it = std::find(pollutants.begin(), pollutants.end(), name);
  if (it == pollutants.end()) throw std::invalid_argument("ground truth has no pollutant '" + name + "'");
  return static_cast<std::size_t>(it - pollutants.begin());
}

GroundTruth extract_ground_truth(const GridCube& observed, const StationRegistry& registry) {
  GroundTruth gt;
  gt.start = observed.start;
  gt.hours = observed.hours;
  const std::size_t P = observed.schema.pollutant_count();
  for (std::size_t p = 0; p < P; ++p) gt.pollutants.push_back(observed.schema[p].name);
  const auto stations = registry.air_stations(observed.schema);
  for (const auto* s : stations) gt.station_ids.push_back(s->id);
  gt.values.assign(stations.size() * P * gt.hours, kMissing);
  for (std::size_t si = 0; si < stations.size(); ++si) {
    for (std::size_t p = 0; p < P; ++p) {
      if (!stations[si]->reports(gt.pollutants[p])) continue;
      for (std::size_t t = 0; t < gt.hours; ++t) gt.at(si, p, t) = observed.at(t, p, stations[si]->row, stations[si]->col);
    }
  }
  return gt;
}

GridCube mask_local_station(const GridCube& observed, const StationRegistry& registry, const std::string& station_id) {
  const StationEntry& s = registry.at(station_id);
  GridCube out = observed;
  for (std::size_t p = 0; p < observed.schema.pollutant_count(); ++p) {
    if (!s.reports(observed.schema[p].name)) continue;
    for (std::size_t t = 0; t < observed.hours; ++t) out.at(t, p, s.row, s.col) = kMissing;
  }
  return out;
}

void check_leave_out_preconditions(const ChannelSchema& schema, const StationRegistry& registry) {
  for (std::size_t p = 0; p < schema.pollutant_count(); ++p) {
    const auto& name = schema[p].name;
    const auto stations = registry.reporting(name);
    if (stations.size() < 2) {
      throw std::invalid_argument("pollutant '" + name + "' has " + std::to_string(stations.size()) +
                                  " reporting station(s); leave-one-out reconstruction needs at least 2");
    }
    std::map<std::pair<std::size_t, std::size_t>, std::string> cells;
    for (const auto* s : stations) {
      auto [it, inserted] = cells.emplace(std::make_pair(s->row, s->col), s->id);
      if (!inserted) {
        throw std::invalid_argument("stations '" + it->second + "' and '" + s->id + "' share a cell for pollutant '" +
                                    name + "'");
      }
    }
  }
}

GridCube append_time_channels(const GridCube& cube, const Calendar& calendar) {
  GridCube out(cube.spec, cube.schema.with_time_channels(), cube.start, cube.hours, cube.variant);
  out.normalized = cube.normalized;
  const std::size_t old_c = cube.channels();
  const std::size_t cells = cube.plane();
  for (std::size_t t = 0; t < cube.hours; ++t) {
    std::copy_n(cube.values.begin() + t * old_c * cells, old_c * cells, out.values.begin() + t * (old_c + 2) * cells);
    std::copy_n(cube.imputed.begin() + t * old_c * cells, old_c * cells,
                out.imputed.begin() + t * (old_c + 2) * cells);
    const HourStamp h = cube.hour_at(t);
    const double season = season_code(calendar.season(h));
    const double workday = workday_code(calendar.workday(h));
    std::fill_n(out.values.begin() + (t * (old_c + 2) + old_c) * cells, cells, season);
    std::fill_n(out.values.begin() + (t * (old_c + 2) + old_c + 1) * cells, cells, workday);
  }
  return out;
}

GridCube preprocess_forecast(const GridCube& observed, const Calendar& calendar, double power) {
  GridCube filled = spatial_idw(temporal_interpolate(observed), power);
  filled.variant = CubeVariant::forecast;
  return append_time_channels(filled, calendar);
}

PreprocessedCubes preprocess(const GridCube& observed, const StationRegistry& registry, const Calendar& calendar,
                             double power) {
  if (observed.variant != CubeVariant::observed || observed.schema.has_time_channels()) {
    throw std::invalid_argument("preprocess: expected a freshly rasterized cube");
  }
  check_leave_out_preconditions(observed.schema, registry);
  const GridCube temporal = temporal_interpolate(observed);
  GridCube forecast = spatial_idw(temporal, power);
  forecast.variant = CubeVariant::forecast;

  GridCube estimation = forecast;
  estimation.variant = CubeVariant::estimation;
  const auto stations = registry.air_stations(observed.schema);
  std::vector<IdwSource> sources;
  for (std::size_t p = 0; p < observed.schema.pollutant_count(); ++p) {
    const auto& name = observed.schema[p].name;
    for (std::size_t t = 0; t < observed.hours; ++t) {
      for (const auto* s : stations) {
        if (!s->reports(name)) continue;
        sources.clear();
        for (std::size_t r = 0; r < observed.spec.rows; ++r) {
          for (std::size_t q = 0; q < observed.spec.cols; ++q) {
            if (r == s->row && q == s->col) continue;
            const double v = temporal.at(t, p, r, q);
            if (!is_missing(v)) sources.push_back({static_cast<double>(r), static_cast<double>(q), v});
          }
        }
        if (sources.empty()) {
          throw std::runtime_error("spatial interpolation: channel '" + name + "' has no source at hour " +
                                   format_hour(observed.hour_at(t)) + " once station '" + s->id + "' is withheld");
        }
        estimation.at(t, p, s->row, s->col) =
            idw_value(sources, static_cast<double>(s->row), static_cast<double>(s->col), power);
        estimation.imputed[estimation.index(t, p, s->row, s->col)] = 1;
      }
    }
  }

  PreprocessedCubes result{append_time_channels(estimation, calendar), append_time_channels(forecast, calendar),
                           extract_ground_truth(observed, registry)};
  return result;
}

}  // namespace deepair::grid
