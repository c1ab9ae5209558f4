#pragma once

#include <string>
#include <vector>

#include "deepair/grid/cube.hpp"

namespace deepair::grid {

// Fills every dynamic, non-time (channel, cell) series: interior gaps
// linearly between the nearest observed neighbours, leading and trailing
// gaps by nearest-value extension. Series with no observation stay missing.
GridCube temporal_interpolate(const GridCube& cube);

struct IdwSource {
  double row;
  double col;
  double value;
};

// Inverse-distance weighting at (row, col) with weights 1/d^power over all
// sources, Euclidean distance in cell units. A coincident source (d = 0)
// is copied exactly.
double idw_value(const std::vector<IdwSource>& sources, double row, double col, double power = 2.0);

// Second interpolation stage. Pollutant and meteorology channels: every
// missing cell receives the IDW of all cells holding a value at that hour;
// an hour with no source at all is rejected naming channel and hour.
// Traffic and morphology cells still missing become 0 (no road / no
// building). Time channels are left alone.
GridCube spatial_idw(const GridCube& cube, double power = 2.0);

// Withheld station readings, hourly, in physical units.
struct GroundTruth {
  HourStamp start;
  std::size_t hours = 0;
  std::vector<std::string> station_ids;
  std::vector<std::string> pollutants;  // schema pollutant prefix, in order
  std::vector<double> values;           // [station][pollutant][t], kMissing if unreported

  double at(std::size_t station, std::size_t pollutant, std::size_t t) const {
    return values[(station * pollutants.size() + pollutant) * hours + t];
  }
  double& at(std::size_t station, std::size_t pollutant, std::size_t t) {
    return values[(station * pollutants.size() + pollutant) * hours + t];
  }
  std::size_t station_index(const std::string& id) const;
  std::size_t pollutant_index(const std::string& name) const;
};

GroundTruth extract_ground_truth(const GridCube& observed, const StationRegistry& registry);

// Observed cube with one station's pollutant readings deleted.
GridCube mask_local_station(const GridCube& observed, const StationRegistry& registry, const std::string& station_id);

// Checks that every pollutant has at least two reporting stations and that
// no two stations reporting the same pollutant share a cell.
void check_leave_out_preconditions(const ChannelSchema& schema, const StationRegistry& registry);

struct PreprocessedCubes {
  GridCube estimation;
  GridCube forecast;
  GroundTruth truth;
};

// Full pre-processing of an observed cube into both variants, each with the
// season and workday channels appended. The estimation variant holds, at
// each station's cell and for each pollutant it reports, the IDW of all
// other sources at that hour.
PreprocessedCubes preprocess(const GridCube& observed, const StationRegistry& registry, const Calendar& calendar,
                             double power = 2.0);

// Forecast-variant pipeline alone (no leave-out preconditions).
GridCube preprocess_forecast(const GridCube& observed, const Calendar& calendar, double power = 2.0);

GridCube append_time_channels(const GridCube& cube, const Calendar& calendar);

}  // namespace deepair::grid
