#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepair/grid/cube.hpp"
#include "deepair/grid/observations.hpp"

namespace deepair::synthcity {

// How advection treats cells whose upstream neighbour lies off the grid.
enum class Boundary { replicate, inflow, toroidal };

struct SynthConfig {
  std::size_t rows = 16;
  std::size_t cols = 16;
  std::size_t hours = 24 * 14;
  grid::HourStamp start = grid::make_hour(2024, 1, 1, 0);
  std::vector<std::string> pollutants = {"pm25"};
  std::size_t air_stations = 8;
  std::size_t weather_stations = 2;
  double road_fraction = 0.35;   // share of cells carrying traffic
  double canyon_fraction = 0.3;  // share of road cells flagged as street canyon

  double emission = 1.0;               // pollutant units per traffic unit per hour
  double canyon_amplification = 0.5;
  double decay = 0.1;                  // per hour, in [0, 1)
  std::size_t advection = 1;           // cells per hour
  double noise_std = 0.2;
  double background = 0.0;             // relaxation target and inflow value
  double initial = 0.0;                // pollutant field at t = 0
  Boundary boundary = Boundary::replicate;
  double missing_rate = 0.05;          // station readings dropped at random
  // Restrict traffic to a single cell (testing closed forms).
  std::optional<std::pair<std::size_t, std::size_t>> single_road;

  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);

// Channels of the generated city: pollutants, then temperature, humidity,
// wind_speed, wind_direction, traffic_volume, building_height, street_canyon.
grid::ChannelSchema city_schema(const SynthConfig& c);

// Diurnal traffic multiplier in [0.2, 1.2] with peaks at 08:00 and 18:00.
double traffic_profile(int hour_of_day);

// 8 wind directions, index 0 = north, clockwise; (drow, dcol) unit steps.
std::pair<int, int> wind_step(int direction);

struct SynthCity {
  grid::GridCube truth;  // every cell and hour filled
  grid::StationRegistry registry;
  std::vector<grid::Observation> observations;
};

SynthCity generate(const SynthConfig& config);

// One advection step of a single field (exposed for tests).
std::vector<double> shift_field(const std::vector<double>& field, std::size_t rows, std::size_t cols, int drow,
                                int dcol, Boundary boundary, double background);

struct PlantedSample {
  std::size_t row = 0, col = 0, t = 0;
  double target = 0.0;
  double clean_target = 0.0;  // before noise
};

struct PlantedConfig {
  std::size_t rows = 12;
  std::size_t cols = 12;
  std::size_t hours = 400;
  std::size_t patch_size = 9;
  std::size_t window = 8;
  std::size_t samples = 600;
  double noise_std = 0.01;
  std::uint64_t seed = 1;
  // Per channel: a fixed value everywhere, or random fields when unset.
  std::vector<std::optional<double>> constant_channels;

  void validate() const;
};

struct PlantedDataset {
  grid::GridCube cube;  // normalised flag set: values are used as model input directly
  std::vector<PlantedSample> samples;
};

// Patch mean of one channel at hour t, with edge replication off-grid.
double patch_mean(const grid::GridCube& cube, std::size_t channel, std::size_t row, std::size_t col, std::size_t t,
                  std::size_t patch_size);
double patch_mean_product(const grid::GridCube& cube, std::size_t a, std::size_t b, std::size_t row,
                          std::size_t col, std::size_t t, std::size_t patch_size);

// Channels a, b and a distractor. Each hour draws a correlation rho in
// [-1, 1]; b = rho * a + sqrt(1 - rho^2) * z, so a and b are zero-mean and
// the target (patch mean of a*b at the final frame) is invisible channel by
// channel.
PlantedDataset planted_interaction_dataset(const PlantedConfig& config);

// Target = sum_c coefficient_c * patch mean of channel c at the final frame,
// plus noise. One channel per coefficient.
PlantedDataset planted_linear_dataset(const PlantedConfig& config, const std::vector<double>& coefficients);

}  // namespace deepair::synthcity
