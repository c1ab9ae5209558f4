#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "deepair/grid/cube.hpp"
#include "deepair/inference/metrics.hpp"
#include "deepair/model/deepair_model.hpp"
#include "deepair/training/dataset.hpp"

namespace deepair::inference {

// Maps model outputs back to physical units: z * std + mean.
struct TargetScale {
  double mean = 0.0;
  double std = 1.0;
  double to_physical(double z) const { return z * std + mean; }
};

struct EstimationMap {
  grid::HourStamp hour;
  std::string pollutant;
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;  // row-major, physical units
  std::string checkpoint;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// One eval-mode prediction per grid cell at hour t, from the W frames ending
// at t. The cube must be a normalised estimation-variant cube.
EstimationMap estimate_city(model::DeepAirModel& model, const grid::GridCube& cube, std::size_t t,
                            const std::string& pollutant, TargetScale scale, std::size_t batch_size = 64);

struct ForecastRow {
  std::string station_id;
  std::vector<double> values;  // hours t+1 .. t+L
};

struct ForecastTable {
  grid::HourStamp hour;
  std::string pollutant;
  std::size_t horizon = 0;
  std::vector<ForecastRow> rows;
};

// One forward pass per station reporting `pollutant`, in registry order.
// The cube must be a normalised forecast-variant cube.
ForecastTable forecast_stations(model::DeepAirModel& model, const grid::GridCube& cube,
                                const grid::StationRegistry& registry, std::size_t t, const std::string& pollutant,
                                TargetScale scale);

// Physical predictions and truths for the listed samples, row-major
// [samples x outputs].
struct EvalPairs {
  std::vector<double> predictions;
  std::vector<double> truths;
  std::size_t steps = 1;
};

EvalPairs collect_pairs(model::DeepAirModel& model, const training::PatchDataset& data,
                        const std::vector<std::size_t>& indices);
EvalResult evaluate(const EvalPairs& pairs, double epsilon = kMapeEpsilon);

struct PollutantCase {
  std::string pollutant;
  model::DeepAirModel* model = nullptr;
  const training::PatchDataset* data = nullptr;
  std::vector<std::size_t> test;
};

struct PollutantEval {
  std::string pollutant;
  EvalResult result;
};

std::vector<PollutantEval> per_pollutant_eval(const std::vector<PollutantCase>& cases,
                                              double epsilon = kMapeEpsilon);

struct SeasonalMap {
  grid::Season season;
  std::size_t count = 0;  // hourly maps averaged
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;
};

struct SeasonalMaps {
  std::vector<SeasonalMap> maps;      // spring, summer, autumn, winter; empty seasons omitted
  std::vector<std::string> warnings;  // one per omitted season
};

// Per-cell mean of the hourly maps falling in each season. All maps must
// share one grid size.
SeasonalMaps seasonal_mean_maps(const std::vector<EstimationMap>& maps);

// Exports. All numbers use the shortest round-trip text form.
void write_map_csv(std::ostream& os, const EstimationMap& map);
// Plain PGM (P2), 0..255 linearly scaled between the declared min and max.
void write_pgm(std::ostream& os, std::size_t rows, std::size_t cols, const std::vector<double>& values);
void write_forecast_csv(std::ostream& os, const ForecastTable& table);
void write_eval_table(std::ostream& os, const std::vector<PollutantEval>& rows);
void write_step_table(std::ostream& os, const EvalResult& result);
void write_pairs(std::ostream& os, const EvalPairs& pairs);

}  // namespace deepair::inference
