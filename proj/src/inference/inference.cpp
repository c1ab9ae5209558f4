#include "deepair/inference/inference.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "deepair/grid/io.hpp"
#include "deepair/grid/patch.hpp"
#include "deepair/training/trainer.hpp"

namespace deepair::inference {
namespace {

void check_input(const model::DeepAirModel& model, const grid::GridCube& cube, std::size_t t,
                 grid::CubeVariant variant, const char* op) {
  const auto& cfg = model.config();
  if (!cube.normalized) throw std::invalid_argument(std::string(op) + ": cube is not normalised");
  if (cube.variant != variant) {
    throw std::invalid_argument(std::string(op) + ": expected a " + std::string(grid::variant_name(variant)) +
                                " cube, got " + std::string(grid::variant_name(cube.variant)));
  }
  if (cube.channels() != cfg.input_channels) {
    throw std::invalid_argument(std::string(op) + ": cube has " + std::to_string(cube.channels()) +
                                " channels, model expects " + std::to_string(cfg.input_channels));
  }
  if (t + 1 < cfg.window) {
    throw std::invalid_argument(std::string(op) + ": hour index " + std::to_string(t) + " has fewer than " +
                                std::to_string(cfg.window) + " hours of history");
  }
  if (t >= cube.hours) throw std::out_of_range(std::string(op) + ": hour index beyond cube");
}

std::vector<double> run(model::DeepAirModel& model, const grid::GridCube& cube,
                        const std::vector<grid::CellIndex>& cells, std::size_t t) {
  const auto& cfg = model.config();
  const std::size_t n = cfg.patch_size, w = cfg.window, per = w * cube.channels() * n * n;
  Tensor batch(Shape{cells.size(), w, cube.channels(), n, n});
  for (std::size_t i = 0; i < cells.size(); ++i) {
    grid::extract_patch_into(cube, cells[i], n, t, w, batch.data().data() + i * per);
  }
  Tape tape = Tape::inference();
  const Var y = model.forward(tape, constant(std::move(batch)), ops::Mode::eval);
  const auto d = y->value().data();
  return {d.begin(), d.end()};
}

}  // namespace

EstimationMap estimate_city(model::DeepAirModel& model, const grid::GridCube& cube, std::size_t t,
                            const std::string& pollutant, TargetScale scale, std::size_t batch_size) {
  check_input(model, cube, t, grid::CubeVariant::estimation, "estimate_city");
  if (model.config().outputs != 1) throw std::invalid_argument("estimate_city: model must have a single output");
  if (batch_size == 0) throw std::invalid_argument("estimate_city: batch_size must be positive");
  EstimationMap map{cube.hour_at(t), pollutant, cube.spec.rows, cube.spec.cols, {}, {}};
  map.values.reserve(cube.plane());
  std::vector<grid::CellIndex> cells;
  for (std::size_t k = 0; k < cube.plane(); ++k) {
    cells.push_back({k / cube.spec.cols, k % cube.spec.cols});
    if (cells.size() == batch_size || k + 1 == cube.plane()) {
      for (double z : run(model, cube, cells, t)) map.values.push_back(scale.to_physical(z));
      cells.clear();
    }
  }
  return map;
}

ForecastTable forecast_stations(model::DeepAirModel& model, const grid::GridCube& cube,
                                const grid::StationRegistry& registry, std::size_t t, const std::string& pollutant,
                                TargetScale scale) {
  check_input(model, cube, t, grid::CubeVariant::forecast, "forecast_stations");
  const std::size_t L = model.config().outputs;
  ForecastTable table{cube.hour_at(t), pollutant, L, {}};
  const auto stations = registry.reporting(pollutant);
  if (stations.empty()) throw std::invalid_argument("forecast_stations: no station reports '" + pollutant + "'");
  for (const auto* st : stations) {
    const auto out = run(model, cube, {{st->row, st->col}}, t);
    ForecastRow row{st->id, {}};
    for (double z : out) row.values.push_back(scale.to_physical(z));
    table.rows.push_back(std::move(row));
  }
  return table;
}

EvalPairs collect_pairs(model::DeepAirModel& model, const training::PatchDataset& data,
                        const std::vector<std::size_t>& indices) {
  EvalPairs pairs;
  pairs.steps = data.outputs();
  pairs.predictions = training::predict(model, data, indices);
  for (std::size_t i : indices) {
    for (double z : data.samples().at(i).target) pairs.truths.push_back(data.to_physical(z));
  }
  return pairs;
}

EvalResult evaluate(const EvalPairs& pairs, double epsilon) {
  return pairs.steps > 1 ? mape_by_step(pairs.predictions, pairs.truths, pairs.steps, epsilon)
                         : mape(pairs.predictions, pairs.truths, epsilon);
}

std::vector<PollutantEval> per_pollutant_eval(const std::vector<PollutantCase>& cases, double epsilon) {
  std::vector<PollutantEval> out;
  for (const auto& c : cases) {
    if (!c.model || !c.data) throw std::invalid_argument("per_pollutant_eval: '" + c.pollutant + "' has no model");
    out.push_back({c.pollutant, evaluate(collect_pairs(*c.model, *c.data, c.test), epsilon)});
  }
  return out;
}

SeasonalMaps seasonal_mean_maps(const std::vector<EstimationMap>& maps) {
  SeasonalMaps out;
  if (maps.empty()) throw std::invalid_argument("seasonal_mean_maps: no maps");
  const std::size_t rows = maps.front().rows, cols = maps.front().cols;
  for (auto season : {grid::Season::spring, grid::Season::summer, grid::Season::autumn, grid::Season::winter}) {
    SeasonalMap m{season, 0, rows, cols, std::vector<double>(rows * cols, 0.0)};
    for (const auto& map : maps) {
      if (map.rows != rows || map.cols != cols) throw std::invalid_argument("seasonal_mean_maps: grid sizes differ");
      if (grid::season_of_month(grid::month_of(map.hour)) != season) continue;
      for (std::size_t k = 0; k < m.values.size(); ++k) m.values[k] += map.values[k];
      ++m.count;
    }
    if (m.count == 0) {
      out.warnings.push_back("no maps fall in " + std::string(grid::season_name(season)) + "; raster omitted");
      continue;
    }
    for (double& v : m.values) v /= static_cast<double>(m.count);
    out.maps.push_back(std::move(m));
  }
  return out;
}

void write_map_csv(std::ostream& os, const EstimationMap& map) {
  os << "row,col,value\n";
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) os << r << ',' << c << ',' << grid::format_double(map.at(r, c)) << '\n';
  }
}

void write_pgm(std::ostream& os, std::size_t rows, std::size_t cols, const std::vector<double>& values) {
  if (values.size() != rows * cols || values.empty()) throw std::invalid_argument("write_pgm: size mismatch");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  os << "P2\n# min=" << grid::format_double(*lo) << " max=" << grid::format_double(*hi) << '\n'
     << cols << ' ' << rows << "\n255\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = values[r * cols + c];
      const long level = span > 0.0 ? std::lround((v - *lo) / span * 255.0) : 0;
      os << (c ? " " : "") << level;
    }
    os << '\n';
  }
}

void write_forecast_csv(std::ostream& os, const ForecastTable& table) {
  os << "station_id,horizon_hour,value\n";
  for (const auto& row : table.rows) {
    for (std::size_t l = 0; l < row.values.size(); ++l) {
      os << row.station_id << ',' << l + 1 << ',' << grid::format_double(row.values[l]) << '\n';
    }
  }
}

void write_eval_table(std::ostream& os, const std::vector<PollutantEval>& rows) {
  os << "pollutant,mape_percent,accuracy_percent,samples,excluded\n";
  for (const auto& r : rows) {
    os << r.pollutant << ',' << grid::format_double(r.result.mape_percent) << ','
       << grid::format_double(r.result.accuracy_percent()) << ',' << r.result.samples << ',' << r.result.excluded
       << '\n';
  }
}

void write_step_table(std::ostream& os, const EvalResult& result) {
  os << "horizon_hour,mape_percent,samples\n";
  for (std::size_t l = 0; l < result.per_step_mape.size(); ++l) {
    os << l + 1 << ',' << grid::format_double(result.per_step_mape[l]) << ',' << result.per_step_samples[l] << '\n';
  }
}

void write_pairs(std::ostream& os, const EvalPairs& pairs) {
  os << "sample,step,prediction,truth\n";
  for (std::size_t i = 0; i < pairs.predictions.size(); ++i) {
    os << i / pairs.steps << ',' << i % pairs.steps + 1 << ',' << grid::format_double(pairs.predictions[i]) << ','
       << grid::format_double(pairs.truths[i]) << '\n';
  }
}

}  // namespace deepair::inference
