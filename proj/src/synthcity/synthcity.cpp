#include "deepair/synthcity/synthcity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "deepair/numerics/rng.hpp"

namespace deepair::synthcity {
namespace {

using grid::ChannelGroup;

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

std::string_view boundary_name(Boundary b) {
  switch (b) {
    case Boundary::replicate: return "replicate";
    case Boundary::inflow: return "inflow";
    case Boundary::toroidal: return "toroidal";
  }
  return "?";
}

Boundary parse_boundary(std::string_view s) {
  for (auto b : {Boundary::replicate, Boundary::inflow, Boundary::toroidal}) {
    if (boundary_name(b) == s) return b;
  }
  throw std::invalid_argument("synth.boundary must be replicate, inflow or toroidal, got '" + std::string(s) + "'");
}

int hour_of_day(grid::HourStamp h) { return static_cast<int>(((h.hours % 24) + 24) % 24); }

std::string cell_id(std::string_view prefix, std::size_t r, std::size_t c) {
  return std::string(prefix) + "_" + std::to_string(r) + "_" + std::to_string(c);
}

}  // namespace

void SynthConfig::validate() const {
  require(rows >= 2 && cols >= 2, "synth.rows and synth.cols must be at least 2");
  require(hours >= 1, "synth.hours must be at least 1");
  require(!pollutants.empty(), "synth.pollutants must list at least one pollutant");
  require(air_stations >= 1 && air_stations <= rows * cols, "synth.air_stations must be between 1 and rows*cols");
  require(weather_stations >= 1 && weather_stations <= rows * cols, "synth.weather_stations must be between 1 and rows*cols");
  require(road_fraction > 0.0 && road_fraction <= 1.0, "synth.road_fraction must be in (0, 1]");
  require(canyon_fraction >= 0.0 && canyon_fraction <= 1.0, "synth.canyon_fraction must be in [0, 1]");
  require(emission >= 0.0, "synth.emission must be non-negative");
  require(canyon_amplification >= 0.0, "synth.canyon_amplification must be non-negative");
  require(decay >= 0.0 && decay < 1.0, "synth.decay must be in [0, 1)");
  require(noise_std >= 0.0, "synth.noise_std must be non-negative");
  require(background >= 0.0, "synth.background must be non-negative");
  require(missing_rate >= 0.0 && missing_rate < 1.0, "synth.missing_rate must be in [0, 1)");
  require(static_cast<double>(advection) < static_cast<double>(std::min(rows, cols)) / 4.0,
          "synth.advection must be below min(rows, cols)/4 cells per hour");
  if (single_road) {
    require(single_road->first < rows && single_road->second < cols, "synth.single_road lies outside the grid");
  }
}

nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json j = {
      {"rows", c.rows},
      {"cols", c.cols},
      {"hours", c.hours},
      {"start", grid::format_hour(c.start)},
      {"pollutants", c.pollutants},
      {"air_stations", c.air_stations},
      {"weather_stations", c.weather_stations},
      {"road_fraction", c.road_fraction},
      {"canyon_fraction", c.canyon_fraction},
      {"emission", c.emission},
      {"canyon_amplification", c.canyon_amplification},
      {"decay", c.decay},
      {"advection", c.advection},
      {"noise_std", c.noise_std},
      {"background", c.background},
      {"initial", c.initial},
      {"boundary", boundary_name(c.boundary)},
      {"missing_rate", c.missing_rate},
      {"seed", c.seed},
  };
  if (c.single_road) j["single_road"] = {c.single_road->first, c.single_road->second};
  return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.rows = j.value("rows", c.rows);
  c.cols = j.value("cols", c.cols);
  c.hours = j.value("hours", c.hours);
  if (j.contains("start")) c.start = grid::parse_hour(j.at("start").get<std::string>());
  c.pollutants = j.value("pollutants", c.pollutants);
  c.air_stations = j.value("air_stations", c.air_stations);
  c.weather_stations = j.value("weather_stations", c.weather_stations);
  c.road_fraction = j.value("road_fraction", c.road_fraction);
  c.canyon_fraction = j.value("canyon_fraction", c.canyon_fraction);
  c.emission = j.value("emission", c.emission);
  c.canyon_amplification = j.value("canyon_amplification", c.canyon_amplification);
  c.decay = j.value("decay", c.decay);
  c.advection = j.value("advection", c.advection);
  c.noise_std = j.value("noise_std", c.noise_std);
  c.background = j.value("background", c.background);
  c.initial = j.value("initial", c.initial);
  c.boundary = parse_boundary(j.value("boundary", std::string("replicate")));
  c.missing_rate = j.value("missing_rate", c.missing_rate);
  c.seed = j.value("seed", c.seed);
  if (j.contains("single_road")) {
    c.single_road = std::make_pair(j.at("single_road").at(0).get<std::size_t>(), j.at("single_road").at(1).get<std::size_t>());
  }
  c.validate();
  return c;
}

grid::ChannelSchema city_schema(const SynthConfig& c) {
  std::vector<grid::ChannelDescriptor> ch;
  for (const auto& p : c.pollutants) ch.push_back({p, ChannelGroup::pollutant, "ug/m3", false, false});
  ch.push_back({"temperature", ChannelGroup::meteorology, "C", false, false});
  ch.push_back({"humidity", ChannelGroup::meteorology, "%", false, false});
  ch.push_back({"wind_speed", ChannelGroup::meteorology, "m/s", false, false});
  ch.push_back({"wind_direction", ChannelGroup::meteorology, "turn", false, false});
  ch.push_back({"traffic_volume", ChannelGroup::traffic, "veh/h (scaled)", false, false});
  ch.push_back({"building_height", ChannelGroup::morphology, "m", true, false});
  ch.push_back({"street_canyon", ChannelGroup::morphology, "flag", true, true});
  return grid::ChannelSchema(std::move(ch));
}

double traffic_profile(int hour_of_day) {
  auto bump = [](double h, double centre) { return std::exp(-0.5 * (h - centre) * (h - centre) / 2.25); };
  const double h = static_cast<double>(hour_of_day);
  return std::min(1.2, 0.2 + bump(h, 8.0) + bump(h, 18.0));
}

std::pair<int, int> wind_step(int direction) {
  static constexpr std::pair<int, int> kSteps[8] = {{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}};
  return kSteps[((direction % 8) + 8) % 8];
}

std::vector<double> shift_field(const std::vector<double>& field, std::size_t rows, std::size_t cols, int drow,
                                int dcol, Boundary boundary, double background) {
  std::vector<double> out(field.size());
  const long R = static_cast<long>(rows), C = static_cast<long>(cols);
  for (long r = 0; r < R; ++r) {
    for (long c = 0; c < C; ++c) {
      long sr = r - drow, sc = c - dcol;  // upstream cell
      double v;
      if (sr >= 0 && sr < R && sc >= 0 && sc < C) {
        v = field[static_cast<std::size_t>(sr * C + sc)];
      } else if (boundary == Boundary::inflow) {
        v = background;
      } else if (boundary == Boundary::toroidal) {
        sr = ((sr % R) + R) % R;
        sc = ((sc % C) + C) % C;
        v = field[static_cast<std::size_t>(sr * C + sc)];
      } else {
        sr = std::clamp(sr, 0L, R - 1);
        sc = std::clamp(sc, 0L, C - 1);
        v = field[static_cast<std::size_t>(sr * C + sc)];
      }
      out[static_cast<std::size_t>(r * C + c)] = v;
    }
  }
  return out;
}

SynthCity generate(const SynthConfig& cfg) {
  cfg.validate();
  const grid::ChannelSchema schema = city_schema(cfg);
  const grid::GridSpec spec{cfg.rows, cfg.cols, 1.0, 0.0, 0.0};
  grid::GridCube truth(spec, schema, cfg.start, cfg.hours, grid::CubeVariant::observed);
  const std::size_t P = cfg.pollutants.size(), cells = spec.cells(), T = cfg.hours;
  const std::size_t c_temp = P, c_hum = P + 1, c_ws = P + 2, c_wd = P + 3, c_traffic = P + 4, c_height = P + 5,
                    c_canyon = P + 6;

  Rng master(cfg.seed);
  Rng layout = master.fork(1), weather = master.fork(2), noise = master.fork(3), dropout = master.fork(4);

  // Static layout: roads, canyons, building heights.
  std::vector<double> base_volume(cells, 0.0), canyon(cells, 0.0), height(cells, 0.0);
  if (cfg.single_road) {
    base_volume[cfg.single_road->first * cfg.cols + cfg.single_road->second] = 1.0;
  } else {
    for (std::size_t k = 0; k < cells; ++k) {
      if (layout.uniform() < cfg.road_fraction) base_volume[k] = layout.uniform(0.5, 1.5);
    }
    if (std::all_of(base_volume.begin(), base_volume.end(), [](double v) { return v == 0.0; })) {
      base_volume[layout.below(cells)] = 1.0;
    }
  }
  for (std::size_t k = 0; k < cells; ++k) {
    if (base_volume[k] > 0.0 && !cfg.single_road && layout.uniform() < cfg.canyon_fraction) canyon[k] = 1.0;
    height[k] = canyon[k] > 0.0 ? layout.uniform(30.0, 80.0) : layout.uniform(3.0, 30.0);
  }

  // Station placement: distinct cells for air stations; weather stations anywhere.
  std::vector<std::size_t> all(cells);
  for (std::size_t k = 0; k < cells; ++k) all[k] = k;
  shuffle(all, layout);
  const std::vector<std::size_t> air_cells(all.begin(), all.begin() + static_cast<long>(cfg.air_stations));
  std::vector<std::size_t> met_cells;
  for (std::size_t i = 0; i < cfg.weather_stations; ++i) met_cells.push_back(layout.below(cells));

  // Meteorology: city-wide random walks with a fixed north-south gradient.
  double temp_walk = 0.0, hum_walk = 0.0, speed_walk = 0.0;
  int direction = static_cast<int>(layout.below(8));
  std::vector<int> wind_dir(T);
  for (std::size_t t = 0; t < T; ++t) {
    const grid::HourStamp h = truth.hour_at(t);
    temp_walk = 0.95 * temp_walk + weather.normal(0.0, 0.5);
    hum_walk = 0.95 * hum_walk + weather.normal(0.0, 2.0);
    speed_walk = 0.9 * speed_walk + weather.normal(0.0, 0.4);
    if (weather.uniform() < 0.08) direction += weather.uniform() < 0.5 ? 1 : 7;
    direction %= 8;
    wind_dir[t] = direction;
    const double seasonal = 10.0 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(grid::month_of(h)) - 7.0) / 12.0);
    const double diurnal = 4.0 * std::sin(2.0 * std::numbers::pi * (hour_of_day(h) - 9) / 24.0);
    const bool workday = grid::Calendar{}.workday(h);
    for (std::size_t r = 0; r < cfg.rows; ++r) {
      for (std::size_t c = 0; c < cfg.cols; ++c) {
        const std::size_t k = r * cfg.cols + c;
        truth.at(t, c_temp, r, c) = 15.0 + seasonal + diurnal + temp_walk - 0.05 * static_cast<double>(r);
        truth.at(t, c_hum, r, c) = std::clamp(65.0 + hum_walk + 0.2 * static_cast<double>(c), 5.0, 100.0);
        truth.at(t, c_ws, r, c) = std::fabs(3.0 + speed_walk);
        truth.at(t, c_wd, r, c) = static_cast<double>(direction) / 8.0;
        truth.at(t, c_traffic, r, c) = base_volume[k] * traffic_profile(hour_of_day(h)) * (workday ? 1.0 : 0.7);
        truth.at(t, c_height, r, c) = height[k];
        truth.at(t, c_canyon, r, c) = canyon[k];
      }
    }
  }

  // Pollutants: advect, relax towards background, add traffic emission.
  for (std::size_t p = 0; p < P; ++p) {
    const double rate = cfg.emission * (1.0 + 0.5 * static_cast<double>(p));
    std::vector<double> field(cells, cfg.initial);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < cells; ++k) truth.values[(t * truth.channels() + p) * cells + k] = field[k];
      if (t + 1 == T) break;
      const auto [dr, dc] = wind_step(wind_dir[t]);
      const int step = static_cast<int>(cfg.advection);
      std::vector<double> next = step ? shift_field(field, cfg.rows, cfg.cols, dr * step, dc * step, cfg.boundary,
                                                    cfg.background)
                                      : field;
      for (std::size_t k = 0; k < cells; ++k) {
        const double traffic = truth.values[(t * truth.channels() + c_traffic) * cells + k];
        double v = (1.0 - cfg.decay) * next[k] + cfg.decay * cfg.background +
                   rate * traffic * (1.0 + cfg.canyon_amplification * canyon[k]);
        if (cfg.noise_std > 0.0) v += noise.normal(0.0, cfg.noise_std);
        next[k] = v;
      }
      field = std::move(next);
    }
  }

  // Registry and observations.
  std::vector<grid::StationEntry> entries;
  for (std::size_t i = 0; i < air_cells.size(); ++i) {
    entries.push_back({"aq" + std::to_string(i), air_cells[i] / cfg.cols, air_cells[i] % cfg.cols, cfg.pollutants});
  }
  for (std::size_t i = 0; i < met_cells.size(); ++i) {
    entries.push_back({"met" + std::to_string(i), met_cells[i] / cfg.cols, met_cells[i] % cfg.cols,
                       {"temperature", "humidity", "wind_speed", "wind_direction"}});
  }
  for (std::size_t k = 0; k < cells; ++k) {
    if (base_volume[k] > 0.0) entries.push_back({cell_id("road", k / cfg.cols, k % cfg.cols), k / cfg.cols, k % cfg.cols, {"traffic_volume"}});
  }
  for (std::size_t k = 0; k < cells; ++k) {
    entries.push_back({cell_id("site", k / cfg.cols, k % cfg.cols), k / cfg.cols, k % cfg.cols,
                       {"building_height", "street_canyon"}});
  }

  SynthCity city{truth, grid::StationRegistry(entries, spec), {}};
  auto& obs = city.observations;
  for (std::size_t t = 0; t < T; ++t) {
    const std::int64_t minutes = truth.hour_at(t).hours * 60;
    for (std::size_t p = 0; p < P; ++p) {
      std::size_t reported = 0;
      for (std::size_t i = 0; i < air_cells.size(); ++i) {
        const bool keep = dropout.uniform() >= cfg.missing_rate;
        // Some station must report every hour or the spatial stage has no source.
        if (!keep && !(i + 1 == air_cells.size() && reported == 0)) continue;
        ++reported;
        obs.push_back({entries[i].id, minutes, cfg.pollutants[p], truth.at(t, p, entries[i].row, entries[i].col)});
      }
    }
    for (std::size_t i = 0; i < met_cells.size(); ++i) {
      const auto& e = entries[air_cells.size() + i];
      for (std::size_t c = c_temp; c <= c_wd; ++c) obs.push_back({e.id, minutes, schema[c].name, truth.at(t, c, e.row, e.col)});
    }
    for (const auto& e : entries) {
      if (e.id.starts_with("road_")) obs.push_back({e.id, minutes, "traffic_volume", truth.at(t, c_traffic, e.row, e.col)});
    }
  }
  const std::int64_t first = cfg.start.hours * 60;
  for (const auto& e : entries) {
    if (!e.id.starts_with("site_")) continue;
    obs.push_back({e.id, first, "building_height", truth.at(0, c_height, e.row, e.col)});
    obs.push_back({e.id, first, "street_canyon", truth.at(0, c_canyon, e.row, e.col)});
  }
  return city;
}

void PlantedConfig::validate() const {
  require(rows >= 1 && cols >= 1 && hours >= 1, "planted: grid and hours must be positive");
  require(patch_size % 2 == 1, "planted: patch_size must be odd");
  require(window >= 1 && window <= hours, "planted: window must be in [1, hours]");
  require(samples >= 1 && samples <= rows * cols * (hours - window + 1), "planted: sample count exceeds available keys");
  require(noise_std >= 0.0, "planted: noise_std must be non-negative");
}

double patch_mean(const grid::GridCube& cube, std::size_t channel, std::size_t row, std::size_t col, std::size_t t,
                  std::size_t n) {
  return patch_mean_product(cube, channel, static_cast<std::size_t>(-1), row, col, t, n);
}

double patch_mean_product(const grid::GridCube& cube, std::size_t a, std::size_t b, std::size_t row,
                          std::size_t col, std::size_t t, std::size_t n) {
  const long half = static_cast<long>(n / 2);
  const long R = static_cast<long>(cube.spec.rows), C = static_cast<long>(cube.spec.cols);
  double s = 0.0;
  for (long i = -half; i <= half; ++i) {
    for (long j = -half; j <= half; ++j) {
      const auto r = static_cast<std::size_t>(std::clamp(static_cast<long>(row) + i, 0L, R - 1));
      const auto c = static_cast<std::size_t>(std::clamp(static_cast<long>(col) + j, 0L, C - 1));
      const double va = cube.at(t, a, r, c);
      s += b == static_cast<std::size_t>(-1) ? va : va * cube.at(t, b, r, c);
    }
  }
  return s / static_cast<double>(n * n);
}

namespace {

grid::ChannelSchema planted_schema(const std::vector<std::string>& names) {
  std::vector<grid::ChannelDescriptor> ch;
  for (std::size_t i = 0; i < names.size(); ++i) {
    ch.push_back({names[i], i == 0 ? ChannelGroup::pollutant : ChannelGroup::meteorology, "1", false, false});
  }
  return grid::ChannelSchema(std::move(ch));
}

// Distinct (row, col, t) keys with t >= W-1, in draw order.
std::vector<PlantedSample> draw_keys(const PlantedConfig& cfg, Rng& rng) {
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  std::vector<PlantedSample> out;
  while (out.size() < cfg.samples) {
    PlantedSample s;
    s.row = rng.below(cfg.rows);
    s.col = rng.below(cfg.cols);
    s.t = cfg.window - 1 + rng.below(cfg.hours - cfg.window + 1);
    if (seen.insert({s.row, s.col, s.t}).second) out.push_back(s);
  }
  return out;
}

void apply_constants(const PlantedConfig& cfg, grid::GridCube& cube) {
  for (std::size_t c = 0; c < cfg.constant_channels.size() && c < cube.channels(); ++c) {
    if (!cfg.constant_channels[c]) continue;
    for (std::size_t t = 0; t < cube.hours; ++t) {
      std::fill_n(cube.values.begin() + static_cast<long>((t * cube.channels() + c) * cube.plane()), cube.plane(),
                  *cfg.constant_channels[c]);
    }
  }
}

}  // namespace

PlantedDataset planted_interaction_dataset(const PlantedConfig& cfg) {
  cfg.validate();
  Rng master(cfg.seed);
  Rng fields = master.fork(1), keys = master.fork(2), noise = master.fork(3);
  PlantedDataset out{grid::GridCube(grid::GridSpec{cfg.rows, cfg.cols}, planted_schema({"a", "b", "distractor"}),
                                    grid::make_hour(2024, 1, 1, 0), cfg.hours, grid::CubeVariant::estimation),
                     {}};
  auto& cube = out.cube;
  for (std::size_t t = 0; t < cfg.hours; ++t) {
    const double rho = fields.uniform(-1.0, 1.0);
    const double ortho = std::sqrt(1.0 - rho * rho);
    for (std::size_t r = 0; r < cfg.rows; ++r) {
      for (std::size_t c = 0; c < cfg.cols; ++c) {
        const double a = fields.normal(), z = fields.normal();
        cube.at(t, 0, r, c) = a;
        cube.at(t, 1, r, c) = rho * a + ortho * z;
        cube.at(t, 2, r, c) = fields.normal();
      }
    }
  }
  apply_constants(cfg, cube);
  cube.normalized = true;
  std::fill(cube.imputed.begin(), cube.imputed.end(), 0);
  out.samples = draw_keys(cfg, keys);
  for (auto& s : out.samples) {
    s.clean_target = patch_mean_product(cube, 0, 1, s.row, s.col, s.t, cfg.patch_size);
    s.target = s.clean_target + (cfg.noise_std > 0 ? noise.normal(0.0, cfg.noise_std) : 0.0);
  }
  return out;
}

PlantedDataset planted_linear_dataset(const PlantedConfig& cfg, const std::vector<double>& coefficients) {
  cfg.validate();
  require(!coefficients.empty(), "planted: at least one coefficient is required");
  Rng master(cfg.seed);
  Rng fields = master.fork(1), keys = master.fork(2), noise = master.fork(3);
  std::vector<std::string> names;
  for (std::size_t c = 0; c < coefficients.size(); ++c) names.push_back("x" + std::to_string(c));
  PlantedDataset out{grid::GridCube(grid::GridSpec{cfg.rows, cfg.cols}, planted_schema(names),
                                    grid::make_hour(2024, 1, 1, 0), cfg.hours, grid::CubeVariant::estimation),
                     {}};
  auto& cube = out.cube;
  for (double& v : cube.values) v = fields.normal();
  apply_constants(cfg, cube);
  cube.normalized = true;
  std::fill(cube.imputed.begin(), cube.imputed.end(), 0);
  out.samples = draw_keys(cfg, keys);
  for (auto& s : out.samples) {
    double y = 0.0;
    for (std::size_t c = 0; c < coefficients.size(); ++c) {
      y += coefficients[c] * patch_mean(cube, c, s.row, s.col, s.t, cfg.patch_size);
    }
    s.clean_target = y;
    s.target = y + (cfg.noise_std > 0 ? noise.normal(0.0, cfg.noise_std) : 0.0);
  }
  return out;
}

}  // namespace deepair::synthcity
