#include "deepair/cli/commands.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "deepair/grid/interpolation.hpp"
#include "deepair/grid/io.hpp"
#include "deepair/grid/normalize.hpp"
#include "deepair/inference/inference.hpp"
#include "deepair/model/checkpoint.hpp"
#include "deepair/saliency/saliency.hpp"
#include "deepair/synthcity/synthcity.hpp"
#include "deepair/training/trainer.hpp"

namespace deepair::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kDatasetFormat = "deepair-dataset v1";

// Unknown keys are almost always typos; reject them with the section name.
void check_keys(const json& section, const std::string& name, std::initializer_list<std::string_view> allowed) {
  if (!section.is_object()) throw ConfigError(name + " must be an object");
  for (const auto& [key, value] : section.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) throw ConfigError(name + ": unknown key '" + key + "'");
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

void write_json(const fs::path& path, const json& j) { grid::write_text_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(grid::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

template <class F>
std::string render(F&& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

void write_resolved(const RunConfig& config, const std::string& command, const json& section) {
  json doc = {{"command", command},
              {"seed", config.seed},
              {"output_dir", config.output_dir.string()},
              {"data_dir", config.data_dir.string()},
              {command, section}};
  write_json(config.output_dir / (command + ".config.json"), doc);
}

// Timestamps and durations go to run.log only, so every other artifact is
// a pure function of the inputs.
void log_run(const RunConfig& config, const std::string& command, double seconds) {
  fs::create_directories(config.output_dir);
  std::ofstream log(config.output_dir / "run.log", std::ios::app);
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  log << "timestamp=" << std::chrono::duration_cast<std::chrono::seconds>(now).count() << " command=" << command
      << " wall_clock_seconds=" << seconds << '\n';
}

// ---- dataset files ----

struct Dataset {
  grid::GridSpec spec;
  grid::ChannelSchema schema;
  grid::StationRegistry registry;
  std::vector<grid::Observation> observations;
};

Dataset load_dataset(const fs::path& dir) {
  const json manifest = read_json(dir / "dataset.json");
  if (manifest.value("format", "") != kDatasetFormat) throw ConfigError(dir.string() + ": not a dataset directory");
  Dataset d;
  d.spec = grid::grid_spec_from_json(manifest.at("grid"));
  d.schema = grid::schema_from_json(manifest.at("schema"));
  std::istringstream reg(grid::read_text_file(dir / "registry.csv"));
  d.registry = grid::StationRegistry(grid::read_registry_entries(reg), d.spec);
  d.registry.validate_channels(d.schema);
  std::istringstream obs(grid::read_text_file(dir / "observations.csv"));
  d.observations = grid::read_observations(obs);
  return d;
}

grid::GroundTruth load_truth(const fs::path& dir) {
  std::istringstream is(grid::read_text_file(dir / "ground_truth.csv"));
  return grid::read_truth(is);
}

// ---- train section ----

struct TrainSection {
  std::string task = "estimate";
  std::string pollutant;
  std::string name = "model";
  training::TrainConfig train;
  model::ModelConfig model;
  double lr_scale = 1.0;
  bool grid_search = false;
  std::vector<std::size_t> search_layers = {1, 2};
  std::vector<std::size_t> search_hidden = {128, 256, 512};
  training::SplitMode split_mode = training::SplitMode::random;
  double train_fraction = 0.8, validation_fraction = 0.1;

  json to_json() const {
    return {{"task", task},
            {"pollutant", pollutant},
            {"name", name},
            {"patch_size", train.patch_size},
            {"window", train.window},
            {"horizon", train.horizon},
            {"learning_rate", train.learning_rate / lr_scale},
            {"lr_scale", lr_scale},
            {"patience_epochs", train.patience_epochs},
            {"batch_size", train.batch_size},
            {"max_epochs", train.max_epochs},
            {"max_steps", train.max_steps},
            {"stop_below_train_loss", train.stop_below_train_loss},
            {"validation_metric", train.validation_metric == training::ValidationMetric::mape ? "mape" : "mse"},
            {"seed", train.seed},
            {"model", std::string(model::kind_name(model.kind))},
            {"use_1x1", model.airres.use_1x1},
            {"num_units", model.airres.num_units},
            {"feature_width", model.airres.feature_width},
            {"lstm_layers", model.lstm.num_layers},
            {"hidden_size", model.lstm.hidden_size},
            {"grid_search", grid_search},
            {"search_layers", search_layers},
            {"search_hidden", search_hidden},
            {"split", split_mode == training::SplitMode::random ? "random" : "contiguous"},
            {"train_fraction", train_fraction},
            {"validation_fraction", validation_fraction}};
  }
};

TrainSection parse_train(const json& s, std::uint64_t seed, const grid::ChannelSchema& schema) {
  check_keys(s, "train",
             {"task", "pollutant", "name", "patch_size", "window", "horizon", "learning_rate", "lr_scale",
              "patience_epochs", "batch_size", "max_epochs", "max_steps", "stop_below_train_loss",
              "validation_metric", "seed", "model", "use_1x1", "num_units", "feature_width", "lstm_layers",
              "hidden_size", "grid_search", "search_layers", "search_hidden", "split", "train_fraction",
              "validation_fraction"});
  TrainSection t;
  t.task = s.value("task", t.task);
  if (t.task != "estimate" && t.task != "forecast") throw ConfigError("train.task must be estimate or forecast");
  const auto pollutants = schema.indices_in(grid::ChannelGroup::pollutant);
  t.pollutant = s.value("pollutant", schema[pollutants.front()].name);
  if (!schema.find(t.pollutant) || schema[*schema.find(t.pollutant)].group != grid::ChannelGroup::pollutant) {
    throw ConfigError("train.pollutant '" + t.pollutant + "' is not a pollutant channel");
  }
  t.name = s.value("name", t.name);
  json tj = s;
  if (!tj.contains("seed")) tj["seed"] = seed;
  t.train = training::train_config_from_json(tj);
  t.lr_scale = s.value("lr_scale", 1.0);
  if (!(t.lr_scale > 0.0)) throw ConfigError("train.lr_scale must be positive");
  t.train.learning_rate *= t.lr_scale;
  if (t.task == "estimate" && t.train.horizon != 0) throw ConfigError("train.horizon must be 0 for task estimate");
  if (t.task == "forecast" && t.train.horizon == 0) throw ConfigError("train.horizon must be >= 1 for task forecast");
  try {
    t.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  t.model.kind = model::parse_kind(s.value("model", std::string("deepair")));
  t.model.airres.use_1x1 = s.value("use_1x1", true);
  t.model.airres.num_units = s.value("num_units", t.model.airres.num_units);
  t.model.airres.feature_width = s.value("feature_width", t.model.airres.feature_width);
  t.model.lstm.num_layers = s.value("lstm_layers", t.model.lstm.num_layers);
  t.model.lstm.hidden_size = s.value("hidden_size", t.model.lstm.hidden_size);
  t.model.input_channels = schema.size();
  t.model.window = t.train.window;
  t.model.patch_size = t.train.patch_size;
  t.model.outputs = t.train.horizon == 0 ? 1 : t.train.horizon;
  t.grid_search = s.value("grid_search", false);
  t.search_layers = s.value("search_layers", t.search_layers);
  t.search_hidden = s.value("search_hidden", t.search_hidden);
  const std::string split = s.value("split", std::string("random"));
  if (split != "random" && split != "contiguous") throw ConfigError("train.split must be random or contiguous");
  t.split_mode = split == "random" ? training::SplitMode::random : training::SplitMode::contiguous;
  t.train_fraction = s.value("train_fraction", t.train_fraction);
  t.validation_fraction = s.value("validation_fraction", t.validation_fraction);
  try {
    t.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  return t;
}

fs::path cube_base(const RunConfig& config, grid::CubeVariant v) {
  return config.data_dir / (v == grid::CubeVariant::forecast ? "forecast" : "estimation");
}

// A checkpoint plus everything needed to rebuild its samples.
struct Bundle {
  model::LoadedModel loaded;
  grid::GridCube cube;  // normalised with the checkpoint's statistics
  grid::StationRegistry registry;
  grid::GroundTruth truth;
  std::size_t patch_size = 0, window = 0, horizon = 0;
  double pollutant_mean = 0.0, pollutant_std = 1.0;
};

Bundle load_bundle(const RunConfig& config, const fs::path& checkpoint) {
  if (!fs::exists(fs::path(checkpoint).concat(".json"))) {
    throw ConfigError("checkpoint '" + checkpoint.string() + "' not found");
  }
  const json header = read_json(fs::path(checkpoint).concat(".json"));
  const auto raw = grid::load_cube(cube_base(config, grid::parse_variant(header.at("variant").get<std::string>())));
  Bundle b{model::load_checkpoint(checkpoint, raw.schema.hash()), {}, {}, {}, 0, 0, 0, 0.0, 1.0};
  b.cube = grid::normalize(raw, b.loaded.meta.normalization);
  const Dataset d = load_dataset(config.data_dir);
  b.registry = d.registry;
  b.truth = load_truth(config.data_dir);
  const auto tc = training::train_config_from_json(b.loaded.meta.train_config);
  b.patch_size = tc.patch_size;
  b.window = tc.window;
  b.horizon = tc.horizon;
  const auto& ps = b.loaded.meta.normalization.named(b.loaded.meta.target);
  b.pollutant_mean = ps.mean;
  b.pollutant_std = ps.std;
  return b;
}

training::PatchDataset bundle_dataset(const Bundle& b) {
  return training::build_station_dataset(b.cube, b.truth, b.registry, b.loaded.meta.target, b.pollutant_mean,
                                         b.pollutant_std, b.patch_size, b.window, b.horizon);
}

fs::path default_checkpoint(const RunConfig& config) { return config.output_dir / "model"; }

fs::path checkpoint_path(const RunConfig& config, const json& section) {
  return section.contains("checkpoint") ? resolve(config.output_dir, section.at("checkpoint").get<std::string>())
                                        : default_checkpoint(config);
}

std::size_t hour_index(const grid::GridCube& cube, const json& section, std::size_t window) {
  if (!section.contains("hour")) return cube.hours - 1;
  const auto h = grid::parse_hour(section.at("hour").get<std::string>());
  const std::int64_t t = h.hours - cube.start.hours;
  if (t < 0 || t >= static_cast<std::int64_t>(cube.hours)) throw ConfigError("hour outside the cube's time range");
  if (static_cast<std::size_t>(t) + 1 < window) {
    throw ConfigError("hour " + grid::format_hour(h) + " has fewer than " + std::to_string(window) +
                      " hours of history");
  }
  return static_cast<std::size_t>(t);
}

std::string stamp(grid::HourStamp h) {
  std::string s = grid::format_hour(h);  // YYYY-MM-DDTHH:00
  std::string out;
  for (char c : s.substr(0, 13)) {
    if (c != '-' && c != 'T') out += c;
  }
  return out;
}

}  // namespace

const json& RunConfig::section(const std::string& name) const {
  static const json empty = json::object();
  return doc.contains(name) ? doc.at(name) : empty;
}

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"seed",     "output_dir", "data_dir",     "synth",    "preprocess",
                                              "train",    "evaluate",   "estimate_map", "forecast", "saliency",
                                              "seasonal_maps"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ConfigError("unknown top-level key '" + key + "'");
  }
  RunConfig c;
  c.doc = doc;
  c.seed = doc.value("seed", std::uint64_t{0});
  c.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
  c.data_dir = doc.contains("data_dir") ? resolve(base_dir, doc.at("data_dir").get<std::string>())
                                        : c.output_dir / "data";
  return c;
}

RunConfig load_run_config(const fs::path& file) {
  if (!fs::exists(file)) throw ConfigError("config file '" + file.string() + "' not found");
  return run_config_from_json(read_json(file), fs::absolute(file).parent_path());
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"synth",        "preprocess", "train",    "evaluate",
                                                 "estimate-map", "forecast",   "saliency", "seasonal-maps"};
  return names;
}

void cmd_synth(const RunConfig& config, std::ostream& out) {
  json s = config.section("synth");
  if (!s.contains("seed")) s["seed"] = config.seed;
  synthcity::SynthConfig sc;
  try {
    sc = synthcity::synth_config_from_json(s);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth: ") + e.what());
  }
  const auto city = synthcity::generate(sc);
  const auto& dir = config.data_dir;
  write_json(dir / "dataset.json", {{"format", kDatasetFormat},
                                    {"grid", grid::to_json(city.truth.spec)},
                                    {"schema", grid::to_json(city.truth.schema)},
                                    {"start", grid::format_hour(city.truth.start)},
                                    {"hours", city.truth.hours}});
  grid::write_text_file(dir / "observations.csv",
                        render([&](std::ostream& os) { grid::write_observations(os, city.observations); }));
  grid::write_text_file(dir / "registry.csv", render([&](std::ostream& os) { grid::write_registry(os, city.registry); }));
  grid::save_cube(city.truth, dir / "truth_cube");
  write_resolved(config, "synth", synthcity::to_json(sc));
  out << "synth: " << city.observations.size() << " observations, " << city.registry.size() << " registry entries, "
      << city.truth.spec.rows << "x" << city.truth.spec.cols << " grid over " << city.truth.hours << " hours -> "
      << dir.string() << "\n";
}

void cmd_preprocess(const RunConfig& config, std::ostream& out) {
  const json& s = config.section("preprocess");
  check_keys(s, "preprocess", {"idw_power", "holidays"});
  const double power = s.value("idw_power", 2.0);
  if (!(power > 0.0)) throw ConfigError("preprocess.idw_power must be positive");
  grid::Calendar calendar;
  const auto holidays = s.value("holidays", std::vector<std::string>{});
  for (const auto& h : holidays) {
    const auto parts = grid::split(h, '-');
    if (parts.size() != 3) throw ConfigError("preprocess.holidays: expected YYYY-MM-DD, got '" + h + "'");
    calendar.add_holiday(std::stoi(parts[0]), static_cast<unsigned>(std::stoi(parts[1])),
                         static_cast<unsigned>(std::stoi(parts[2])));
  }
  const Dataset d = load_dataset(config.data_dir);
  const auto observed = grid::rasterize(d.observations, d.spec, d.schema, d.registry);
  const auto cubes = grid::preprocess(observed, d.registry, calendar, power);
  grid::save_cube(cubes.estimation, config.data_dir / "estimation");
  grid::save_cube(cubes.forecast, config.data_dir / "forecast");
  grid::write_text_file(config.data_dir / "ground_truth.csv",
                        render([&](std::ostream& os) { grid::write_truth(os, cubes.truth); }));
  write_resolved(config, "preprocess", {{"idw_power", power}, {"holidays", holidays}});
  out << "preprocess: " << observed.missing_count() << " missing values filled; estimation and forecast cubes with "
      << cubes.estimation.channels() << " channels written to " << config.data_dir.string() << "\n";
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  const json& s = config.section("train");
  const auto est = grid::load_cube(cube_base(config, grid::CubeVariant::estimation));
  TrainSection t = parse_train(s, config.seed, est.schema);
  const auto variant = t.task == "estimate" ? grid::CubeVariant::estimation : grid::CubeVariant::forecast;
  const auto raw = variant == grid::CubeVariant::estimation ? est : grid::load_cube(cube_base(config, variant));
  std::vector<std::size_t> hours(raw.hours);
  for (std::size_t h = 0; h < hours.size(); ++h) hours[h] = h;
  const auto stats = grid::fit_normalization(raw, hours);
  const auto cube = grid::normalize(raw, stats);
  const Dataset d = load_dataset(config.data_dir);
  const auto truth = load_truth(config.data_dir);
  const auto& ps = stats.named(t.pollutant);
  const auto data = training::build_station_dataset(cube, truth, d.registry, t.pollutant, ps.mean, ps.std,
                                                    t.train.patch_size, t.train.window, t.train.horizon);
  const auto split =
      training::split_dataset(data, t.train.seed, t.split_mode, t.train_fraction, t.validation_fraction);

  json search_json = json::array();
  if (t.grid_search) {
    const auto result = training::hyperparam_search(t.model, data, split, t.train, t.search_layers, t.search_hidden);
    for (const auto& c : result.cells) {
      search_json.push_back({{"lstm_layers", c.num_layers},
                             {"hidden_size", c.hidden_size},
                             {"validation_error", c.validation_error},
                             {"parameters", c.parameter_count}});
    }
    t.model.lstm.num_layers = result.cells[result.best].num_layers;
    t.model.lstm.hidden_size = result.cells[result.best].hidden_size;
  }
  model::DeepAirModel m(t.model, t.train.seed);
  const auto started = std::chrono::steady_clock::now();
  auto report = training::train(m, data, split, t.train);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const fs::path base = config.output_dir / t.name;
  model::CheckpointMeta meta{t.pollutant, variant, raw.schema.hash(), {}, stats, t.train.seed,
                             training::to_json(t.train)};
  for (std::size_t c = 0; c < raw.channels(); ++c) meta.channel_names.push_back(raw.schema[c].name);
  model::save_checkpoint(base, m, meta);
  report.best_checkpoint = base.filename().string();
  json rj = report.to_json();
  if (t.grid_search) rj["grid_search"] = search_json;
  write_json(fs::path(base).concat(".report.json"), rj);
  write_json(fs::path(base).concat(".split.json"), training::to_json(split, data));
  write_resolved(config, "train", t.to_json());
  log_run(config, "train", seconds);
  out << "train: " << data.size() << " samples (" << split.train.size() << "/" << split.validation.size() << "/"
      << split.test.size() << "), stopped at epoch " << report.stop_epoch << " (" << report.stop_reason
      << "), best epoch " << report.best_epoch << " validation error " << report.best_validation_error << "\n";
}

void cmd_evaluate(const RunConfig& config, std::ostream& out) {
  const json& s = config.section("evaluate");
  check_keys(s, "evaluate", {"checkpoints", "split", "epsilon"});
  const std::string which = s.value("split", std::string("test"));
  if (which != "test" && which != "train" && which != "validation" && which != "all") {
    throw ConfigError("evaluate.split must be test, train, validation or all");
  }
  const double eps = s.value("epsilon", inference::kMapeEpsilon);
  std::vector<std::string> names = s.value("checkpoints", std::vector<std::string>{"model"});
  if (names.empty()) throw ConfigError("evaluate.checkpoints must not be empty");

  std::vector<inference::PollutantEval> rows;
  std::string steps_table;
  for (const auto& name : names) {
    const fs::path base = resolve(config.output_dir, name);
    Bundle b = load_bundle(config, base);
    const auto data = bundle_dataset(b);
    const auto split = training::split_from_json(read_json(fs::path(base).concat(".split.json")), data);
    std::vector<std::size_t> idx = which == "test"         ? split.test
                                   : which == "train"      ? split.train
                                   : which == "validation" ? split.validation
                                                           : std::vector<std::size_t>{};
    if (which == "all") {
      for (std::size_t i = 0; i < data.size(); ++i) idx.push_back(i);
    }
    if (idx.empty()) throw ConfigError("evaluate: the " + which + " split of '" + name + "' is empty");
    const auto pairs = inference::collect_pairs(b.loaded.model, data, idx);
    const auto result = inference::evaluate(pairs, eps);
    rows.push_back({b.loaded.meta.target, result});
    grid::write_text_file(fs::path(base).concat(".pairs.csv"),
                          render([&](std::ostream& os) { inference::write_pairs(os, pairs); }));
    if (pairs.steps > 1) {
      grid::write_text_file(fs::path(base).concat(".steps.csv"),
                            render([&](std::ostream& os) { inference::write_step_table(os, result); }));
    }
    out << "evaluate: " << name << " (" << b.loaded.meta.target << ", " << which << " split) MAPE "
        << result.mape_percent << "% over " << result.samples << " pairs, " << result.excluded << " excluded\n";
  }
  grid::write_text_file(config.output_dir / "eval_table.csv",
                        render([&](std::ostream& os) { inference::write_eval_table(os, rows); }));
  write_resolved(config, "evaluate", {{"checkpoints", names}, {"split", which}, {"epsilon", eps}});
}

void cmd_estimate_map(const RunConfig& config, std::ostream& out) {
  const json& s = config.section("estimate_map");
  check_keys(s, "estimate_map", {"checkpoint", "hour"});
  Bundle b = load_bundle(config, checkpoint_path(config, s));
  if (b.loaded.meta.variant != grid::CubeVariant::estimation) {
    throw ConfigError("estimate_map needs an estimation checkpoint");
  }
  const std::size_t t = hour_index(b.cube, s, b.window);
  const auto map = inference::estimate_city(b.loaded.model, b.cube, t, b.loaded.meta.target,
                                            {b.pollutant_mean, b.pollutant_std});
  const std::string name = "map_" + map.pollutant + "_" + stamp(map.hour);
  grid::write_text_file(config.output_dir / (name + ".csv"),
                        render([&](std::ostream& os) { inference::write_map_csv(os, map); }));
  grid::write_text_file(config.output_dir / (name + ".pgm"),
                        render([&](std::ostream& os) { inference::write_pgm(os, map.rows, map.cols, map.values); }));
  json resolved = {{"checkpoint", checkpoint_path(config, s).string()}, {"hour", grid::format_hour(map.hour)}};
  write_resolved(config, "estimate_map", resolved);
  out << "estimate-map: " << map.values.size() << " cells at " << grid::format_hour(map.hour) << " -> " << name
      << ".csv\n";
}

void cmd_forecast(const RunConfig& config, std::ostream& out) {
  const json& s = config.section("forecast");
  check_keys(s, "forecast", {"checkpoint", "hour"});
  Bundle b = load_bundle(config, checkpoint_path(config, s));
  if (b.loaded.meta.variant != grid::CubeVariant::forecast) throw ConfigError("forecast needs a forecast checkpoint");
  const std::size_t t = hour_index(b.cube, s, b.window);
  const auto table = inference::forecast_stations(b.loaded.model, b.cube, b.registry, t, b.loaded.meta.target,
                                                  {b.pollutant_mean, b.pollutant_std});
  const std::string name = "forecast_" + table.pollutant + "_" + stamp(table.hour) + ".csv";
  grid::write_text_file(config.output_dir / name,
                        render([&](std::ostream& os) { inference::write_forecast_csv(os, table); }));
  write_resolved(config, "forecast",
                 {{"checkpoint", checkpoint_path(config, s).string()}, {"hour", grid::format_hour(table.hour)}});
  out << "forecast: " << table.rows.size() << " stations x " << table.horizon << " hours -> " << name << "\n";
}

void cmd_saliency(const RunConfig& config, std::ostream& out) {
  const json& s = config.section("saliency");
  check_keys(s, "saliency", {"checkpoint", "max_samples", "seed"});
  const fs::path base = checkpoint_path(config, s);
  Bundle b = load_bundle(config, base);
  const auto data = bundle_dataset(b);
  const auto split = training::split_from_json(read_json(fs::path(base).concat(".split.json")), data);
  saliency::SaliencyOptions opt{s.value("max_samples", std::size_t{0}), s.value("seed", config.seed)};
  const auto scores = saliency::saliency_scores(b.loaded.model, data, split.train, opt);
  const std::string name = "saliency_" + b.loaded.meta.target + ".csv";
  grid::write_text_file(config.output_dir / name,
                        render([&](std::ostream& os) { saliency::write_scores(os, scores); }));
  write_resolved(config, "saliency",
                 {{"checkpoint", base.string()}, {"max_samples", opt.max_samples}, {"seed", opt.seed}});
  out << "saliency: " << scores.channels.size() << " channels over " << scores.samples << " samples -> " << name
      << "\n";
}

void cmd_seasonal_maps(const RunConfig& config, std::ostream& out) {
  const json& s = config.section("seasonal_maps");
  check_keys(s, "seasonal_maps", {"checkpoint", "stride"});
  const std::size_t stride = s.value("stride", std::size_t{1});
  if (stride == 0) throw ConfigError("seasonal_maps.stride must be positive");
  Bundle b = load_bundle(config, checkpoint_path(config, s));
  if (b.loaded.meta.variant != grid::CubeVariant::estimation) {
    throw ConfigError("seasonal_maps needs an estimation checkpoint");
  }
  std::vector<inference::EstimationMap> maps;
  for (std::size_t t = b.window - 1; t < b.cube.hours; t += stride) {
    maps.push_back(inference::estimate_city(b.loaded.model, b.cube, t, b.loaded.meta.target,
                                            {b.pollutant_mean, b.pollutant_std}));
  }
  const auto seasonal = inference::seasonal_mean_maps(maps);
  for (const auto& m : seasonal.maps) {
    const std::string name = "seasonal_" + b.loaded.meta.target + "_" + std::string(grid::season_name(m.season));
    inference::EstimationMap as_map{maps.front().hour, b.loaded.meta.target, m.rows, m.cols, m.values, ""};
    grid::write_text_file(config.output_dir / (name + ".csv"),
                          render([&](std::ostream& os) { inference::write_map_csv(os, as_map); }));
    grid::write_text_file(config.output_dir / (name + ".pgm"),
                          render([&](std::ostream& os) { inference::write_pgm(os, m.rows, m.cols, m.values); }));
    out << "seasonal-maps: " << grid::season_name(m.season) << " from " << m.count << " hourly maps\n";
  }
  std::string warnings;
  for (const auto& w : seasonal.warnings) {
    warnings += "warning: " + w + "\n";
    out << "seasonal-maps: warning: " << w << "\n";
  }
  grid::write_text_file(config.output_dir / "seasonal_warnings.txt", warnings);
  write_resolved(config, "seasonal_maps", {{"checkpoint", checkpoint_path(config, s).string()}, {"stride", stride}});
}

int run_command(const std::string& command, const RunConfig& config, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, void (*)(const RunConfig&, std::ostream&)> table = {
      {"synth", cmd_synth},       {"preprocess", cmd_preprocess},     {"train", cmd_train},
      {"evaluate", cmd_evaluate}, {"estimate-map", cmd_estimate_map}, {"forecast", cmd_forecast},
      {"saliency", cmd_saliency}, {"seasonal-maps", cmd_seasonal_maps}};
  const auto it = table.find(command);
  if (it == table.end()) {
    err << "error: unknown command '" << command << "'\n";
    return kConfigError;
  }
  try {
    it->second(config, out);
    return kOk;
  } catch (const training::NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

std::string version_text() {
  std::string s;
  for (auto stamp : {grid::kObservationsFormat, grid::kRegistryFormat, grid::kTruthFormat, grid::kCubeFormat,
                     model::kCheckpointFormat, training::kSplitFormat, training::kTrainReportFormat, kDatasetFormat}) {
    s += std::string(stamp) + "\n";
  }
  return s;
}

}  // namespace deepair::cli
