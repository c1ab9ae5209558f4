#include "deepair/training/trainer.hpp"

#include <chrono>
#include <cmath>

#include "deepair/inference/metrics.hpp"
#include "deepair/numerics/rng.hpp"

namespace deepair::training {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (patch_size % 2 == 0) fail("train.patch_size must be odd");
  if (window < 1) fail("train.window must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("train.learning_rate must be finite and >= 0");
  if (batch_size < 1) fail("train.batch_size must be at least 1");
  if (max_epochs < 1) fail("train.max_epochs must be at least 1");
  if (stop_below_train_loss < 0.0) fail("train.stop_below_train_loss must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"patch_size", c.patch_size},
      {"window", c.window},
      {"horizon", c.horizon},
      {"learning_rate", c.learning_rate},
      {"patience_epochs", c.patience_epochs},
      {"batch_size", c.batch_size},
      {"max_epochs", c.max_epochs},
      {"seed", c.seed},
      {"validation_metric", c.validation_metric == ValidationMetric::mape ? "mape" : "mse"},
      {"max_steps", c.max_steps},
      {"stop_below_train_loss", c.stop_below_train_loss},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.patch_size = j.value("patch_size", c.patch_size);
  c.window = j.value("window", c.window);
  c.horizon = j.value("horizon", c.horizon);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.patience_epochs = j.value("patience_epochs", c.patience_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  const std::string metric = j.value("validation_metric", std::string("mape"));
  if (metric != "mape" && metric != "mse") throw std::invalid_argument("train.validation_metric must be mape or mse");
  c.validation_metric = metric == "mape" ? ValidationMetric::mape : ValidationMetric::mse;
  c.max_steps = j.value("max_steps", c.max_steps);
  c.stop_below_train_loss = j.value("stop_below_train_loss", c.stop_below_train_loss);
  c.validate();
  return c;
}

bool EarlyStopper::update(std::size_t epoch, double value) {
  improved_ = value < best_;
  if (improved_) {
    best_ = value;
    best_epoch_ = epoch;
    return false;
  }
  return epoch - best_epoch_ >= patience_;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json e = nlohmann::json::array();
  for (const auto& r : epochs) {
    e.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"validation_error", r.validation_error}});
  }
  return {
      {"format", kTrainReportFormat},
      {"epochs", e},
      {"stop_epoch", stop_epoch},
      {"best_epoch", best_epoch},
      {"best_validation_error", best_validation_error},
      {"steps", steps},
      {"stop_reason", stop_reason},
      {"best_checkpoint", best_checkpoint},
  };
}

Var sample_loss(Tape& tape, const Var& predictions, const Tensor& targets) {
  return ops::mse_loss(tape, predictions, targets);
}

std::vector<double> predict(model::DeepAirModel& model, const PatchDataset& data,
                            const std::vector<std::size_t>& indices, std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(indices.size() * data.outputs());
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::vector<std::size_t> batch(indices.begin() + static_cast<long>(start),
                                         indices.begin() + static_cast<long>(std::min(indices.size(), start + batch_size)));
    Tape tape = Tape::inference();
    const Var y = model.forward(tape, constant(data.patches(batch)), ops::Mode::eval);
    for (double z : y->value().data()) out.push_back(data.to_physical(z));
  }
  return out;
}

double evaluate_error(model::DeepAirModel& model, const PatchDataset& data, const std::vector<std::size_t>& indices,
                      ValidationMetric metric, std::size_t batch_size) {
  const auto pred = predict(model, data, indices, batch_size);
  std::vector<double> truth;
  truth.reserve(pred.size());
  for (std::size_t i : indices) {
    for (double z : data.samples()[i].target) truth.push_back(data.to_physical(z));
  }
  if (metric == ValidationMetric::mse) {
    // Reported in model units so it is comparable to the training loss.
    const double s2 = data.target_std * data.target_std;
    return inference::mean_squared_error(pred, truth) / s2;
  }
  return inference::mape(pred, truth).mape_percent;
}

TrainReport train(model::DeepAirModel& model, const PatchDataset& data, const DatasetSplit& split,
                  const TrainConfig& config) {
  config.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty training set");
  if (model.config().window != data.window() || model.config().patch_size != data.patch_size() ||
      model.config().input_channels != data.cube().channels() || model.config().outputs != data.outputs()) {
    throw std::invalid_argument("train: model and dataset disagree on window, patch size, channels or outputs");
  }
  const auto wall_start = std::chrono::steady_clock::now();
  TrainReport report;
  EarlyStopper stopper(config.patience_epochs);
  model::ModelState best = model.snapshot();
  std::vector<std::size_t> order = split.train;
  Rng master(config.seed);
  Tensor patches, targets;
  bool done = false;

  for (std::size_t epoch = 1; epoch <= config.max_epochs && !done; ++epoch) {
    Rng epoch_rng = master.fork(epoch);
    order = split.train;
    shuffle(order, epoch_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::vector<std::size_t> batch(order.begin() + static_cast<long>(start),
                                           order.begin() + static_cast<long>(std::min(order.size(), start + config.batch_size)));
      data.assemble(batch, patches, targets);
      Tape tape;
      const Var loss = sample_loss(tape, model.forward(tape, constant(patches), ops::Mode::train), targets);
      const double value = loss->value().item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " for sample " +
                           describe(data.samples()[batch.front()]) +
                           (batch.size() > 1 ? " (batch of " + std::to_string(batch.size()) + ")" : ""));
      }
      tape.backward(loss);
      sgd_step(model.parameters(), config.learning_rate);
      loss_sum += value;
      ++batches;
      ++report.steps;
      if (config.max_steps && report.steps >= config.max_steps) break;
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(batches), 0.0};
    rec.validation_error = split.validation.empty()
                               ? rec.train_loss
                               : evaluate_error(model, data, split.validation, config.validation_metric);
    if (!std::isfinite(rec.validation_error)) {
      throw NumericError("non-finite validation error at epoch " + std::to_string(epoch));
    }
    report.epochs.push_back(rec);
    const bool stop = stopper.update(epoch, rec.validation_error);
    if (stopper.improved()) best = model.snapshot();
    report.stop_epoch = epoch;
    if (stop) {
      report.stop_reason = "patience";
      done = true;
    } else if (config.stop_below_train_loss > 0.0 && rec.train_loss < config.stop_below_train_loss) {
      report.stop_reason = "train_loss_target";
      done = true;
    } else if (config.max_steps && report.steps >= config.max_steps) {
      report.stop_reason = "max_steps";
      done = true;
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "max_epochs";
  model.restore(best);
  report.best_epoch = stopper.best_epoch();
  report.best_validation_error = stopper.best_value();
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return report;
}

std::size_t select_best(const std::vector<SearchCell>& cells) {
  if (cells.empty()) throw std::invalid_argument("select_best: no cells");
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const auto& b = cells[best];
    if (c.validation_error < b.validation_error ||
        (c.validation_error == b.validation_error && c.parameter_count < b.parameter_count)) {
      best = i;
    }
  }
  return best;
}

SearchResult hyperparam_search(const model::ModelConfig& base, const PatchDataset& data, const DatasetSplit& split,
                               const TrainConfig& config, const std::vector<std::size_t>& layer_options,
                               const std::vector<std::size_t>& hidden_options) {
  SearchResult result;
  for (std::size_t layers : layer_options) {
    for (std::size_t hidden : hidden_options) {
      model::ModelConfig cfg = base;
      cfg.lstm.num_layers = layers;
      cfg.lstm.hidden_size = hidden;
      model::DeepAirModel m(cfg, config.seed);
      const TrainReport report = train(m, data, split, config);
      result.cells.push_back({layers, hidden, report.best_validation_error, m.parameters().scalar_count()});
    }
  }
  result.best = select_best(result.cells);
  return result;
}

}  // namespace deepair::training
