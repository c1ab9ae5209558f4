#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepair/model/deepair_model.hpp"
#include "deepair/training/dataset.hpp"

namespace deepair::training {

inline constexpr std::string_view kTrainReportFormat = "deepair-train-report v1";

enum class ValidationMetric { mape, mse };

struct TrainConfig {
  std::size_t patch_size = 15;
  std::size_t window = 48;
  std::size_t horizon = 0;  // 0 = estimation
  double learning_rate = 1e-4;
  std::size_t patience_epochs = 5;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 200;
  std::uint64_t seed = 0;
  ValidationMetric validation_metric = ValidationMetric::mape;
  // Optional extra stopping rules; 0 disables them.
  std::size_t max_steps = 0;
  double stop_below_train_loss = 0.0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Thrown when a loss turns non-finite; names the offending sample.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Patience counting over 1-based epochs; only strict improvement resets it.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}
  // Returns true when training should stop after this epoch.
  bool update(std::size_t epoch, double value);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_error = 0.0;  // selection metric; train loss when there is no validation set
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t stop_epoch = 0;
  std::size_t best_epoch = 0;
  double best_validation_error = 0.0;
  std::size_t steps = 0;
  std::string stop_reason;
  std::string best_checkpoint;  // filled in by whoever saves it
  double wall_clock_seconds = 0.0;

  // Deterministic fields only; wall clock is written on its own line.
  nlohmann::json to_json() const;
};

// Mean squared error of one batch of predictions [B, outputs] vs targets.
// For L outputs this is the per-sample mean over the horizon, averaged.
Var sample_loss(Tape& tape, const Var& predictions, const Tensor& targets);

// Runs Algorithm-1 style patch training in place and leaves the model at its
// best-validation parameters.
TrainReport train(model::DeepAirModel& model, const PatchDataset& data, const DatasetSplit& split,
                  const TrainConfig& config);

// Validation error of `indices` with the model in eval mode.
double evaluate_error(model::DeepAirModel& model, const PatchDataset& data, const std::vector<std::size_t>& indices,
                      ValidationMetric metric, std::size_t batch_size = 64);

// Physical-unit predictions [indices x outputs], row-major.
std::vector<double> predict(model::DeepAirModel& model, const PatchDataset& data,
                            const std::vector<std::size_t>& indices, std::size_t batch_size = 64);

struct SearchCell {
  std::size_t num_layers = 1;
  std::size_t hidden_size = 128;
  double validation_error = 0.0;
  std::size_t parameter_count = 0;
};

// Lowest validation error; exact ties go to the cell with fewer parameters,
// then to the earlier cell.
std::size_t select_best(const std::vector<SearchCell>& cells);

struct SearchResult {
  std::vector<SearchCell> cells;
  std::size_t best = 0;
};

// Trains one model per (layers, hidden) cell with the same split and seed.
SearchResult hyperparam_search(const model::ModelConfig& base, const PatchDataset& data, const DatasetSplit& split,
                               const TrainConfig& config, const std::vector<std::size_t>& layer_options = {1, 2},
                               const std::vector<std::size_t>& hidden_options = {128, 256, 512});

}  // namespace deepair::training
