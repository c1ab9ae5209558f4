#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepair/numerics/ops.hpp"
#include "deepair/numerics/parameter.hpp"

namespace deepair::model {

struct AirResConfig {
  std::size_t num_units = 4;
  std::size_t convs_per_unit = 2;
  std::size_t kernel = 3;
  std::size_t feature_width = 64;  // F
  bool use_1x1 = true;

  void validate() const;
};

struct LstmConfig {
  std::size_t num_layers = 1;
  std::size_t hidden_size = 128;

  void validate() const;
};

enum class ModelKind { deepair, lstm_baseline };

std::string_view kind_name(ModelKind k);
ModelKind parse_kind(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::deepair;
  AirResConfig airres;
  LstmConfig lstm;
  std::size_t input_channels = 1;  // C
  std::size_t window = 48;         // W
  std::size_t patch_size = 15;     // N
  std::size_t outputs = 1;         // 1 for estimation, L for forecast

  void validate() const;
  std::size_t lstm_input_size() const {
    return kind == ModelKind::deepair ? airres.feature_width : input_channels;
  }
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Value copy of every parameter and running statistic.
struct ModelState {
  std::vector<Tensor> parameters;
  std::vector<Tensor> running;  // mean, var per batch-norm layer
  std::vector<bool> running_initialized;
};

// Stem 1x1 conv C->F, residual units with optional 1x1 layers between them,
// global average pooling per frame, stacked LSTM over the W frame features
// and an affine head on the last hidden state. The lstm_baseline kind feeds
// the centre-pixel channel vector of each frame straight into the LSTM.
class DeepAirModel {
 public:
  DeepAirModel(const ModelConfig& config, std::uint64_t seed);
  // Parameters are shared handles; copying would alias them.
  DeepAirModel(const DeepAirModel&) = delete;
  DeepAirModel& operator=(const DeepAirModel&) = delete;
  DeepAirModel(DeepAirModel&&) = default;
  DeepAirModel& operator=(DeepAirModel&&) = default;

  const ModelConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  // Input [B, W, C, N, N]; output [B, outputs].
  Var forward(Tape& tape, const Var& patches, ops::Mode mode);

  // Building blocks, exposed for testing. Frames are [B, C, N, N].
  Var stem(Tape& tape, const Var& frames);
  Var residual_unit(Tape& tape, const Var& x, std::size_t unit, ops::Mode mode);
  Var inter_unit(Tape& tape, const Var& x, std::size_t after_unit);
  Var airres_forward(Tape& tape, const Var& frames, ops::Mode mode);  // -> [B, F]
  // Sequence is W tensors of [B, D]; returns the top layer's last h, [B, hidden].
  Var lstm_forward(Tape& tape, const std::vector<Var>& sequence);
  Var head(Tape& tape, const Var& h);

  std::vector<ops::BatchNormState>& batch_norm_states() { return bn_; }
  const std::vector<ops::BatchNormState>& batch_norm_states() const { return bn_; }
  std::vector<std::string> batch_norm_names() const;
  // Treat the current running statistics as fitted, so eval mode works on a
  // freshly built model.
  void mark_running_stats_ready();

  ModelState snapshot() const;
  void restore(const ModelState& state);

 private:
  Var conv_weight(std::size_t unit, std::size_t conv) const;
  std::size_t bn_index(std::size_t unit, std::size_t conv) const { return unit * config_.airres.convs_per_unit + conv; }

  ModelConfig config_;
  ParameterSet params_;
  std::vector<ops::BatchNormState> bn_;
  std::vector<ops::LstmWeights> lstm_;
};

}  // namespace deepair::model
