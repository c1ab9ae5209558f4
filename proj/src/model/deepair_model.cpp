#include "deepair/model/deepair_model.hpp"

#include <stdexcept>

namespace deepair::model {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void AirResConfig::validate() const {
  require(num_units >= 1, "airres.num_units must be at least 1");
  require(convs_per_unit >= 1, "airres.convs_per_unit must be at least 1");
  require(kernel == 3 || kernel == 1, "airres.kernel must be 1 or 3");
  require(feature_width >= 1, "airres.feature_width must be positive");
}

void LstmConfig::validate() const {
  require(num_layers == 1 || num_layers == 2, "lstm.num_layers must be 1 or 2");
  require(hidden_size >= 1, "lstm.hidden_size must be positive");
}

std::string_view kind_name(ModelKind k) { return k == ModelKind::deepair ? "deepair" : "lstm_baseline"; }

ModelKind parse_kind(std::string_view name) {
  if (name == "deepair") return ModelKind::deepair;
  if (name == "lstm_baseline") return ModelKind::lstm_baseline;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (kind == ModelKind::deepair) airres.validate();
  lstm.validate();
  require(input_channels >= 1, "model input_channels must be positive");
  require(window >= 1, "model window must be positive");
  require(patch_size % 2 == 1, "model patch_size must be odd");
  require(outputs >= 1, "model outputs must be positive");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {
      {"kind", kind_name(c.kind)},
      {"airres",
       {{"num_units", c.airres.num_units},
        {"convs_per_unit", c.airres.convs_per_unit},
        {"kernel", c.airres.kernel},
        {"feature_width", c.airres.feature_width},
        {"use_1x1", c.airres.use_1x1}}},
      {"lstm", {{"num_layers", c.lstm.num_layers}, {"hidden_size", c.lstm.hidden_size}}},
      {"input_channels", c.input_channels},
      {"window", c.window},
      {"patch_size", c.patch_size},
      {"outputs", c.outputs},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.kind = parse_kind(j.at("kind").get<std::string>());
  const auto& a = j.at("airres");
  c.airres.num_units = a.at("num_units").get<std::size_t>();
  c.airres.convs_per_unit = a.at("convs_per_unit").get<std::size_t>();
  c.airres.kernel = a.at("kernel").get<std::size_t>();
  c.airres.feature_width = a.at("feature_width").get<std::size_t>();
  c.airres.use_1x1 = a.at("use_1x1").get<bool>();
  c.lstm.num_layers = j.at("lstm").at("num_layers").get<std::size_t>();
  c.lstm.hidden_size = j.at("lstm").at("hidden_size").get<std::size_t>();
  c.input_channels = j.at("input_channels").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.patch_size = j.at("patch_size").get<std::size_t>();
  c.outputs = j.at("outputs").get<std::size_t>();
  c.validate();
  return c;
}

DeepAirModel::DeepAirModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t C = config_.input_channels;
  if (config_.kind == ModelKind::deepair) {
    const auto& ar = config_.airres;
    const std::size_t F = ar.feature_width, k = ar.kernel;
    params_.add("airres.stem.weight", glorot_uniform(Shape{F, C}, C, F, rng));
    params_.add("airres.stem.bias", Tensor(Shape{F}));
    for (std::size_t u = 0; u < ar.num_units; ++u) {
      const std::string unit = "airres.unit" + std::to_string(u);
      for (std::size_t c = 0; c < ar.convs_per_unit; ++c) {
        // No conv bias: the batch norm that follows would cancel it.
        params_.add(unit + ".conv" + std::to_string(c) + ".weight",
                    glorot_uniform(Shape{F, F, k, k}, F * k * k, F * k * k, rng));
        params_.add(unit + ".bn" + std::to_string(c) + ".gamma", Tensor(Shape{F}, 1.0));
        params_.add(unit + ".bn" + std::to_string(c) + ".beta", Tensor(Shape{F}));
        bn_.emplace_back(F);
      }
      if (ar.use_1x1 && u + 1 < ar.num_units) {
        const std::string mix = "airres.mix" + std::to_string(u);
        params_.add(mix + ".weight", glorot_uniform(Shape{F, F}, F, F, rng));
        params_.add(mix + ".bias", Tensor(Shape{F}));
      }
    }
  }
  const std::size_t H = config_.lstm.hidden_size;
  for (std::size_t l = 0; l < config_.lstm.num_layers; ++l) {
    const std::size_t in = l == 0 ? config_.lstm_input_size() : H;
    const std::string p = "lstm.layer" + std::to_string(l) + ".";
    ops::LstmWeights w;
    w.w_i = params_.add(p + "w_i", glorot_uniform(Shape{H, in}, in, H, rng));
    w.w_f = params_.add(p + "w_f", glorot_uniform(Shape{H, in}, in, H, rng));
    w.w_o = params_.add(p + "w_o", glorot_uniform(Shape{H, in}, in, H, rng));
    w.w_c = params_.add(p + "w_c", glorot_uniform(Shape{H, in}, in, H, rng));
    w.u_i = params_.add(p + "u_i", glorot_uniform(Shape{H, H}, H, H, rng));
    w.u_f = params_.add(p + "u_f", glorot_uniform(Shape{H, H}, H, H, rng));
    w.u_o = params_.add(p + "u_o", glorot_uniform(Shape{H, H}, H, H, rng));
    w.u_c = params_.add(p + "u_c", glorot_uniform(Shape{H, H}, H, H, rng));
    w.b_i = params_.add(p + "b_i", Tensor(Shape{H}));
    w.b_f = params_.add(p + "b_f", Tensor(Shape{H}, 1.0));
    w.b_o = params_.add(p + "b_o", Tensor(Shape{H}));
    w.b_c = params_.add(p + "b_c", Tensor(Shape{H}));
    lstm_.push_back(w);
  }
  params_.add("head.weight", glorot_uniform(Shape{config_.outputs, H}, H, config_.outputs, rng));
  params_.add("head.bias", Tensor(Shape{config_.outputs}));
}

Var DeepAirModel::conv_weight(std::size_t unit, std::size_t conv) const {
  return params_.get("airres.unit" + std::to_string(unit) + ".conv" + std::to_string(conv) + ".weight");
}

Var DeepAirModel::stem(Tape& tape, const Var& frames) {
  return ops::conv1x1(tape, frames, params_.get("airres.stem.weight"), params_.get("airres.stem.bias"));
}

Var DeepAirModel::residual_unit(Tape& tape, const Var& x, std::size_t unit, ops::Mode mode) {
  const auto& ar = config_.airres;
  if (unit >= ar.num_units) throw std::out_of_range("residual_unit: no unit " + std::to_string(unit));
  const Shape& s = x->shape();
  if (s.size() != 4 || s[1] != ar.feature_width) {
    throw std::invalid_argument("residual_unit: expected [B," + std::to_string(ar.feature_width) + ",N,N], got " +
                                shape_string(s));
  }
  const std::string prefix = "airres.unit" + std::to_string(unit) + ".bn";
  Var branch = x;
  for (std::size_t c = 0; c < ar.convs_per_unit; ++c) {
    branch = ops::conv2d(tape, branch, conv_weight(unit, c), nullptr, (ar.kernel - 1) / 2);
    branch = ops::batch_norm(tape, branch, params_.get(prefix + std::to_string(c) + ".gamma"),
                             params_.get(prefix + std::to_string(c) + ".beta"), bn_[bn_index(unit, c)], mode);
    if (c + 1 < ar.convs_per_unit) branch = ops::relu(tape, branch);
  }
  return ops::relu(tape, ops::add(tape, x, branch));
}

Var DeepAirModel::inter_unit(Tape& tape, const Var& x, std::size_t after_unit) {
  const std::string mix = "airres.mix" + std::to_string(after_unit);
  return ops::relu(tape, ops::conv1x1(tape, x, params_.get(mix + ".weight"), params_.get(mix + ".bias")));
}

Var DeepAirModel::airres_forward(Tape& tape, const Var& frames, ops::Mode mode) {
  if (config_.kind != ModelKind::deepair) throw std::logic_error("airres_forward: model has no AirRes trunk");
  Var x = stem(tape, frames);
  const auto& ar = config_.airres;
  for (std::size_t u = 0; u < ar.num_units; ++u) {
    x = residual_unit(tape, x, u, mode);
    if (ar.use_1x1 && u + 1 < ar.num_units) x = inter_unit(tape, x, u);
  }
  return ops::global_avg_pool(tape, x);
}

Var DeepAirModel::lstm_forward(Tape& tape, const std::vector<Var>& sequence) {
  if (sequence.empty()) throw std::invalid_argument("lstm_forward: empty sequence");
  const std::size_t B = sequence.front()->shape()[0];
  const std::size_t H = config_.lstm.hidden_size;
  std::vector<ops::LstmState> state(lstm_.size());
  for (auto& s : state) {
    s.h = constant(Tensor(Shape{B, H}));
    s.c = constant(Tensor(Shape{B, H}));
  }
  for (const Var& x_t : sequence) {
    Var input = x_t;
    for (std::size_t l = 0; l < lstm_.size(); ++l) {
      state[l] = ops::lstm_step(tape, input, state[l].h, state[l].c, lstm_[l]);
      input = state[l].h;
    }
  }
  return state.back().h;
}

Var DeepAirModel::head(Tape& tape, const Var& h) {
  return ops::linear(tape, h, params_.get("head.weight"), params_.get("head.bias"));
}

Var DeepAirModel::forward(Tape& tape, const Var& patches, ops::Mode mode) {
  const Shape& s = patches->shape();
  const std::size_t C = config_.input_channels, W = config_.window, N = config_.patch_size;
  if (s.size() != 5 || s[1] != W || s[2] != C || s[3] != N || s[4] != N) {
    throw std::invalid_argument("forward: expected patches [B," + std::to_string(W) + "," + std::to_string(C) + "," +
                                std::to_string(N) + "," + std::to_string(N) + "], got " + shape_string(s));
  }
  const std::size_t B = s[0];
  Var frames = ops::reshape(tape, patches, Shape{B * W, C, N, N});
  Var features = config_.kind == ModelKind::deepair ? airres_forward(tape, frames, mode)
                                                     : ops::center_pixel(tape, frames);
  std::vector<Var> sequence;
  sequence.reserve(W);
  for (std::size_t t = 0; t < W; ++t) {
    std::vector<std::size_t> rows(B);
    for (std::size_t b = 0; b < B; ++b) rows[b] = b * W + t;
    sequence.push_back(ops::select_rows(tape, features, std::move(rows)));
  }
  return head(tape, lstm_forward(tape, sequence));
}

std::vector<std::string> DeepAirModel::batch_norm_names() const {
  std::vector<std::string> names;
  for (std::size_t u = 0; u < config_.airres.num_units && config_.kind == ModelKind::deepair; ++u) {
    for (std::size_t c = 0; c < config_.airres.convs_per_unit; ++c) {
      names.push_back("airres.unit" + std::to_string(u) + ".bn" + std::to_string(c));
    }
  }
  return names;
}

void DeepAirModel::mark_running_stats_ready() {
  for (auto& s : bn_) s.initialized = true;
}

ModelState DeepAirModel::snapshot() const {
  ModelState st;
  for (const auto& p : params_.items()) st.parameters.push_back(p.var->value());
  for (const auto& s : bn_) {
    st.running.push_back(s.running_mean);
    st.running.push_back(s.running_var);
    st.running_initialized.push_back(s.initialized);
  }
  return st;
}

void DeepAirModel::restore(const ModelState& st) {
  if (st.parameters.size() != params_.size() || st.running.size() != 2 * bn_.size()) {
    throw std::invalid_argument("restore: state does not match the model layout");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& v = params_.items()[i].var->mutable_value();
    if (v.shape() != st.parameters[i].shape()) {
      throw std::invalid_argument("restore: shape mismatch for '" + params_.items()[i].name + "'");
    }
    v = st.parameters[i];
  }
  for (std::size_t i = 0; i < bn_.size(); ++i) {
    bn_[i].running_mean = st.running[2 * i];
    bn_[i].running_var = st.running[2 * i + 1];
    bn_[i].initialized = st.running_initialized[i];
  }
}

}  // namespace deepair::model
