#include "deepair/saliency/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "deepair/grid/io.hpp"
#include "deepair/numerics/ops.hpp"
#include "deepair/numerics/rng.hpp"

namespace deepair::saliency {

Tensor input_gradient(const std::function<Var(Tape&, const Var&)>& scalar, const Tensor& input) {
  const Var x = make_var(input, true);
  Tape tape;
  const Var y = scalar(tape, x);
  if (y->numel() != 1) throw std::invalid_argument("input_gradient: function must return a scalar");
  tape.backward(y);
  return x->grad_tensor();
}

Tensor input_gradient(model::DeepAirModel& model, const Tensor& patch) {
  const auto& cfg = model.config();
  const Shape expected{cfg.window, cfg.input_channels, cfg.patch_size, cfg.patch_size};
  if (patch.shape() != expected) throw std::invalid_argument("input_gradient: patch shape does not match the model");
  Shape batched{1};
  batched.insert(batched.end(), expected.begin(), expected.end());
  const Tensor g = input_gradient(
      [&](Tape& tape, const Var& x) { return ops::mean(tape, model.forward(tape, x, ops::Mode::eval)); },
      patch.reshaped(batched));
  model.parameters().zero_grad();
  return g.reshaped(expected);
}

std::vector<double> channel_mean_abs(const Tensor& gradient) {
  const auto& s = gradient.shape();
  if (s.size() != 4) throw std::invalid_argument("channel_mean_abs: expected [W, C, N, N]");
  const std::size_t W = s[0], C = s[1], plane = s[2] * s[3];
  std::vector<double> out(C, 0.0);
  const auto& g = gradient.data();
  for (std::size_t w = 0; w < W; ++w) {
    for (std::size_t c = 0; c < C; ++c) {
      const double* p = g.data() + (w * C + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) out[c] += std::fabs(p[k]);
    }
  }
  for (double& v : out) v /= static_cast<double>(W * plane);
  return out;
}

SaliencyScores saliency_scores(model::DeepAirModel& model, const training::PatchDataset& data,
                               const std::vector<std::size_t>& indices, const SaliencyOptions& options) {
  if (indices.empty()) throw std::invalid_argument("saliency_scores: empty sample set");
  std::vector<std::size_t> chosen = indices;
  if (options.max_samples && chosen.size() > options.max_samples) {
    Rng rng(options.seed);
    shuffle(chosen, rng);
    chosen.resize(options.max_samples);
    std::sort(chosen.begin(), chosen.end());
  }
  const auto& schema = data.cube().schema;
  std::vector<double> total(schema.size(), 0.0);
  for (std::size_t i : chosen) {
    const Tensor g = input_gradient(model, data.patches({i}).reshaped(
                                               {data.window(), schema.size(), data.patch_size(), data.patch_size()}));
    const auto per = channel_mean_abs(g);
    for (std::size_t c = 0; c < per.size(); ++c) total[c] += per[c];
  }
  SaliencyScores out;
  out.samples = chosen.size();
  double hi = 0.0;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const double s = total[c] / static_cast<double>(chosen.size());
    out.channels.push_back({schema[c].name, schema[c].group, s, 0.0});
    hi = std::max(hi, s);
  }
  for (auto& c : out.channels) c.normalized = hi > 0.0 ? c.score / hi : 0.0;
  for (auto g : {grid::ChannelGroup::pollutant, grid::ChannelGroup::meteorology, grid::ChannelGroup::traffic,
                 grid::ChannelGroup::morphology, grid::ChannelGroup::time}) {
    GroupScore gs{g, 0.0, 0};
    for (const auto& c : out.channels) {
      if (c.group != g) continue;
      gs.score += c.score;
      ++gs.channels;
    }
    if (gs.channels == 0) continue;
    gs.score /= static_cast<double>(gs.channels);
    out.groups.push_back(gs);
  }
  return out;
}

void write_scores(std::ostream& os, const SaliencyScores& scores) {
  os << "channel,group,score,normalized\n";
  for (const auto& c : scores.channels) {
    os << c.name << ',' << grid::group_name(c.group) << ',' << grid::format_double(c.score) << ','
       << grid::format_double(c.normalized) << '\n';
  }
}

}  // namespace deepair::saliency
