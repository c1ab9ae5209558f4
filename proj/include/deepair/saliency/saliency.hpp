#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "deepair/grid/schema.hpp"
#include "deepair/model/deepair_model.hpp"
#include "deepair/numerics/tensor.hpp"
#include "deepair/training/dataset.hpp"

namespace deepair::saliency {

// Gradient of a scalar function of `input`, by reverse mode.
Tensor input_gradient(const std::function<Var(Tape&, const Var&)>& scalar, const Tensor& input);

// d(output)/d(input) for one patch sequence [W, C, N, N], model in eval
// mode. Multi-output models are differentiated through the mean of their
// outputs. Parameter gradients are left cleared.
Tensor input_gradient(model::DeepAirModel& model, const Tensor& patch);

// Mean |gradient| over the W*N*N positions of each channel.
std::vector<double> channel_mean_abs(const Tensor& gradient);

struct ChannelScore {
  std::string name;
  grid::ChannelGroup group = grid::ChannelGroup::pollutant;
  double score = 0.0;
  double normalized = 0.0;  // score / max score
};

struct GroupScore {
  grid::ChannelGroup group = grid::ChannelGroup::pollutant;
  double score = 0.0;  // mean of the member channel scores
  std::size_t channels = 0;
};

struct SaliencyScores {
  std::vector<ChannelScore> channels;  // schema order
  std::vector<GroupScore> groups;      // groups present, in enum order
  std::size_t samples = 0;
};

struct SaliencyOptions {
  std::size_t max_samples = 0;  // 0 = every listed sample
  std::uint64_t seed = 0;       // subsample draw
};

// Average over the listed samples of the per-channel mean |gradient|.
SaliencyScores saliency_scores(model::DeepAirModel& model, const training::PatchDataset& data,
                               const std::vector<std::size_t>& indices, const SaliencyOptions& options = {});

void write_scores(std::ostream& os, const SaliencyScores& scores);

}  // namespace deepair::saliency
