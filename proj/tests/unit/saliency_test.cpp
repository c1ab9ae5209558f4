#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "deepair/numerics/ops.hpp"
#include "deepair/saliency/saliency.hpp"
#include "support/gradcheck.hpp"

namespace deepair::saliency {
namespace {

using testing::random_tensor;

grid::ChannelSchema schema(std::size_t C, bool all_meteorology = false) {
  std::vector<grid::ChannelDescriptor> ch;
  const grid::ChannelGroup groups[] = {grid::ChannelGroup::pollutant, grid::ChannelGroup::meteorology,
                                       grid::ChannelGroup::traffic, grid::ChannelGroup::meteorology};
  for (std::size_t c = 0; c < C; ++c) ch.push_back({"c" + std::to_string(c), all_meteorology && c > 0 ? grid::ChannelGroup::meteorology : groups[c % 4], "1",
                  false, false});
  return grid::ChannelSchema(std::move(ch));
}

model::ModelConfig config(std::size_t C = 3, std::size_t outputs = 1) {
  model::ModelConfig c;
  c.airres.num_units = 2;
  c.airres.feature_width = 4;
  c.lstm.hidden_size = 6;
  c.input_channels = C;
  c.window = 2;
  c.patch_size = 3;
  c.outputs = outputs;
  return c;
}

void randomize(model::DeepAirModel& m, Rng& rng) {
  for (const auto& p : m.parameters().items()) {
    for (double& v : p.var->mutable_value().data()) v = rng.uniform(-0.6, 0.6);
  }
  m.mark_running_stats_ready();
}

grid::GridCube random_cube(std::size_t C, std::uint64_t seed, bool all_meteorology = false) {
  grid::GridCube cube(grid::GridSpec{5, 5}, schema(C, all_meteorology), grid::make_hour(2024, 1, 1, 0), 4,
                      grid::CubeVariant::estimation);
  Rng rng(seed);
  for (double& v : cube.values) v = rng.normal();
  cube.normalized = true;
  return cube;
}

Shape patch_shape(const model::ModelConfig& c) { return {c.window, c.input_channels, c.patch_size, c.patch_size}; }

TEST(InputGradient, LinearSurrogateGivesScaledWeights) {
  const std::vector<double> w = {3.0, -2.0, 0.5};
  const Shape shape{2, 3, 3, 3};  // W, C, N, N
  // y = sum_c w_c * (mean of channel c over its W*N*N = 18 positions)
  Tensor weights(shape);
  for (std::size_t i = 0; i < weights.numel(); ++i) weights[i] = w[(i / 9) % 3];
  auto surrogate = [&](Tape& tape, const Var& x) {
    return ops::scale(tape, ops::sum(tape, ops::mul(tape, x, constant(weights))), 1.0 / 18.0);
  };
  Rng rng(1);
  const Tensor g = input_gradient(surrogate, random_tensor(shape, rng));
  for (std::size_t i = 0; i < g.numel(); ++i) EXPECT_NEAR(g[i], w[(i / 9) % 3] / 18.0, 1e-15) << i;
  const auto per = channel_mean_abs(g);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(per[c], std::fabs(w[c]) / 18.0, 1e-15);
}

TEST(InputGradient, DeadChannelHasZeroGradient) {
  Rng rng(2);
  model::DeepAirModel m(config(), 1);
  randomize(m, rng);
  auto& stem = m.parameters().get("airres.stem.weight")->mutable_value();  // [F, C]
  for (std::size_t f = 0; f < 4; ++f) stem[f * 3 + 1] = 0.0;
  const Tensor g = input_gradient(m, random_tensor(patch_shape(m.config()), rng));
  const auto per = channel_mean_abs(g);
  EXPECT_EQ(per[1], 0.0);
  EXPECT_GT(per[0], 0.0);
  EXPECT_GT(per[2], 0.0);
}

TEST(InputGradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    for (std::size_t outputs : {1u, 3u}) {
      model::DeepAirModel m(config(3, outputs), seed);
      randomize(m, rng);
      const Tensor x = random_tensor(patch_shape(m.config()), rng);
      const Tensor g = input_gradient(m, x);
      auto f = [&](const Tensor& in) {
        Tape tape = Tape::inference();
        Shape b{1};
        const auto s = in.shape();
        b.insert(b.end(), s.begin(), s.end());
        const auto y = m.forward(tape, constant(in.reshaped(b)), ops::Mode::eval)->value();
        double mean = 0.0;
        for (double v : y.data()) mean += v;
        return mean / static_cast<double>(y.numel());
      };
      for (int k = 0; k < 10; ++k) {
        const std::size_t i = rng.below(x.numel());
        Tensor up = x, down = x;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        const double numeric = (f(up) - f(down)) / 2e-6;
        EXPECT_LE(std::fabs(g[i] - numeric), std::max(1e-4 * std::max(std::fabs(g[i]), std::fabs(numeric)), 1e-8))
            << "seed " << seed << " coord " << i;
      }
    }
  }
}

TEST(InputGradient, LeavesParameterGradientsClear) {
  Rng rng(4);
  model::DeepAirModel m(config(), 1);
  randomize(m, rng);
  input_gradient(m, random_tensor(patch_shape(m.config()), rng));
  for (const auto& p : m.parameters().items()) {
    const Tensor g = p.var->grad_tensor();
    for (double v : g.data()) ASSERT_EQ(v, 0.0) << p.name;
  }
}

TEST(InputGradient, ChainRuleUnderChannelScaling) {
  Rng rng(5);
  model::DeepAirModel m(config(), 1);
  randomize(m, rng);
  const auto cfg = m.config();
  const Shape batched{1, cfg.window, cfg.input_channels, cfg.patch_size, cfg.patch_size};
  const double k = 2.5;
  Tensor factor(batched);
  for (std::size_t i = 0; i < factor.numel(); ++i) factor[i] = (i / 9) % 3 == 2 ? k : 1.0;
  const Tensor x = random_tensor(batched, rng);
  Tensor scaled = x;
  for (std::size_t i = 0; i < x.numel(); ++i) scaled[i] *= factor[i];
  auto f = [&](Tape& tape, const Var& in) { return ops::mean(tape, m.forward(tape, in, ops::Mode::eval)); };
  const Tensor g_scaled = input_gradient(f, scaled);
  const Tensor g_pre = input_gradient(
      [&](Tape& tape, const Var& in) { return f(tape, ops::mul(tape, in, constant(factor))); }, x);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(g_pre[i], g_scaled[i] * factor[i]) << i;
}

TEST(SaliencyScores, SingleSampleEqualsItsChannelMeans) {
  Rng rng(6);
  const auto cube = random_cube(3, 1);
  training::PatchDataset data(cube, 3, 2, 0);
  data.add({"", {2, 2}, 3, {0.0}});
  data.add({"", {0, 4}, 2, {0.0}});
  model::DeepAirModel m(config(), 1);
  randomize(m, rng);
  const auto s = saliency_scores(m, data, {1});
  const auto per = channel_mean_abs(input_gradient(m, data.patches({1}).reshaped(patch_shape(m.config()))));
  ASSERT_EQ(s.channels.size(), 3u);
  EXPECT_EQ(s.samples, 1u);
  double hi = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(s.channels[c].score, per[c]);
    EXPECT_EQ(s.channels[c].name, cube.schema[c].name);
    hi = std::max(hi, per[c]);
  }
  for (const auto& c : s.channels) EXPECT_EQ(c.normalized, c.score / hi);
  EXPECT_THROW(saliency_scores(m, data, {}), std::invalid_argument);
}

TEST(SaliencyScores, DeadChannelScoresExactlyZero) {
  Rng rng(7);
  const auto cube = random_cube(4, 2);
  training::PatchDataset data(cube, 3, 2, 0);
  for (std::size_t r = 0; r < 5; ++r) data.add({"", {r, r}, 1 + r % 3, {0.0}});
  model::DeepAirModel m(config(4), 1);
  randomize(m, rng);
  auto& stem = m.parameters().get("airres.stem.weight")->mutable_value();
  for (std::size_t f = 0; f < 4; ++f) stem[f * 4 + 3] = 0.0;
  const auto s = saliency_scores(m, data, {0, 1, 2, 3, 4});
  EXPECT_EQ(s.channels[3].score, 0.0);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_GT(s.channels[c].score, 0.0);
  // Groups: pollutant {c0}, meteorology {c1, c3}, traffic {c2}.
  ASSERT_EQ(s.groups.size(), 3u);
  EXPECT_EQ(s.groups[1].group, grid::ChannelGroup::meteorology);
  EXPECT_EQ(s.groups[1].channels, 2u);
  EXPECT_EQ(s.groups[1].score, (s.channels[1].score + 0.0) / 2.0);
}

TEST(SaliencyScores, PermutationEquivariant) {
  Rng rng(8);
  const auto cube = random_cube(3, 3, true);
  const std::size_t perm[3] = {0, 2, 1};  // new channel j holds old channel perm[j]
  grid::GridCube permuted = cube;
  std::vector<grid::ChannelDescriptor> names;
  for (std::size_t j = 0; j < 3; ++j) names.push_back(cube.schema[perm[j]]);
  permuted.schema = grid::ChannelSchema(names);
  for (std::size_t t = 0; t < cube.hours; ++t) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < cube.plane(); ++k) {
        permuted.values[(t * 3 + j) * cube.plane() + k] = cube.values[(t * 3 + perm[j]) * cube.plane() + k];
      }
    }
  }
  training::PatchDataset a(cube, 3, 2, 0), b(permuted, 3, 2, 0);
  for (std::size_t r = 0; r < 4; ++r) {
    a.add({"", {r, 4 - r}, 3, {0.0}});
    b.add({"", {r, 4 - r}, 3, {0.0}});
  }
  model::DeepAirModel ma(config(), 1), mb(config(), 1);
  randomize(ma, rng);
  mb.restore(ma.snapshot());
  const auto& wa = ma.parameters().get("airres.stem.weight")->value();
  auto& wb = mb.parameters().get("airres.stem.weight")->mutable_value();
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t j = 0; j < 3; ++j) wb[f * 3 + j] = wa[f * 3 + perm[j]];
  }
  const auto sa = saliency_scores(ma, a, {0, 1, 2, 3});
  const auto sb = saliency_scores(mb, b, {0, 1, 2, 3});
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(sb.channels[j].name, sa.channels[perm[j]].name);
    EXPECT_NEAR(sb.channels[j].score, sa.channels[perm[j]].score, 1e-12 * sa.channels[perm[j]].score);
  }
}

TEST(SaliencyScores, SubsampleIsSeededAndExportMatchesSchema) {
  Rng rng(9);
  const auto cube = random_cube(3, 4);
  training::PatchDataset data(cube, 3, 2, 0);
  for (std::size_t r = 0; r < 5; ++r) data.add({"", {r, 0}, 2, {0.0}});
  model::DeepAirModel m(config(), 1);
  randomize(m, rng);
  const SaliencyOptions opt{2, 11};
  const auto s1 = saliency_scores(m, data, {0, 1, 2, 3, 4}, opt);
  const auto s2 = saliency_scores(m, data, {0, 1, 2, 3, 4}, opt);
  EXPECT_EQ(s1.samples, 2u);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(s1.channels[c].score, s2.channels[c].score);
  std::ostringstream os;
  write_scores(os, s1);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "channel,group,score,normalized");
  for (std::size_t c = 0; c < 3; ++c) {
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, line.find(',')), cube.schema[c].name);
  }
  EXPECT_FALSE(std::getline(in, line));
}

}  // namespace
}  // namespace deepair::saliency
