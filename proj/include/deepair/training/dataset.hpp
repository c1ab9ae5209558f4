#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepair/grid/interpolation.hpp"
#include "deepair/grid/patch.hpp"
#include "deepair/numerics/tensor.hpp"

namespace deepair::training {

inline constexpr std::string_view kSplitFormat = "deepair-split v1";

// One training example: the W-frame patch centred on `center` ending at hour
// `t`, and its target vector (1 value, or L horizon values).
struct Sample {
  std::string station;  // empty for cell-level synthetic samples
  grid::CellIndex center;
  std::size_t t = 0;
  std::vector<double> target;  // model units (normalised)
};

std::string describe(const Sample& s);

// Samples over one (normalised) cube. The target transform maps model units
// back to physical units: physical = z * target_std + target_mean.
class PatchDataset {
 public:
  PatchDataset(const grid::GridCube& cube, std::size_t patch_size, std::size_t window, std::size_t horizon);

  const grid::GridCube& cube() const { return *cube_; }
  std::size_t patch_size() const { return patch_size_; }
  std::size_t window() const { return window_; }
  std::size_t outputs() const { return horizon_ == 0 ? 1 : horizon_; }
  std::size_t horizon() const { return horizon_; }

  void add(Sample s);
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

  double target_mean = 0.0;
  double target_std = 1.0;
  double to_physical(double z) const { return z * target_std + target_mean; }

  // Fills [B, W, C, N, N] patches and [B, outputs] targets for the listed
  // sample indices, in order.
  void assemble(const std::vector<std::size_t>& indices, Tensor& patches, Tensor& targets) const;
  Tensor patches(const std::vector<std::size_t>& indices) const;

 private:
  const grid::GridCube* cube_;
  std::size_t patch_size_, window_, horizon_;
  std::vector<Sample> samples_;
};

struct SampleKey {
  std::string station;
  std::size_t t = 0;
  bool operator==(const SampleKey&) const = default;
};

// (station, t) pairs with t >= W-1, t+L <= T-1 and a ground-truth value at
// t (L = 0) or at every hour t+1..t+L. Throws if none qualify.
std::vector<SampleKey> enumerate_samples(const grid::GroundTruth& truth, const std::string& pollutant,
                                         std::size_t window, std::size_t horizon);

// Station samples for one pollutant from a normalised cube. Targets are the
// withheld ground truth, normalised with the pollutant channel statistics.
PatchDataset build_station_dataset(const grid::GridCube& cube, const grid::GroundTruth& truth,
                                   const grid::StationRegistry& registry, const std::string& pollutant,
                                   double pollutant_mean, double pollutant_std, std::size_t patch_size,
                                   std::size_t window, std::size_t horizon);

enum class SplitMode { random, contiguous };

struct DatasetSplit {
  std::vector<std::size_t> train, validation, test;  // sample indices
  double train_fraction = 0.8, validation_fraction = 0.1;
  SplitMode mode = SplitMode::random;
  std::uint64_t seed = 0;
};

// Random mode shuffles with the seed; contiguous mode orders by hour (ties by
// index) so the test block is the latest period.
DatasetSplit split_dataset(const PatchDataset& data, std::uint64_t seed, SplitMode mode = SplitMode::random,
                           double train_fraction = 0.8, double validation_fraction = 0.1);

nlohmann::json to_json(const DatasetSplit& split, const PatchDataset& data);
// Rebuilds index sets from saved keys; every key must exist in `data`.
DatasetSplit split_from_json(const nlohmann::json& j, const PatchDataset& data);

}  // namespace deepair::training
