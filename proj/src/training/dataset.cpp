#include "deepair/training/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "deepair/numerics/rng.hpp"

namespace deepair::training {

std::string describe(const Sample& s) {
  std::string id = s.station.empty() ? "cell" : "station '" + s.station + "'";
  return id + " at (" + std::to_string(s.center.row) + "," + std::to_string(s.center.col) + "), t=" +
         std::to_string(s.t);
}

PatchDataset::PatchDataset(const grid::GridCube& cube, std::size_t patch_size, std::size_t window,
                           std::size_t horizon)
    : cube_(&cube), patch_size_(patch_size), window_(window), horizon_(horizon) {
  if (patch_size % 2 == 0) throw std::invalid_argument("dataset: patch size must be odd");
  if (window == 0) throw std::invalid_argument("dataset: window must be positive");
}

void PatchDataset::add(Sample s) {
  if (s.target.size() != outputs()) {
    throw std::invalid_argument("dataset: " + describe(s) + " has " + std::to_string(s.target.size()) +
                                " targets, expected " + std::to_string(outputs()));
  }
  if (s.t + 1 < window_ || s.t >= cube_->hours) throw std::invalid_argument("dataset: " + describe(s) + " out of range");
  samples_.push_back(std::move(s));
}

void PatchDataset::assemble(const std::vector<std::size_t>& indices, Tensor& patches, Tensor& targets) const {
  patches = this->patches(indices);
  targets = Tensor(Shape{indices.size(), outputs()});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& s = samples_.at(indices[b]);
    std::copy(s.target.begin(), s.target.end(), targets.data().begin() + static_cast<long>(b * outputs()));
  }
}

Tensor PatchDataset::patches(const std::vector<std::size_t>& indices) const {
  if (indices.empty()) throw std::invalid_argument("dataset: empty batch");
  const std::size_t C = cube_->channels(), N = patch_size_;
  const std::size_t per = window_ * C * N * N;
  Tensor out(Shape{indices.size(), window_, C, N, N});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& s = samples_.at(indices[b]);
    grid::extract_patch_into(*cube_, s.center, N, s.t, window_, out.data().data() + b * per);
  }
  return out;
}

std::vector<SampleKey> enumerate_samples(const grid::GroundTruth& truth, const std::string& pollutant,
                                         std::size_t window, std::size_t horizon) {
  if (window == 0) throw std::invalid_argument("enumerate_samples: window must be positive");
  const std::size_t p = truth.pollutant_index(pollutant);
  std::vector<SampleKey> keys;
  for (std::size_t s = 0; s < truth.station_ids.size(); ++s) {
    for (std::size_t t = window - 1; t + horizon < truth.hours; ++t) {
      bool ok = true;
      if (horizon == 0) {
        ok = !grid::is_missing(truth.at(s, p, t));
      } else {
        for (std::size_t h = 1; h <= horizon && ok; ++h) ok = !grid::is_missing(truth.at(s, p, t + h));
      }
      if (ok) keys.push_back({truth.station_ids[s], t});
    }
  }
  if (keys.empty()) {
    throw std::invalid_argument("no samples: T=" + std::to_string(truth.hours) + " W=" + std::to_string(window) +
                                " L=" + std::to_string(horizon) + " leave no station hour with a target for '" +
                                pollutant + "'");
  }
  return keys;
}

PatchDataset build_station_dataset(const grid::GridCube& cube, const grid::GroundTruth& truth,
                                   const grid::StationRegistry& registry, const std::string& pollutant,
                                   double pollutant_mean, double pollutant_std, std::size_t patch_size,
                                   std::size_t window, std::size_t horizon) {
  if (!cube.normalized) throw std::invalid_argument("build_station_dataset: cube must be normalised");
  if (cube.start != truth.start || cube.hours != truth.hours) {
    throw std::invalid_argument("build_station_dataset: cube and ground truth cover different hours");
  }
  if (pollutant_std <= 0.0) throw std::invalid_argument("build_station_dataset: pollutant std must be positive");
  const std::size_t p = truth.pollutant_index(pollutant);
  PatchDataset data(cube, patch_size, window, horizon);
  data.target_mean = pollutant_mean;
  data.target_std = pollutant_std;
  for (const auto& key : enumerate_samples(truth, pollutant, window, horizon)) {
    const auto& entry = registry.at(key.station);
    const std::size_t s = truth.station_index(key.station);
    Sample sample{key.station, {entry.row, entry.col}, key.t, {}};
    if (horizon == 0) {
      sample.target.push_back((truth.at(s, p, key.t) - pollutant_mean) / pollutant_std);
    } else {
      for (std::size_t h = 1; h <= horizon; ++h) {
        sample.target.push_back((truth.at(s, p, key.t + h) - pollutant_mean) / pollutant_std);
      }
    }
    data.add(std::move(sample));
  }
  return data;
}

DatasetSplit split_dataset(const PatchDataset& data, std::uint64_t seed, SplitMode mode, double train_fraction,
                           double validation_fraction) {
  if (train_fraction <= 0 || validation_fraction < 0 || train_fraction + validation_fraction > 1.0) {
    throw std::invalid_argument("split fractions must satisfy 0 < train, 0 <= val, train + val <= 1");
  }
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (mode == SplitMode::random) {
    Rng rng(seed);
    shuffle(order, rng);
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data.samples()[a].t < data.samples()[b].t; });
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train,
                              static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n))));
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  split.validation.assign(order.begin() + static_cast<long>(n_train), order.begin() + static_cast<long>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<long>(n_train + n_val), order.end());
  split.train_fraction = train_fraction;
  split.validation_fraction = validation_fraction;
  split.mode = mode;
  split.seed = seed;
  return split;
}

namespace {

// Keys carry the sample index plus its identity, so a split file can only be
// applied to the dataset it was made from.
nlohmann::json keys_of(const std::vector<std::size_t>& idx, const PatchDataset& data) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i : idx) {
    const auto& s = data.samples()[i];
    arr.push_back({i, s.station, s.center.row, s.center.col, s.t});
  }
  return arr;
}

std::vector<std::size_t> indices_of(const nlohmann::json& arr, const PatchDataset& data) {
  std::vector<std::size_t> out;
  for (const auto& k : arr) {
    const auto i = k.at(0).get<std::size_t>();
    const bool ok = i < data.size() && data.samples()[i].station == k.at(1).get<std::string>() &&
                    data.samples()[i].center.row == k.at(2).get<std::size_t>() &&
                    data.samples()[i].center.col == k.at(3).get<std::size_t>() &&
                    data.samples()[i].t == k.at(4).get<std::size_t>();
    if (!ok) {
      throw std::invalid_argument("split key #" + std::to_string(i) + " (" + k.at(1).get<std::string>() +
                                  ", t=" + std::to_string(k.at(4).get<std::size_t>()) + ") does not match the dataset");
    }
    out.push_back(i);
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const DatasetSplit& split, const PatchDataset& data) {
  return {
      {"format", kSplitFormat},
      {"mode", split.mode == SplitMode::random ? "random" : "contiguous"},
      {"seed", split.seed},
      {"train_fraction", split.train_fraction},
      {"validation_fraction", split.validation_fraction},
      {"train", keys_of(split.train, data)},
      {"validation", keys_of(split.validation, data)},
      {"test", keys_of(split.test, data)},
  };
}

DatasetSplit split_from_json(const nlohmann::json& j, const PatchDataset& data) {
  DatasetSplit s;
  s.mode = j.at("mode").get<std::string>() == "random" ? SplitMode::random : SplitMode::contiguous;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train_fraction = j.at("train_fraction").get<double>();
  s.validation_fraction = j.at("validation_fraction").get<double>();
  s.train = indices_of(j.at("train"), data);
  s.validation = indices_of(j.at("validation"), data);
  s.test = indices_of(j.at("test"), data);
  return s;
}

}  // namespace deepair::training
