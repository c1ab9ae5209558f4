#include "deepair/grid/normalize.hpp"

#include <cmath>
#include <stdexcept>

namespace deepair::grid {
namespace {

bool is_passthrough(const ChannelDescriptor& d) { return d.group == ChannelGroup::time || d.binary; }

}  // namespace

const ChannelStats& NormalizationStats::named(const std::string& name) const {
  for (const auto& c : channels) {
    if (c.name == name) return c;
  }
  throw std::invalid_argument("normalization stats have no channel '" + name + "'");
}

double NormalizationStats::to_physical(std::size_t c, double z) const {
  const auto& s = channels.at(c);
  return s.passthrough ? z : z * s.std + s.mean;
}

double NormalizationStats::to_normalized(std::size_t c, double v) const {
  const auto& s = channels.at(c);
  return s.passthrough ? v : (v - s.mean) / s.std;
}

NormalizationStats fit_normalization(const GridCube& cube, const std::vector<std::size_t>& hours) {
  if (hours.empty()) throw std::invalid_argument("fit_normalization: no hours to fit on");
  NormalizationStats stats;
  const std::size_t cells = cube.plane();
  for (std::size_t c = 0; c < cube.channels(); ++c) {
    ChannelStats s;
    s.name = cube.schema[c].name;
    s.passthrough = is_passthrough(cube.schema[c]);
    if (!s.passthrough) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t t : hours) {
        for (std::size_t k = 0; k < cells; ++k) {
          const double v = cube.values[(t * cube.channels() + c) * cells + k];
          if (is_missing(v)) continue;
          sum += v;
          ++n;
        }
      }
      if (n == 0) throw std::invalid_argument("fit_normalization: channel '" + s.name + "' has no values");
      s.mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t t : hours) {
        for (std::size_t k = 0; k < cells; ++k) {
          const double v = cube.values[(t * cube.channels() + c) * cells + k];
          if (!is_missing(v)) ss += (v - s.mean) * (v - s.mean);
        }
      }
      s.std = std::sqrt(ss / static_cast<double>(n));
      if (s.std < kMinStd) s.std = 1.0;
    }
    stats.channels.push_back(s);
  }
  return stats;
}

GridCube normalize(const GridCube& cube, const NormalizationStats& stats) {
  if (cube.normalized) throw std::invalid_argument("normalize: cube is already normalized");
  if (stats.channels.size() != cube.channels()) {
    throw std::invalid_argument("normalize: stats cover " + std::to_string(stats.channels.size()) +
                                " channels, cube has " + std::to_string(cube.channels()));
  }
  for (std::size_t c = 0; c < cube.channels(); ++c) {
    if (stats.channels[c].name != cube.schema[c].name) {
      throw std::invalid_argument("normalize: stats channel '" + stats.channels[c].name + "' does not match cube '" +
                                  cube.schema[c].name + "'");
    }
  }
  GridCube out = cube;
  const std::size_t cells = cube.plane();
  for (std::size_t t = 0; t < cube.hours; ++t) {
    for (std::size_t c = 0; c < cube.channels(); ++c) {
      const auto& s = stats.channels[c];
      if (s.passthrough) continue;
      double* p = &out.values[(t * cube.channels() + c) * cells];
      for (std::size_t k = 0; k < cells; ++k) p[k] = (p[k] - s.mean) / s.std;
    }
  }
  out.normalized = true;
  return out;
}

nlohmann::json to_json(const NormalizationStats& stats) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : stats.channels) {
    arr.push_back({{"name", c.name}, {"mean", c.mean}, {"std", c.std}, {"passthrough", c.passthrough}});
  }
  return arr;
}

NormalizationStats normalization_from_json(const nlohmann::json& j) {
  NormalizationStats s;
  for (const auto& item : j) {
    s.channels.push_back({item.at("name").get<std::string>(), item.at("mean").get<double>(),
                          item.at("std").get<double>(), item.at("passthrough").get<bool>()});
  }
  return s;
}

}  // namespace deepair::grid
