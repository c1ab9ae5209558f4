#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "deepair/grid/schema.hpp"
#include "deepair/grid/time.hpp"

namespace deepair::grid {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

// observed: straight out of rasterize. estimation (Q-hat): each station's own
// pollutant readings replaced by a reconstruction from other stations.
// forecast (Q): station readings kept verbatim.
enum class CubeVariant { observed, estimation, forecast };

std::string_view variant_name(CubeVariant v);
CubeVariant parse_variant(std::string_view name);

// T x C x H x W stack of city rasters, t-major then channel, row, col.
struct GridCube {
  GridSpec spec;
  ChannelSchema schema;
  HourStamp start;
  std::size_t hours = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> imputed;  // 1 where the value was filled in
  CubeVariant variant = CubeVariant::observed;
  bool normalized = false;

  GridCube() = default;
  GridCube(GridSpec spec, ChannelSchema schema, HourStamp start, std::size_t hours, CubeVariant variant);

  std::size_t channels() const { return schema.size(); }
  std::size_t plane() const { return spec.rows * spec.cols; }
  std::size_t index(std::size_t t, std::size_t c, std::size_t row, std::size_t col) const {
    return ((t * channels() + c) * spec.rows + row) * spec.cols + col;
  }
  double& at(std::size_t t, std::size_t c, std::size_t row, std::size_t col) { return values[index(t, c, row, col)]; }
  double at(std::size_t t, std::size_t c, std::size_t row, std::size_t col) const {
    return values[index(t, c, row, col)];
  }
  bool is_imputed(std::size_t t, std::size_t c, std::size_t row, std::size_t col) const {
    return imputed[index(t, c, row, col)] != 0;
  }
  HourStamp hour_at(std::size_t t) const { return start + static_cast<std::int64_t>(t); }
  std::size_t missing_count() const;
};

}  // namespace deepair::grid
