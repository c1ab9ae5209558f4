#include "deepair/grid/cube.hpp"

#include <algorithm>
#include <stdexcept>

namespace deepair::grid {

std::string_view variant_name(CubeVariant v) {
  switch (v) {
    case CubeVariant::observed: return "observed";
    case CubeVariant::estimation: return "estimation";
    case CubeVariant::forecast: return "forecast";
  }
  return "?";
}

CubeVariant parse_variant(std::string_view name) {
  for (auto v : {CubeVariant::observed, CubeVariant::estimation, CubeVariant::forecast}) {
    if (variant_name(v) == name) return v;
  }
  throw std::invalid_argument("unknown cube variant '" + std::string(name) + "'");
}

GridCube::GridCube(GridSpec spec_in, ChannelSchema schema_in, HourStamp start_in, std::size_t hours_in,
                   CubeVariant variant_in)
    : spec(spec_in), schema(std::move(schema_in)), start(start_in), hours(hours_in), variant(variant_in) {
  spec.validate();
  if (hours == 0) throw std::invalid_argument("GridCube: zero hours");
  const std::size_t n = hours * schema.size() * spec.cells();
  values.assign(n, kMissing);
  imputed.assign(n, 0);
}

std::size_t GridCube::missing_count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return is_missing(v); }));
}

}  // namespace deepair::grid
