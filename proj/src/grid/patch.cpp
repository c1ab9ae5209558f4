#include "deepair/grid/patch.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace deepair::grid {

bool extract_patch_into(const GridCube& cube, CellIndex center, std::size_t size, std::size_t end_t,
                        std::size_t window, double* out) {
  if (size % 2 == 0) throw std::invalid_argument("extract_patch: patch size must be odd, got " + std::to_string(size));
  if (window == 0) throw std::invalid_argument("extract_patch: window must be positive");
  if (end_t + 1 < window) {
    throw std::invalid_argument("extract_patch: t=" + std::to_string(end_t) + " has fewer than " +
                                std::to_string(window) + " hours of history");
  }
  if (end_t >= cube.hours) throw std::out_of_range("extract_patch: t beyond cube");
  if (!cube.spec.contains(static_cast<long>(center.row), static_cast<long>(center.col))) {
    throw std::out_of_range("extract_patch: centre outside grid");
  }
  const long half = static_cast<long>(size / 2);
  const long rows = static_cast<long>(cube.spec.rows), cols = static_cast<long>(cube.spec.cols);
  bool padded = false;
  std::vector<std::size_t> src_rows(size), src_cols(size);
  for (std::size_t i = 0; i < size; ++i) {
    const long r = static_cast<long>(center.row) - half + static_cast<long>(i);
    const long q = static_cast<long>(center.col) - half + static_cast<long>(i);
    if (r < 0 || r >= rows || q < 0 || q >= cols) padded = true;
    src_rows[i] = static_cast<std::size_t>(std::clamp(r, 0L, rows - 1));
    src_cols[i] = static_cast<std::size_t>(std::clamp(q, 0L, cols - 1));
  }
  const std::size_t C = cube.channels();
  const std::size_t first_t = end_t + 1 - window;
  for (std::size_t w = 0; w < window; ++w) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t i = 0; i < size; ++i) {
        const double* row = &cube.values[cube.index(first_t + w, c, src_rows[i], 0)];
        double* dst = out + ((w * C + c) * size + i) * size;
        for (std::size_t j = 0; j < size; ++j) dst[j] = row[src_cols[j]];
      }
    }
  }
  return padded;
}

Patch extract_patch(const GridCube& cube, CellIndex center, std::size_t size, std::size_t end_t, std::size_t window) {
  Patch p;
  p.center = center;
  p.end_t = end_t;
  p.window = window;
  p.channels = cube.channels();
  p.size = size;
  p.values.resize(window * p.channels * size * size);
  p.boundary_padded = extract_patch_into(cube, center, size, end_t, window, p.values.data());
  return p;
}

}  // namespace deepair::grid
