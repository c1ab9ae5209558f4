#pragma once

#include <vector>

#include "deepair/grid/cube.hpp"

namespace deepair::grid {

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const CellIndex&) const = default;
};

// W consecutive frames of an N x N window of all channels, centred on
// `center`. Frames are chronological, ending at `end_t`; channel order is the
// cube schema order (pollutants, proxies, time labels).
struct Patch {
  CellIndex center;
  std::size_t end_t = 0;
  std::size_t window = 0;
  std::size_t channels = 0;
  std::size_t size = 0;  // N
  std::vector<double> values;  // W x C x N x N
  bool boundary_padded = false;

  double at(std::size_t w, std::size_t c, std::size_t i, std::size_t j) const {
    return values[((w * channels + c) * size + i) * size + j];
  }
};

// Cells outside the grid take the value of the nearest edge cell.
Patch extract_patch(const GridCube& cube, CellIndex center, std::size_t size, std::size_t end_t, std::size_t window);

// Writes the patch straight into `out` (W*C*N*N values); returns
// boundary_padded. Used by batch assembly to avoid a copy.
bool extract_patch_into(const GridCube& cube, CellIndex center, std::size_t size, std::size_t end_t,
                        std::size_t window, double* out);

}  // namespace deepair::grid
