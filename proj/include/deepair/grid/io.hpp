#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "deepair/grid/cube.hpp"
#include "deepair/grid/interpolation.hpp"
#include "deepair/grid/observations.hpp"

namespace deepair::grid {

inline constexpr std::string_view kObservationsFormat = "deepair-observations v1";
inline constexpr std::string_view kRegistryFormat = "deepair-registry v1";
inline constexpr std::string_view kTruthFormat = "deepair-truth v1";
inline constexpr std::string_view kCubeFormat = "deepair-cube v1";

// Observations: "station_id,YYYY-MM-DDTHH:MM,channel,value" per line; lines
// starting with '#' and blank lines are skipped.
void write_observations(std::ostream& os, const std::vector<Observation>& obs);
std::vector<Observation> read_observations(std::istream& is);

// Registry: "station_id,row,col,ch1;ch2;..." per line.
void write_registry(std::ostream& os, const StationRegistry& registry);
std::vector<StationEntry> read_registry_entries(std::istream& is);

// Ground truth: "station_id,hour,pollutant,value"; hours the station did not
// report are left out.
void write_truth(std::ostream& os, const GroundTruth& truth);
GroundTruth read_truth(std::istream& is);

// Writes <base>.json (manifest), <base>.bin (little-endian doubles) and
// <base>.mask (imputed flags, bit-packed LSB first).
void save_cube(const GridCube& cube, const std::filesystem::path& base);
GridCube load_cube(const std::filesystem::path& base);

// Helpers shared by the other artifact writers.
void write_le_double(std::ostream& os, double v);
double read_le_double(std::istream& is);
void write_le_u64(std::ostream& os, std::uint64_t v);
std::uint64_t read_le_u64(std::istream& is);
std::string format_double(double v);  // shortest text that round-trips
std::vector<std::string> split(std::string_view line, char sep);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace deepair::grid
