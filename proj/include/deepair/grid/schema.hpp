#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace deepair::grid {

enum class ChannelGroup { pollutant, meteorology, traffic, morphology, time };

std::string_view group_name(ChannelGroup g);
ChannelGroup parse_group(std::string_view name);

struct ChannelDescriptor {
  std::string name;
  ChannelGroup group = ChannelGroup::pollutant;
  std::string units;
  bool is_static = false;  // replicated over all hours (morphology)
  bool binary = false;     // 0/1 indicator; exempt from z-scoring

  bool operator==(const ChannelDescriptor&) const = default;
};

// Ordered channel list. Pollutant channels form a prefix (the air-pollution
// part of the patch concatenation) and time channels, when present, are
// exactly the last two.
class ChannelSchema {
 public:
  ChannelSchema() = default;
  explicit ChannelSchema(std::vector<ChannelDescriptor> channels);

  const std::vector<ChannelDescriptor>& channels() const { return channels_; }
  const ChannelDescriptor& operator[](std::size_t i) const { return channels_.at(i); }
  std::size_t size() const { return channels_.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws on unknown
  std::size_t pollutant_count() const;
  bool has_time_channels() const;
  std::vector<std::size_t> indices_in(ChannelGroup g) const;
  std::vector<std::string> names() const;

  // Schema plus "season" and "workday" appended.
  ChannelSchema with_time_channels() const;

  // FNV-1a over every descriptor field; stable across platforms.
  std::uint64_t hash() const;

  bool operator==(const ChannelSchema&) const = default;

 private:
  std::vector<ChannelDescriptor> channels_;
};

struct GridSpec {
  std::size_t rows = 1;
  std::size_t cols = 1;
  double cell_size_km = 1.0;
  double origin_lat = 0.0;  // northwest corner
  double origin_lon = 0.0;

  std::size_t cells() const { return rows * cols; }
  bool contains(long row, long col) const {
    return row >= 0 && col >= 0 && row < static_cast<long>(rows) && col < static_cast<long>(cols);
  }
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

struct StationEntry {
  std::string id;
  std::size_t row = 0;
  std::size_t col = 0;
  std::vector<std::string> channels;  // channels this site reports

  bool reports(std::string_view channel) const;
};

// Every observation source (air-quality station, weather station, road
// segment, morphology cell) is a registry entry pinned to one grid cell.
class StationRegistry {
 public:
  StationRegistry() = default;
  StationRegistry(std::vector<StationEntry> entries, const GridSpec& spec);

  const std::vector<StationEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const StationEntry* find(std::string_view id) const;
  const StationEntry& at(std::string_view id) const;

  // Entries reporting at least one pollutant channel of the schema, in
  // registry order.
  std::vector<const StationEntry*> air_stations(const ChannelSchema& schema) const;
  std::vector<const StationEntry*> reporting(std::string_view channel) const;

  // Every listed channel must exist in the schema.
  void validate_channels(const ChannelSchema& schema) const;

 private:
  std::vector<StationEntry> entries_;
};

nlohmann::json to_json(const ChannelSchema& schema);
ChannelSchema schema_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const nlohmann::json& j);

}  // namespace deepair::grid
