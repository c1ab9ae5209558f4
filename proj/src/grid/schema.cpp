#include "deepair/grid/schema.hpp"

#include <set>
#include <stdexcept>

namespace deepair::grid {

std::string_view group_name(ChannelGroup g) {
  switch (g) {
    case ChannelGroup::pollutant: return "pollutant";
    case ChannelGroup::meteorology: return "meteorology";
    case ChannelGroup::traffic: return "traffic";
    case ChannelGroup::morphology: return "morphology";
    case ChannelGroup::time: return "time";
  }
  return "?";
}

ChannelGroup parse_group(std::string_view name) {
  for (auto g : {ChannelGroup::pollutant, ChannelGroup::meteorology, ChannelGroup::traffic, ChannelGroup::morphology,
                 ChannelGroup::time}) {
    if (group_name(g) == name) return g;
  }
  throw std::invalid_argument("unknown channel group '" + std::string(name) + "'");
}

ChannelSchema::ChannelSchema(std::vector<ChannelDescriptor> channels) : channels_(std::move(channels)) {
  std::set<std::string> seen;
  bool past_pollutants = false;
  std::size_t pollutants = 0;
  std::size_t first_time = channels_.size();
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    const auto& c = channels_[i];
    if (c.name.empty()) throw std::invalid_argument("ChannelSchema: empty channel name");
    if (!seen.insert(c.name).second) throw std::invalid_argument("ChannelSchema: duplicate channel '" + c.name + "'");
    if (c.group == ChannelGroup::pollutant) {
      if (past_pollutants) {
        throw std::invalid_argument("ChannelSchema: pollutant channel '" + c.name + "' after non-pollutant channels");
      }
      ++pollutants;
    } else {
      past_pollutants = true;
    }
    if (c.group == ChannelGroup::time && first_time == channels_.size()) first_time = i;
    if (c.group != ChannelGroup::time && first_time != channels_.size()) {
      throw std::invalid_argument("ChannelSchema: channel '" + c.name + "' follows the time channels");
    }
  }
  if (pollutants == 0) throw std::invalid_argument("ChannelSchema: at least one pollutant channel is required");
  const std::size_t time_count = channels_.size() - first_time;
  if (time_count != 0 && time_count != 2) {
    throw std::invalid_argument("ChannelSchema: expected exactly two time channels, found " +
                                std::to_string(time_count));
  }
}

std::optional<std::size_t> ChannelSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ChannelSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw std::invalid_argument("unknown channel '" + std::string(name) + "'");
}

std::size_t ChannelSchema::pollutant_count() const {
  std::size_t n = 0;
  while (n < channels_.size() && channels_[n].group == ChannelGroup::pollutant) ++n;
  return n;
}

bool ChannelSchema::has_time_channels() const {
  return !channels_.empty() && channels_.back().group == ChannelGroup::time;
}

std::vector<std::size_t> ChannelSchema::indices_in(ChannelGroup g) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].group == g) out.push_back(i);
  }
  return out;
}

std::vector<std::string> ChannelSchema::names() const {
  std::vector<std::string> out;
  for (const auto& c : channels_) out.push_back(c.name);
  return out;
}

ChannelSchema ChannelSchema::with_time_channels() const {
  if (has_time_channels()) throw std::invalid_argument("ChannelSchema: time channels already present");
  auto channels = channels_;
  channels.push_back({"season", ChannelGroup::time, "code", false, false});
  channels.push_back({"workday", ChannelGroup::time, "binary", false, true});
  return ChannelSchema(std::move(channels));
}

std::uint64_t ChannelSchema::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& c : channels_) {
    mix(c.name);
    mix(group_name(c.group));
    mix(c.units);
    mix(c.is_static ? "static" : "dynamic");
    mix(c.binary ? "binary" : "real");
  }
  return h;
}

void GridSpec::validate() const {
  if (rows == 0 || cols == 0) throw std::invalid_argument("GridSpec: rows and cols must be positive");
  if (!(cell_size_km > 0.0)) throw std::invalid_argument("GridSpec: cell_size_km must be positive");
}

bool StationEntry::reports(std::string_view channel) const {
  for (const auto& c : channels) {
    if (c == channel) return true;
  }
  return false;
}

StationRegistry::StationRegistry(std::vector<StationEntry> entries, const GridSpec& spec) : entries_(std::move(entries)) {
  std::set<std::string> ids;
  for (const auto& e : entries_) {
    if (e.id.empty()) throw std::invalid_argument("StationRegistry: empty station id");
    if (!ids.insert(e.id).second) throw std::invalid_argument("StationRegistry: duplicate station id '" + e.id + "'");
    if (!spec.contains(static_cast<long>(e.row), static_cast<long>(e.col))) {
      throw std::invalid_argument("StationRegistry: station '" + e.id + "' at (" + std::to_string(e.row) + "," +
                                  std::to_string(e.col) + ") lies outside the " + std::to_string(spec.rows) + "x" +
                                  std::to_string(spec.cols) + " grid");
    }
  }
}

const StationEntry* StationRegistry::find(std::string_view id) const {
  for (const auto& e : entries_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const StationEntry& StationRegistry::at(std::string_view id) const {
  if (const auto* e = find(id)) return *e;
  throw std::invalid_argument("unknown station '" + std::string(id) + "'");
}

std::vector<const StationEntry*> StationRegistry::air_stations(const ChannelSchema& schema) const {
  std::vector<const StationEntry*> out;
  for (const auto& e : entries_) {
    for (const auto& c : e.channels) {
      auto idx = schema.find(c);
      if (idx && schema[*idx].group == ChannelGroup::pollutant) {
        out.push_back(&e);
        break;
      }
    }
  }
  return out;
}

std::vector<const StationEntry*> StationRegistry::reporting(std::string_view channel) const {
  std::vector<const StationEntry*> out;
  for (const auto& e : entries_) {
    if (e.reports(channel)) out.push_back(&e);
  }
  return out;
}

void StationRegistry::validate_channels(const ChannelSchema& schema) const {
  for (const auto& e : entries_) {
    for (const auto& c : e.channels) {
      if (!schema.find(c)) {
        throw std::invalid_argument("StationRegistry: station '" + e.id + "' lists unknown channel '" + c + "'");
      }
    }
  }
}

nlohmann::json to_json(const ChannelSchema& schema) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : schema.channels()) {
    arr.push_back({{"name", c.name},
                   {"group", std::string(group_name(c.group))},
                   {"units", c.units},
                   {"static", c.is_static},
                   {"binary", c.binary}});
  }
  return arr;
}

ChannelSchema schema_from_json(const nlohmann::json& j) {
  std::vector<ChannelDescriptor> channels;
  for (const auto& item : j) {
    ChannelDescriptor d;
    d.name = item.at("name").get<std::string>();
    d.group = parse_group(item.at("group").get<std::string>());
    d.units = item.value("units", std::string{});
    d.is_static = item.value("static", false);
    d.binary = item.value("binary", false);
    channels.push_back(std::move(d));
  }
  return ChannelSchema(std::move(channels));
}

nlohmann::json to_json(const GridSpec& spec) {
  return {{"rows", spec.rows},
          {"cols", spec.cols},
          {"cell_size_km", spec.cell_size_km},
          {"origin_lat", spec.origin_lat},
          {"origin_lon", spec.origin_lon}};
}

GridSpec grid_spec_from_json(const nlohmann::json& j) {
  GridSpec s;
  s.rows = j.at("rows").get<std::size_t>();
  s.cols = j.at("cols").get<std::size_t>();
  s.cell_size_km = j.value("cell_size_km", 1.0);
  s.origin_lat = j.value("origin_lat", 0.0);
  s.origin_lon = j.value("origin_lon", 0.0);
  s.validate();
  return s;
}

}  // namespace deepair::grid
