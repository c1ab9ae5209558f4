#include "deepair/grid/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace deepair::grid {
namespace {

std::string format_minutes(std::int64_t minutes) {
  const HourStamp h = hour_from_minutes(minutes);
  const std::int64_t m = minutes - h.hours * 60;
  std::string s = format_hour(h);
  s[s.size() - 2] = static_cast<char>('0' + m / 10);
  s[s.size() - 1] = static_cast<char>('0' + m % 10);
  return s;
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("cannot parse " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::size_t parse_index(std::string_view text, std::string_view what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("cannot parse " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

// Calls fn(fields, line_number) for each data line.
template <typename Fn>
void for_each_record(std::istream& is, std::size_t expected_fields, std::string_view kind, Fn fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(t, ',');
    if (fields.size() != expected_fields) {
      throw std::invalid_argument(std::string(kind) + " line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(expected_fields) + " fields, got " + std::to_string(fields.size()));
    }
    for (auto& f : fields) f = trim(f);
    fn(fields, line_no);
  }
}

}  // namespace

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_le_u64(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(bytes, 8);
}

std::uint64_t read_le_u64(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("unexpected end of binary data");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void write_le_double(std::ostream& os, double v) { write_le_u64(os, std::bit_cast<std::uint64_t>(v)); }
double read_le_double(std::istream& is) { return std::bit_cast<double>(read_le_u64(is)); }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os << content;
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_observations(std::ostream& os, const std::vector<Observation>& obs) {
  os << "# " << kObservationsFormat << "\n";
  for (const auto& o : obs) {
    os << o.source_id << ',' << format_minutes(o.minutes) << ',' << o.channel << ',' << format_double(o.value) << '\n';
  }
}

std::vector<Observation> read_observations(std::istream& is) {
  std::vector<Observation> out;
  for_each_record(is, 4, "observations", [&](const std::vector<std::string>& f, std::size_t) {
    out.push_back({f[0], parse_iso_minutes(f[1]), f[2], parse_double(f[3], "value")});
  });
  return out;
}

void write_registry(std::ostream& os, const StationRegistry& registry) {
  os << "# " << kRegistryFormat << "\n";
  for (const auto& e : registry.entries()) {
    os << e.id << ',' << e.row << ',' << e.col << ',';
    for (std::size_t i = 0; i < e.channels.size(); ++i) os << (i ? ";" : "") << e.channels[i];
    os << '\n';
  }
}

std::vector<StationEntry> read_registry_entries(std::istream& is) {
  std::vector<StationEntry> out;
  for_each_record(is, 4, "registry", [&](const std::vector<std::string>& f, std::size_t) {
    StationEntry e{f[0], parse_index(f[1], "row"), parse_index(f[2], "col"), {}};
    for (auto& ch : split(f[3], ';')) {
      if (!trim(ch).empty()) e.channels.push_back(trim(ch));
    }
    out.push_back(std::move(e));
  });
  return out;
}

void write_truth(std::ostream& os, const GroundTruth& truth) {
  os << "# " << kTruthFormat << "\n";
  os << "# start=" << format_hour(truth.start) << " hours=" << truth.hours << " pollutants=";
  for (std::size_t p = 0; p < truth.pollutants.size(); ++p) os << (p ? ";" : "") << truth.pollutants[p];
  os << '\n';
  for (std::size_t s = 0; s < truth.station_ids.size(); ++s) {
    for (std::size_t p = 0; p < truth.pollutants.size(); ++p) {
      for (std::size_t t = 0; t < truth.hours; ++t) {
        const double v = truth.at(s, p, t);
        if (is_missing(v)) continue;
        os << truth.station_ids[s] << ',' << format_hour(truth.start + static_cast<std::int64_t>(t)) << ','
           << truth.pollutants[p] << ',' << format_double(v) << '\n';
      }
    }
  }
}

GroundTruth read_truth(std::istream& is) {
  std::string header;
  GroundTruth gt;
  bool have_range = false;
  std::stringstream body;
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("# start=", 0) == 0) {
      std::istringstream hs(line.substr(2));
      std::string start, hours, pollutants;
      hs >> start >> hours >> pollutants;
      gt.start = parse_hour(start.substr(6));
      gt.hours = parse_index(hours.substr(6), "hours");
      for (auto& p : split(pollutants.substr(11), ';')) gt.pollutants.push_back(p);
      have_range = true;
    } else {
      body << line << '\n';
    }
  }
  if (!have_range) throw std::invalid_argument("truth file lacks its '# start=' header");
  struct Row {
    std::string id;
    std::int64_t hour;
    std::size_t p;
    double v;
  };
  std::vector<Row> rows;
  std::map<std::string, std::size_t> seen;
  for_each_record(body, 4, "truth", [&](const std::vector<std::string>& f, std::size_t) {
    const HourStamp h = parse_hour(f[1]);
    if (h < gt.start || h.hours >= gt.start.hours + static_cast<std::int64_t>(gt.hours)) {
      throw std::invalid_argument("truth record at " + f[1] + " is outside the declared range");
    }
    if (!seen.contains(f[0])) {
      seen.emplace(f[0], gt.station_ids.size());
      gt.station_ids.push_back(f[0]);
    }
    rows.push_back({f[0], h.hours - gt.start.hours, gt.pollutant_index(f[2]), parse_double(f[3], "value")});
  });
  gt.values.assign(gt.station_ids.size() * gt.pollutants.size() * gt.hours, kMissing);
  for (const auto& r : rows) gt.at(seen.at(r.id), r.p, static_cast<std::size_t>(r.hour)) = r.v;
  return gt;
}

void save_cube(const GridCube& cube, const std::filesystem::path& base) {
  nlohmann::json manifest = {
      {"format", kCubeFormat},
      {"spec", to_json(cube.spec)},
      {"schema", to_json(cube.schema)},
      {"schema_hash", cube.schema.hash()},
      {"start_time", format_hour(cube.start)},
      {"hours", cube.hours},
      {"variant", variant_name(cube.variant)},
      {"normalized", cube.normalized},
  };
  write_text_file(base.string() + ".json", manifest.dump(2) + "\n");

  std::ostringstream bin;
  for (double v : cube.values) write_le_double(bin, v);
  write_text_file(base.string() + ".bin", bin.str());

  std::string mask((cube.imputed.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < cube.imputed.size(); ++i) {
    if (cube.imputed[i]) mask[i / 8] = static_cast<char>(mask[i / 8] | (1u << (i % 8)));
  }
  write_text_file(base.string() + ".mask", mask);
}

GridCube load_cube(const std::filesystem::path& base) {
  const auto manifest = nlohmann::json::parse(read_text_file(base.string() + ".json"));
  if (manifest.at("format").get<std::string>() != kCubeFormat) {
    throw std::invalid_argument("'" + base.string() + ".json' is not a " + std::string(kCubeFormat) + " manifest");
  }
  GridCube cube(grid_spec_from_json(manifest.at("spec")), schema_from_json(manifest.at("schema")),
                parse_hour(manifest.at("start_time").get<std::string>()), manifest.at("hours").get<std::size_t>(),
                parse_variant(manifest.at("variant").get<std::string>()));
  cube.normalized = manifest.value("normalized", false);
  if (cube.schema.hash() != manifest.at("schema_hash").get<std::uint64_t>()) {
    throw std::invalid_argument("cube manifest schema hash mismatch");
  }
  const std::string bin = read_text_file(base.string() + ".bin");
  if (bin.size() != cube.values.size() * 8) {
    throw std::invalid_argument("cube blob holds " + std::to_string(bin.size()) + " bytes, expected " +
                                std::to_string(cube.values.size() * 8));
  }
  std::istringstream bs(bin);
  for (double& v : cube.values) v = read_le_double(bs);
  const std::string mask = read_text_file(base.string() + ".mask");
  if (mask.size() != (cube.imputed.size() + 7) / 8) throw std::invalid_argument("cube mask has the wrong size");
  for (std::size_t i = 0; i < cube.imputed.size(); ++i) {
    cube.imputed[i] = (static_cast<unsigned char>(mask[i / 8]) >> (i % 8)) & 1u;
  }
  return cube;
}

}  // namespace deepair::grid
