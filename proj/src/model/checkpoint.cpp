#include "deepair/model/checkpoint.hpp"

#include <sstream>
#include <stdexcept>

#include "deepair/grid/io.hpp"

namespace deepair::model {
namespace {

using grid::read_le_double;
using grid::read_le_u64;
using grid::write_le_double;
using grid::write_le_u64;

void write_entry(std::ostream& os, const std::string& name, const Tensor& t) {
  write_le_u64(os, name.size());
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_le_u64(os, t.rank());
  for (std::size_t d : t.shape()) write_le_u64(os, d);
  for (double v : t.data()) write_le_double(os, v);
}

void read_entry(std::istream& is, const std::string& expected_name, Tensor& into) {
  const std::uint64_t len = read_le_u64(is);
  if (len > 4096) throw std::invalid_argument("checkpoint blob is corrupt (name length " + std::to_string(len) + ")");
  std::string name(len, '\0');
  if (!is.read(name.data(), static_cast<std::streamsize>(len))) throw std::invalid_argument("checkpoint blob truncated");
  if (name != expected_name) {
    throw std::invalid_argument("checkpoint blob has '" + name + "' where '" + expected_name + "' was expected");
  }
  Shape shape(read_le_u64(is));
  for (auto& d : shape) d = read_le_u64(is);
  if (shape != into.shape()) {
    throw std::invalid_argument("checkpoint entry '" + name + "' has shape " + shape_string(shape) + ", model wants " +
                                shape_string(into.shape()));
  }
  for (double& v : into.data()) v = read_le_double(is);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& base, const DeepAirModel& model, const CheckpointMeta& meta) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.parameters().items()) params.push_back({{"name", p.name}, {"shape", p.var->shape()}});
  nlohmann::json buffers = nlohmann::json::array();
  for (const auto& name : model.batch_norm_names()) buffers.push_back(name);
  const nlohmann::json manifest = {
      {"format", kCheckpointFormat},
      {"model", to_json(model.config())},
      {"use_1x1", model.config().airres.use_1x1},
      {"target", meta.target},
      {"variant", grid::variant_name(meta.variant)},
      {"schema_hash", meta.schema_hash},
      {"channels", meta.channel_names},
      {"normalization", grid::to_json(meta.normalization)},
      {"seed", meta.seed},
      {"train_config", meta.train_config},
      {"parameters", params},
      {"batch_norm", buffers},
  };
  grid::write_text_file(base.string() + ".json", manifest.dump(2) + "\n");

  std::ostringstream blob;
  for (const auto& p : model.parameters().items()) write_entry(blob, p.name, p.var->value());
  const auto names = model.batch_norm_names();
  const auto& bn = model.batch_norm_states();
  for (std::size_t i = 0; i < bn.size(); ++i) {
    write_entry(blob, names[i] + ".running_mean", bn[i].running_mean);
    write_entry(blob, names[i] + ".running_var", bn[i].running_var);
  }
  grid::write_text_file(base.string() + ".params", blob.str());
}

LoadedModel load_checkpoint(const std::filesystem::path& base, std::optional<std::uint64_t> expected_schema_hash) {
  const auto manifest = nlohmann::json::parse(grid::read_text_file(base.string() + ".json"));
  if (manifest.value("format", "") != kCheckpointFormat) {
    throw std::invalid_argument("'" + base.string() + ".json' is not a " + std::string(kCheckpointFormat) +
                                " manifest");
  }
  CheckpointMeta meta;
  meta.target = manifest.at("target").get<std::string>();
  meta.variant = grid::parse_variant(manifest.at("variant").get<std::string>());
  meta.schema_hash = manifest.at("schema_hash").get<std::uint64_t>();
  meta.channel_names = manifest.at("channels").get<std::vector<std::string>>();
  meta.normalization = grid::normalization_from_json(manifest.at("normalization"));
  meta.seed = manifest.at("seed").get<std::uint64_t>();
  meta.train_config = manifest.at("train_config");
  if (expected_schema_hash && *expected_schema_hash != meta.schema_hash) {
    throw std::invalid_argument("checkpoint '" + base.string() + "' was trained on a different channel schema");
  }

  DeepAirModel model(model_config_from_json(manifest.at("model")), meta.seed);
  const std::string blob = grid::read_text_file(base.string() + ".params");
  std::istringstream is(blob);
  for (const auto& p : model.parameters().items()) read_entry(is, p.name, p.var->mutable_value());
  const auto names = model.batch_norm_names();
  auto& bn = model.batch_norm_states();
  for (std::size_t i = 0; i < bn.size(); ++i) {
    read_entry(is, names[i] + ".running_mean", bn[i].running_mean);
    read_entry(is, names[i] + ".running_var", bn[i].running_var);
    bn[i].initialized = true;
  }
  if (is.peek() != std::char_traits<char>::eof()) throw std::invalid_argument("checkpoint blob has trailing data");
  return LoadedModel{std::move(model), std::move(meta)};
}

}  // namespace deepair::model
