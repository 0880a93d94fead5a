#include "marlsched/neuro/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "marlsched/errors.hpp"

namespace marlsched::neuro {

namespace {
constexpr char kMagic[] = "MSNN1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;
}  // namespace

const Eigen::MatrixXd& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw ContractViolation("checkpoint has no tensor named " + name);
}

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<NamedTensor>& tensors) {
  nlohmann::json header;
  header["format"] = 1;
  header["meta"] = meta;
  auto& dir = header["tensors"] = nlohmann::json::array();
  for (const auto& t : tensors)
    dir.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}});
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open checkpoint file for writing: " + path);
  out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
  const std::uint64_t hlen = header_str.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& t : tensors)
    out.write(reinterpret_cast<const char*>(t.value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(t.value.size())));
  if (!out) throw ConfigError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint file: " + path);

  char magic[kMagicLen];
  in.read(magic, static_cast<std::streamsize>(kMagicLen));
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0)
    throw ConfigError("not a model checkpoint: " + path);

  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen > (1u << 24)) throw ConfigError("corrupt checkpoint header: " + path);
  std::string header_str(hlen, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw ConfigError("corrupt checkpoint header: " + path);

  nlohmann::json header = nlohmann::json::parse(header_str, nullptr, false);
  if (header.is_discarded() || header.value("format", 0) != 1)
    throw ConfigError("unsupported checkpoint format: " + path);

  Checkpoint ckpt;
  ckpt.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    NamedTensor t;
    t.name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw ConfigError("corrupt tensor shape in checkpoint: " + path);
    t.value.resize(rows, cols);
    in.read(reinterpret_cast<char*>(t.value.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(t.value.size())));
    if (!in) throw ConfigError("truncated checkpoint payload: " + path);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

}  // namespace marlsched::neuro
