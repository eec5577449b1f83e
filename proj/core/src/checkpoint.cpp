#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sweepnet/policy.hpp"

// Checkpoint layout (all integers little-endian):
//   magic   "SWPNCKPT"
//   u32     format version (1)
//   u32     config JSON length, followed by the JSON bytes
//   u32     block count
//   blocks: u32 name length, name bytes, u64 rows, u64 cols, rows*cols f64
// Trainable blocks come first, then BN running-statistic buffers.

namespace sweepnet {

namespace {

constexpr char kMagic[8] = {'S', 'W', 'P', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}
void write_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw ParseError("checkpoint: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}
uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw ParseError("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

nlohmann::json config_json(const ModelConfig& c) {
  return {{"d", c.d},
          {"layers", c.layers},
          {"heads", c.heads},
          {"d_corner", c.d_corner},
          {"d_pattern", c.d_pattern},
          {"logit_clip", c.logit_clip},
          {"agents_encoder", c.agents_encoder},
          {"sweep_width", c.cost.sweep_width},
          {"pattern_count", c.cost.pattern_count}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d = j.at("d").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.d_corner = j.at("d_corner").get<int>();
  c.d_pattern = j.at("d_pattern").get<int>();
  c.logit_clip = j.at("logit_clip").get<double>();
  c.agents_encoder = j.at("agents_encoder").get<bool>();
  c.cost.sweep_width = j.at("sweep_width").get<double>();
  c.cost.pattern_count = j.at("pattern_count").get<int>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const PolicyParameters& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("checkpoint: cannot open " + path.string() + " for writing");
  os.write(kMagic, 8);
  write_u32(os, kVersion);
  const std::string cfg = config_json(params.config).dump();
  write_u32(os, static_cast<uint32_t>(cfg.size()));
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  auto& mutable_params = const_cast<PolicyParameters&>(params);
  auto blocks = trainable_blocks(mutable_params);
  auto buffers = buffer_blocks(mutable_params);
  blocks.insert(blocks.end(), buffers.begin(), buffers.end());
  write_u32(os, static_cast<uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    write_u32(os, static_cast<uint32_t>(b.name.size()));
    os.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    write_u64(os, static_cast<uint64_t>(b.rows));
    write_u64(os, static_cast<uint64_t>(b.cols));
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(b.data),
             static_cast<std::streamsize>(b.size() * 8));
  }
  if (!os) throw Error("checkpoint: write failed for " + path.string());
}

PolicyParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError("checkpoint: bad magic header in " + path.string());
  const uint32_t version = read_u32(is);
  if (version != kVersion)
    throw ParseError("checkpoint: unsupported format version " + std::to_string(version));
  const uint32_t cfg_len = read_u32(is);
  std::string cfg_text(cfg_len, '\0');
  is.read(cfg_text.data(), cfg_len);
  if (!is) throw ParseError("checkpoint: truncated config");
  ModelConfig cfg;
  try {
    cfg = config_from_json(nlohmann::json::parse(cfg_text));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: bad config JSON: ") + e.what());
  }

  PolicyParameters params = init_parameters(cfg, 0);
  auto blocks = trainable_blocks(params);
  auto buffers = buffer_blocks(params);
  blocks.insert(blocks.end(), buffers.begin(), buffers.end());

  const uint32_t count = read_u32(is);
  if (count != blocks.size())
    throw ParseError("checkpoint: block count mismatch (file " + std::to_string(count) +
                     ", model " + std::to_string(blocks.size()) + ")");
  for (auto& b : blocks) {
    const uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint64_t rows = read_u64(is);
    const uint64_t cols = read_u64(is);
    if (!is) throw ParseError("checkpoint: truncated block header");
    if (name != b.name || rows != static_cast<uint64_t>(b.rows) ||
        cols != static_cast<uint64_t>(b.cols))
      throw ParseError("checkpoint: block mismatch at '" + name + "' (expected '" + b.name +
                       "' " + std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
    is.read(reinterpret_cast<char*>(b.data), static_cast<std::streamsize>(b.size() * 8));
    if (!is) throw ParseError("checkpoint: truncated block payload for '" + name + "'");
  }
  return params;
}

}  // namespace sweepnet
