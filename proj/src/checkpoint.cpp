#include <fstream>

#include <json.hpp>

#include "affekt/error.hpp"
#include "affekt/model.hpp"
#include "binary_io.hpp"

namespace affekt {

namespace {

nlohmann::json config_json(const CnnConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : c.blocks) {
    blocks.push_back({{"out_width", b.out_width}, {"stride", b.stride}, {"residual", b.residual}});
  }
  return {{"input_channels", c.input_channels},
          {"input_bins", c.input_bins},
          {"n_classes", c.n_classes},
          {"seed", c.seed},
          {"blocks", blocks}};
}

CnnConfig config_from(const nlohmann::json& j) {
  CnnConfig c;
  c.input_channels = j.at("input_channels").get<int>();
  c.input_bins = j.at("input_bins").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& b : j.at("blocks")) {
    c.blocks.push_back({b.at("out_width").get<int>(), b.at("stride").get<int>(), b.at("residual").get<bool>()});
  }
  return c;
}

[[noreturn]] void bad(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorKind::BadCheckpoint, path.string() + ": " + what);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CnnConfig& config, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot open " + path.string() + " for writing");
  out.write("EEGM", 4);
  io::put_u32(out, kCheckpointVersion);
  const std::string cfg = config_json(config).dump();
  io::put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  io::put_u32(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& [name, tensor] : params.tensors) {
    io::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::put_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
    for (auto d : tensor.shape) io::put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : tensor.values) io::put_f32(out, static_cast<float>(v));
  }
  if (!out) throw Error(ErrorKind::MissingFile, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "checkpoint not found: " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "EEGM") bad(path, "bad checkpoint magic");
  std::uint32_t version = 0, cfg_len = 0, count = 0;
  if (!io::get_u32(in, version) || version != kCheckpointVersion) bad(path, "unsupported checkpoint version");
  if (!io::get_u32(in, cfg_len)) bad(path, "truncated header");
  std::string cfg(cfg_len, '\0');
  if (!in.read(cfg.data(), cfg_len)) bad(path, "truncated config");

  Checkpoint ck;
  try {
    ck.config = config_from(nlohmann::json::parse(cfg));
  } catch (const nlohmann::json::exception& e) {
    bad(path, std::string("bad embedded config: ") + e.what());
  }
  ck.config.validate();

  if (!io::get_u32(in, count)) bad(path, "truncated tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    std::uint32_t name_len = 0, rank = 0;
    if (!io::get_u32(in, name_len)) bad(path, "truncated tensor record");
    NamedTensor nt;
    nt.name.resize(name_len);
    if (!in.read(nt.name.data(), name_len) || !io::get_u32(in, rank)) bad(path, "truncated tensor record");
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      std::uint32_t d = 0;
      if (!io::get_u32(in, d)) bad(path, "truncated tensor shape");
      nt.tensor.shape.push_back(d);
      n *= d;
    }
    nt.tensor.values.resize(n);
    for (auto& v : nt.tensor.values) {
      float f = 0.0f;
      if (!io::get_f32(in, f)) bad(path, "truncated tensor values");
      v = f;
    }
    ck.params.tensors.push_back(std::move(nt));
  }

  // The stored tensors must match what the embedded config would build.
  const ModelParams expected = init_params(ck.config);
  if (expected.tensors.size() != ck.params.tensors.size()) bad(path, "tensor count does not match config");
  for (std::size_t i = 0; i < expected.tensors.size(); ++i) {
    if (expected.tensors[i].name != ck.params.tensors[i].name ||
        expected.tensors[i].tensor.shape != ck.params.tensors[i].tensor.shape) {
      bad(path, "tensor '" + ck.params.tensors[i].name + "' does not match config");
    }
  }
  return ck;
}

}  // namespace affekt
