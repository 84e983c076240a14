#include "jumps/net/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "jumps/core/pose_io.hpp"
#include "jumps/error.hpp"

namespace jumps {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'J', 'M', 'P', 'T'};
constexpr std::uint32_t kArchiveVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("truncated archive '" + path.string() + "'");
  return v;
}

std::uint8_t dtype_tag(const torch::Tensor& t) {
  if (t.scalar_type() == torch::kFloat64) return 1;
  if (t.is_floating_point()) return 0;
  return 2;
}

torch::Dtype tag_dtype(std::uint8_t tag, const fs::path& path) {
  switch (tag) {
    case 0: return torch::kFloat32;
    case 1: return torch::kFloat64;
    case 2: return torch::kInt32;
    default: throw DataError("unknown dtype tag in '" + path.string() + "'");
  }
}

std::string shape_of(const torch::Tensor& t) {
  std::string s = "[";
  for (int64_t i = 0; i < t.dim(); ++i) s += (i ? "," : "") + std::to_string(t.size(i));
  return s + "]";
}

}  // namespace

void write_archive(const fs::path& path, const NamedTensors& tensors) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kArchiveVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    const std::uint8_t tag = dtype_tag(tensor);
    const auto t = tensor.detach().to(tag_dtype(tag, path)).contiguous();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(out, tag);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
    for (int64_t i = 0; i < t.dim(); ++i) put<std::int64_t>(out, t.size(i));
    out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
  }
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

NamedTensors read_archive(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("'" + path.string() + "' is not a parameter archive");
  }
  if (get<std::uint32_t>(in, path) != kArchiveVersion) throw DataError("unsupported archive version");
  const auto count = get<std::uint32_t>(in, path);
  NamedTensors out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = get<std::uint32_t>(in, path);
    if (len > 4096) throw DataError("corrupt archive '" + path.string() + "'");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw DataError("truncated archive '" + path.string() + "'");
    const auto dtype = tag_dtype(get<std::uint8_t>(in, path), path);
    const auto rank = get<std::uint32_t>(in, path);
    if (rank > 8) throw DataError("corrupt archive '" + path.string() + "'");
    std::vector<int64_t> dims(rank);
    for (auto& d : dims) {
      d = get<std::int64_t>(in, path);
      if (d < 0 || d > (int64_t{1} << 32)) throw DataError("corrupt archive '" + path.string() + "'");
    }
    auto t = torch::empty(dims, torch::TensorOptions().dtype(dtype));
    if (!in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()))) {
      throw DataError("truncated archive '" + path.string() + "'");
    }
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

NamedTensors module_state(const torch::nn::Module& m) {
  NamedTensors out;
  for (const auto& item : m.named_parameters()) out.emplace_back(item.key(), item.value());
  for (const auto& item : m.named_buffers()) out.emplace_back(item.key(), item.value());
  return out;
}

void load_module_state(torch::nn::Module& m, const NamedTensors& state, const std::string& what) {
  const auto target = module_state(m);
  if (target.size() != state.size()) {
    throw DataError(what + ": expected " + std::to_string(target.size()) + " tensors, archive has " +
                    std::to_string(state.size()));
  }
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto& [name, dst] = target[i];
    const auto& [src_name, src] = state[i];
    if (name != src_name) throw DataError(what + ": expected tensor '" + name + "', found '" + src_name + "'");
    if (dst.sizes() != src.sizes()) {
      throw DataError(what + ": shape mismatch for '" + name + "': expected " + shape_of(dst) + ", found " +
                      shape_of(src));
    }
    dst.copy_(src);
  }
}

void save_checkpoint(const fs::path& dir, const Model& model, nlohmann::json manifest,
                     const NamedTensors* optimizer_state) {
  if (!model.loaded()) throw ConfigError("model is not loaded");
  const auto counts = count_parameters(model);
  manifest["format"] = "jumps-checkpoint";
  manifest["version"] = kCheckpointFormatVersion;
  manifest["network"] = to_json(model.config);
  manifest["topology"] = topology_reference(model.topology);
  manifest["parameter_counts"] = {{"encoder", counts.encoder},
                                  {"generator", counts.generator},
                                  {"discriminator", counts.discriminator}};

  const fs::path tmp = dir.string() + ".tmp";
  const fs::path old = dir.string() + ".old";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  write_archive(tmp / "encoder.params", module_state(*model.encoder));
  write_archive(tmp / "generator.params", module_state(*model.generator));
  write_archive(tmp / "discriminator.params", module_state(*model.discriminator));
  if (optimizer_state) write_archive(tmp / "optimizer.state", *optimizer_state);
  write_text_file(tmp / "manifest", manifest.dump(2) + "\n");
  fs::remove_all(old);
  if (fs::exists(dir)) fs::rename(dir, old);
  fs::rename(tmp, dir);
  fs::remove_all(old);
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("checkpoint directory '" + dir.string() + "' not found");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(dir / "manifest"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint manifest '" + (dir / "manifest").string() + "': " + e.what());
  }
  if (manifest.value("format", "") != "jumps-checkpoint") {
    throw DataError("'" + dir.string() + "' is not a jumps checkpoint");
  }
  if (manifest.value("version", 0) != kCheckpointFormatVersion) throw DataError("unsupported checkpoint version");
  NetworkConfig cfg;
  SkeletonTopology topo;
  try {
    cfg = network_config_from_json(manifest.at("network"));
    topo = resolve_topology(manifest.at("topology"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint manifest: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw DataError("checkpoint manifest: " + std::string(e.what()));
  }
  Checkpoint ck{make_model(cfg, topo, 0), std::move(manifest)};
  load_module_state(*ck.model.encoder, read_archive(dir / "encoder.params"), "encoder");
  load_module_state(*ck.model.generator, read_archive(dir / "generator.params"), "generator");
  load_module_state(*ck.model.discriminator, read_archive(dir / "discriminator.params"), "discriminator");
  ck.model.train(false);
  return ck;
}

NamedTensors load_optimizer_state(const fs::path& dir) { return read_archive(dir / "optimizer.state"); }

}  // namespace jumps
