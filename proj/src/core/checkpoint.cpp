#include "fgan/core/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace fgan {

namespace {

constexpr char kMagic[8] = {'F', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CheckpointMismatch("truncated checkpoint");
  return v;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ull << 32)) throw CheckpointMismatch("implausible string length in checkpoint");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw CheckpointMismatch("truncated checkpoint");
  return s;
}

}  // namespace

void collect_arrays(CheckpointArchive& archive, const std::string& prefix, const Module& module) {
  for (const auto& [name, p] : module.named_parameters()) archive.arrays[prefix + "/" + name] = p.value();
  for (const auto& [name, buf] : module.named_buffers()) archive.arrays[prefix + "/" + name] = *buf;
}

void restore_arrays(const CheckpointArchive& archive, const std::string& prefix, Module& module) {
  auto fetch = [&](const std::string& name, const Tensor& current) -> const Tensor& {
    const auto it = archive.arrays.find(prefix + "/" + name);
    if (it == archive.arrays.end()) throw CheckpointMismatch("checkpoint lacks array " + prefix + "/" + name);
    if (it->second.shape() != current.shape())
      throw CheckpointMismatch("array " + prefix + "/" + name + " has shape " + it->second.shape_string() +
                               ", model expects " + current.shape_string());
    return it->second;
  };
  for (auto& [name, p] : module.named_parameters()) {
    Var v = p;
    v.mutable_value() = fetch(name, p.value());
  }
  for (auto& [name, buf] : module.named_buffers()) *buf = fetch(name, *buf);
}

void write_checkpoint(const CheckpointArchive& archive, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, CheckpointArchive::kVersion);
    put_string(out, archive.kind);
    put_string(out, archive.config);
    put<std::uint64_t>(out, archive.arrays.size());
    for (const auto& [name, t] : archive.arrays) {
      put_string(out, name);
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
      for (int d : t.shape()) put<std::int32_t>(out, d);
      out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(Real)));
    }
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointArchive read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw CheckpointMismatch(path.string() + " is not a checkpoint");
  const auto version = get<std::uint32_t>(in);
  if (version != CheckpointArchive::kVersion)
    throw CheckpointMismatch("checkpoint version " + std::to_string(version) + " is not supported");
  CheckpointArchive archive;
  archive.kind = get_string(in);
  archive.config = get_string(in);
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = get_string(in);
    const auto rank = get<std::uint32_t>(in);
    if (rank > 8) throw CheckpointMismatch("implausible rank for " + name);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = get<std::int32_t>(in);
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(Real)));
    if (!in) throw CheckpointMismatch("truncated array " + name);
    archive.arrays.emplace(std::move(name), std::move(t));
  }
  return archive;
}

void expect_checkpoint(const CheckpointArchive& archive, const std::string& kind, const std::string& config) {
  if (archive.kind != kind) throw CheckpointMismatch("checkpoint holds a " + archive.kind + " model, expected " + kind);
  if (archive.config != config)
    throw CheckpointMismatch("checkpoint configuration differs from the requested one:\n  saved:     " + archive.config +
                             "\n  requested: " + config);
}

}  // namespace fgan
