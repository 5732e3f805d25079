#include "fedin/training/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fedin/numerics/errors.hpp"

namespace fedin {

namespace {

constexpr char kMagic[] = "FEDIN1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw DataError(path + ": truncated checkpoint");
  return value;
}

std::string get_string(std::ifstream& in, std::uint64_t len, const std::string& path) {
  if (len > (1ULL << 32)) throw DataError(path + ": implausible string length in checkpoint");
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), static_cast<std::streamsize>(len))) throw DataError(path + ": truncated checkpoint");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& config_text, const ParameterStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, kMagicLen);
  put<std::uint64_t>(out, config_text.size());
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  put<std::uint64_t>(out, store.size());
  for (const auto& p : store) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->shape.size()));
    for (Index e : p->shape) put<std::uint64_t>(out, static_cast<std::uint64_t>(e));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
  }
  if (!out) throw IoError("write error on '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char magic[kMagicLen];
  if (!in.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    throw DataError(path + ": not a FEDIN1 checkpoint");
  }
  Checkpoint ckpt;
  ckpt.config_text = get_string(in, get<std::uint64_t>(in, path), path);
  const auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t r = 0; r < count; ++r) {
    CheckpointRecord rec;
    rec.name = get_string(in, get<std::uint32_t>(in, path), path);
    const auto rank = get<std::uint32_t>(in, path);
    if (rank > 8) throw DataError(path + ": implausible rank for '" + rec.name + "'");
    std::uint64_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto e = get<std::uint64_t>(in, path);
      rec.shape.push_back(static_cast<Index>(e));
      n *= e;
    }
    if (n > (1ULL << 32)) throw DataError(path + ": implausible size for '" + rec.name + "'");
    rec.values.resize(n);
    if (n > 0 && !in.read(reinterpret_cast<char*>(rec.values.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
      throw DataError(path + ": truncated payload for '" + rec.name + "'");
    }
    ckpt.records.push_back(std::move(rec));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError(path + ": trailing bytes after last record");
  return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, ParameterStore& store) {
  if (ckpt.records.size() != store.size()) {
    throw DataError("checkpoint has " + std::to_string(ckpt.records.size()) + " parameters, model has " +
                    std::to_string(store.size()));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store[i];
    const CheckpointRecord& rec = ckpt.records[i];
    if (rec.name != p.name || rec.shape != p.shape) {
      throw DataError("checkpoint record '" + rec.name + "' does not match parameter '" + p.name + "'");
    }
    std::memcpy(p.value.data(), rec.values.data(), sizeof(double) * rec.values.size());
  }
}

}  // namespace fedin
