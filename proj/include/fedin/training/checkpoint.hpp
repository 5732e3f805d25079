#pragma once

#include <string>
#include <vector>

#include "fedin/numerics/parameter_store.hpp"

namespace fedin {

/// Single-file container:
///   "FEDIN1\n", u64 config length, config text (canonical key-sorted JSON),
///   u64 record count, then per parameter in store order:
///   u32 name length, name bytes, u32 rank, u64 extents[rank],
///   little-endian float64 payload (row-major).
void save_checkpoint(const std::string& path, const std::string& config_text, const ParameterStore& store);

struct CheckpointRecord {
  std::string name;
  std::vector<Index> shape;
  std::vector<double> values;
};

struct Checkpoint {
  std::string config_text;
  std::vector<CheckpointRecord> records;
};

/// Throws IoError if unreadable, DataError if the container is malformed.
Checkpoint load_checkpoint(const std::string& path);

/// Copies record values into `store`. Names, order and shapes must match
/// exactly (DataError otherwise).
void apply_checkpoint(const Checkpoint& ckpt, ParameterStore& store);

}  // namespace fedin
