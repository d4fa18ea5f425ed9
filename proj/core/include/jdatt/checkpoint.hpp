#pragma once

#include <map>
#include <string>
#include <vector>

#include "jdatt/tensor.hpp"

namespace jdatt {

/// Single-file checkpoint: magic + version, a JSON header (arbitrary
/// metadata plus tensor names/shapes), then raw little-endian doubles in
/// header order.
struct Checkpoint {
  std::string meta_json;  // model spec or other metadata, JSON text
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a digest of a file's bytes; used for frozen-teacher checks.
uint64_t file_digest(const std::string& path);

}  // namespace jdatt
