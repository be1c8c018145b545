#pragma once

#include <string>

#include "auvox/network.hpp"

namespace auvox {

// Checkpoint file layout (all integers little-endian):
//   "AUNN"  u8 version=1
//   u32 metadata_len, metadata (UTF-8 JSON: descriptor, seed, provenance)
//   u32 tensor_count
//   per tensor: u32 name_len, name, u8 rank, u32 extents[rank], f32 data
//
// provenance_json, when given, must be a JSON object; it is embedded verbatim
// under the "provenance" key, so save -> load -> save round-trips to
// byte-identical files.
std::string save_checkpoint(Network<float>& net, const std::string& provenance_json = "");

struct LoadedCheckpoint {
  Network<float> network;
  std::string provenance_json;  // compact re-serialization of the embedded object
};

// Parses and validates the whole file before building anything, so a
// truncated or corrupt checkpoint never yields a partially loaded network.
LoadedCheckpoint load_checkpoint(const std::string& bytes);

// As load_checkpoint, but rejects checkpoints of the wrong variant.
LoadedCheckpoint load_checkpoint_expect(const std::string& bytes, Variant expected);

}  // namespace auvox
