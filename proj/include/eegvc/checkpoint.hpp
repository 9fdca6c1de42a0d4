#pragma once

#include <string>

#include "eegvc/adam.hpp"
#include "eegvc/model.hpp"

namespace eegvc {

// Checkpoint layout (version 1, little-endian):
//   magic "EEGVCKPT", u16 version, u32 entry count,
//   per entry: u32 name length + name, u8 rank, u32 dims[rank], f64 data;
//   u8 has_adam; when set: u64 t, f64 lr/beta1/beta2/eps, then one m and one
//   v entry per parameter in the same layout, named "<param>.m" / "<param>.v".
void save_checkpoint(const Generator& net, const AdamState* opt,
                     const std::string& path);

// Loads into an architecture-compatible net; rejects a mismatched layer
// inventory naming the first offending entry. Adam state is restored when the
// file carries it and opt is non-null.
struct CheckpointInfo {
  bool has_adam = false;
};
CheckpointInfo load_checkpoint(Generator& net, AdamState* opt,
                               const std::string& path);

}  // namespace eegvc
