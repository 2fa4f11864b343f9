// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_CHECKPOINT_HPP
#define MEGAN_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "megan/tensor.hpp"

namespace megan {

/// One serialized array: a trainable parameter or a persistent buffer
/// (batchnorm running statistics travel under reserved ".running_*" names).
struct CheckpointEntry {
    std::string name;
    Shape shape;
    std::vector<double> values;
};

/// Binary format: magic "MEGANCK1", then u64 entry count, then per entry a
/// length-prefixed UTF-8 name, u32 rank, u64 dims, and 64-bit little-endian
/// IEEE values. Everything little-endian regardless of host.
void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries);

/// Reads a checkpoint written by save_checkpoint; malformed files raise IoError
/// naming the path.
std::vector<CheckpointEntry> load_checkpoint(const std::string& path);

}  // namespace megan

#endif
