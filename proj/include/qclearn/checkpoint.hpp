#pragma once

#include <cstdint>
#include <string>

#include "qclearn/model.hpp"

namespace qclearn {

struct TrainMeta {
    std::uint64_t seed = 0;
    std::int64_t steps = 0;
    std::uint64_t loss_digest = 0;  // FNV-1a over the validation-loss curve
};

// Checkpoint file: magic "QCNN", u32 version, length-prefixed UTF-8 JSON
// blob (model config + training metadata), tensor records (u16 name length,
// name, dtype byte, rank byte, u32 dims, raw little-endian values), and a
// trailing CRC-32 over everything before it. Parameters and batch-norm
// running statistics round-trip bit exactly.
void save_checkpoint(const Model& model, const std::string& path, const TrainMeta& meta = {});

Model load_checkpoint(const std::string& path, TrainMeta* meta = nullptr);

}  // namespace qclearn
