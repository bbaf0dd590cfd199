#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "tdformer/model.hpp"

namespace tdf {

struct Checkpoint {
    ModelConfig config;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    TDformerParams params;
};

/// Layout: one line of JSON (config, seed, epoch, block names and shapes),
/// a newline, then every block as little-endian float64 in for_each_block
/// order.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tdf
