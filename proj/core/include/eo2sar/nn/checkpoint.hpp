#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "eo2sar/nn/model.hpp"

namespace eo2sar::nn {

// On-disk model snapshot. extras carries free-form provenance (seeds,
// training phase, source dataset) and survives a round trip untouched.
struct Checkpoint {
    NetworkConfig config;
    ModelParams<float> params;
    std::map<std::string, std::string> extras;
};

// Binary layout, all integers little-endian:
//   "EOSAR" magic, one version byte ('1'), '\n'
//   u32 config block length, then that many bytes of key=value lines
//   u32 parameter count, then per parameter:
//     u32 name length, name bytes, u32 rank, rank x u32 extents
//   float32 payloads, contiguous, in table order
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

// Throws FormatError on bad magic, unsupported version, truncation, or a
// shape table that disagrees with the payload bytes or the config block.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eo2sar::nn
