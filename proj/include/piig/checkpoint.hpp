#pragma once

#include <string>

#include "piig/config.hpp"
#include "piig/trainer.hpp"

namespace piig {

// Binary checkpoint: magic "PIIG", a little-endian u32 format version, the
// length-prefixed UTF-8 config echo, then length-prefixed named f32 records
// (name, rank, dims, payload) covering network parameters, optimizer
// moments, the RNG stream, and the iteration counter. Loading restores a
// state that continues training bit for bit.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                     const TrainState& state);

// The embedded config echo determines every shape; config_out receives it
// when non-null.
TrainState load_checkpoint(const std::string& path,
                           TrainConfig* config_out = nullptr);

}  // namespace piig
