#pragma once

#include "hofsurf/adam.hpp"
#include "hofsurf/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hofsurf {

// Optimizer position saved alongside the model so a run can be resumed.
struct TrainState {
    std::uint64_t iteration = 0; // steps completed
    std::uint64_t seed = 0;
    AdamState adam;

    friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct Checkpoint {
    HofModel model;
    // Mapping weights for a fixed input (learned-code object 0), so the
    // network can be evaluated without the encoder.
    std::optional<WeightVector> theta;
    std::optional<TrainState> training;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout, all integers and reals little-endian:
//
//   "HOFS"  u32 version
//   u32 n, then n u32 mapping dims (input, hidden..., output)
//   u32 encoder mode
//   u32 m, then m u32 encoder values:
//       code_dim object_count image_size channels growth head_hidden
//       conv width count, conv widths...
//   f64 emission_std
//   u32 section flags: 1 encoder params, 2 theta, 4 training state
//   [1] u32 tensor count; per tensor u32 rank, rank u32 extents, f64 data
//   [2] u64 length, f64 values
//   [4] u64 iteration, u64 seed, u64 adam step, then per parameter tensor
//       its first moment followed by its second moment as f64 data
//
// Tensors appear in HofModel::layout() order. Round trips are bit-exact.
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace hofsurf
