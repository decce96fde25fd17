#pragma once

#include "efdls/extractor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace efdls {

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kWireHeaderSize = 4 + 1 + 4 + 4 + 1;

struct DecodedMessage {
    WeightBundle bundle;  // bundle.epoch == epoch
    std::uint32_t epoch = 0;
    std::uint32_t user_id = 0;
};

// Layout, all integers little-endian:
//   "EFDL" | version u8 | epoch u32 | user_id u32 | count u8
//   per tensor: tag u8 | ndims u8 | dims u32[ndims] | values f32[volume]
// Values are narrowed to single precision.
std::vector<std::uint8_t> encode_weight_message(const WeightBundle& bundle, std::uint32_t epoch,
                                                std::uint32_t user_id);
// Throws MalformedMessageError carrying the byte offset of the first problem.
DecodedMessage decode_weight_message(std::span<const std::uint8_t> bytes);
std::size_t encoded_size(const WeightBundle& bundle);

// Length-prefixed frames (u32 little-endian length, then payload).
void append_frame(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> make_frame(std::span<const std::uint8_t> payload);

}  // namespace efdls
