// Wire format for multiplier exchange between neighbouring nodes:
//   u32 node id | u32 iteration | L x f64 values      (all little-endian)
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace comets {

struct MultiplierMessage {
  std::uint32_t node = 0;
  std::uint32_t iteration = 0;
  std::vector<double> values;

  bool operator==(const MultiplierMessage&) const = default;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::size_t encoded_size(std::size_t levels) { return 8 + 8 * levels; }

/// Throws std::invalid_argument for an empty value row.
std::vector<std::uint8_t> encode_message(const MultiplierMessage& m);
void encode_message(const MultiplierMessage& m, std::vector<std::uint8_t>& out);

/// `levels` is the expected row length; a buffer of any other size throws
/// DecodeError.
MultiplierMessage decode_message(std::span<const std::uint8_t> bytes, std::size_t levels);

}  // namespace comets
