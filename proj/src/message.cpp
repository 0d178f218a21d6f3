#include "comets/message.hpp"

#include <bit>
#include <string>

namespace comets {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> b, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= std::uint64_t{b[at + i]} << (8 * i);
  return v;
}

}  // namespace

void encode_message(const MultiplierMessage& m, std::vector<std::uint8_t>& out) {
  if (m.values.empty()) throw std::invalid_argument("encode_message: empty multiplier row");
  out.clear();
  out.reserve(encoded_size(m.values.size()));
  put_u32(out, m.node);
  put_u32(out, m.iteration);
  for (double v : m.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::vector<std::uint8_t> encode_message(const MultiplierMessage& m) {
  std::vector<std::uint8_t> out;
  encode_message(m, out);
  return out;
}

MultiplierMessage decode_message(std::span<const std::uint8_t> bytes, std::size_t levels) {
  if (levels == 0) throw DecodeError("decode_message: zero levels");
  if (bytes.size() != encoded_size(levels))
    throw DecodeError("decode_message: expected " + std::to_string(encoded_size(levels)) +
                      " bytes, got " + std::to_string(bytes.size()));
  MultiplierMessage m;
  m.node = static_cast<std::uint32_t>(get_le(bytes, 0, 4));
  m.iteration = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  m.values.resize(levels);
  for (std::size_t l = 0; l < levels; ++l)
    m.values[l] = std::bit_cast<double>(get_le(bytes, 8 + 8 * l, 8));
  return m;
}

}  // namespace comets
