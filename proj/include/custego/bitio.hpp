#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace custego {

// MSB-first bit packing.
class BitWriter {
 public:
  void put_bit(bool bit);
  void put_bits(std::uint32_t value, int count);
  void put_u8(std::uint8_t v) { put_bits(v, 8); }
  void put_u16(std::uint16_t v) { put_bits(v, 16); }
  void put_bytes(std::span<const std::uint8_t> bytes);
  void put_ue(std::uint32_t value);
  void put_se(std::int32_t value);
  /// Pads with zero bits up to the next byte boundary.
  void align();

  std::size_t bit_count() const { return bits_; }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t bits_ = 0;
};

// Throws FormatError on reads past the end.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}

  bool get_bit();
  std::uint32_t get_bits(int count);
  std::uint8_t get_u8() { return static_cast<std::uint8_t>(get_bits(8)); }
  std::uint16_t get_u16() { return static_cast<std::uint16_t>(get_bits(16)); }
  std::uint32_t get_ue();
  std::int32_t get_se();
  void align();

  std::size_t bit_position() const { return pos_; }
  std::size_t bits_left() const { return data_.size() * 8 - pos_; }
  bool at_end() const { return pos_ >= data_.size() * 8; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// Length in bits of the order-0 exp-Golomb code of `value`.
int ue_length(std::uint32_t value);
/// Length in bits of the signed (interleaved) order-0 exp-Golomb code of `value`.
int se_length(std::int32_t value);

}  // namespace custego
