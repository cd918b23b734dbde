#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace custego {

/// Cost marking a cover position that must never change.
inline constexpr double kWet = std::numeric_limits<double>::infinity();

/// Syndrome-trellis code parameters. Bit r of `hhat` is row r of the first
/// sub-matrix column; the remaining columns are drawn from `seed`.
struct StcParams {
  int h = 7;
  std::uint32_t hhat = 0b1011011;  // rows top..bottom: 1,1,0,1,1,0,1
  std::uint64_t seed = 0;

  bool operator==(const StcParams&) const = default;
};

void validate(const StcParams& params);

/// Rows 1,1,0 repeated, last row forced to 1. default_hhat(7) == 0b1011011.
std::uint32_t default_hhat(int h);

/// Banded parity-check matrix H (m x n). Cover position j contributes
/// `columns[j]` (bit r -> row first_row[j] + r), already truncated at row m.
struct ParityLayout {
  std::size_t n = 0;
  std::size_t m = 0;
  int h = 0;
  std::vector<std::uint32_t> columns;
  std::vector<std::size_t> first_row;
  std::vector<std::size_t> block_end;  // exclusive end column of block i

  /// Row-major dense m x n matrix of 0/1.
  std::vector<std::vector<std::uint8_t>> dense() const;
  std::vector<std::uint8_t> syndrome(std::span<const std::uint8_t> word) const;
};

/// Block widths floor(n/m), the first n mod m blocks one wider.
ParityLayout build_parity(std::size_t n, std::size_t m, const StcParams& params);

struct StcResult {
  std::vector<std::uint8_t> stego;
  double cost = 0;
  std::size_t changes = 0;
};

/// Minimum-cost word with H * stego = message (Viterbi). Keeps the cover bit on
/// cost ties. Throws ExtractionError if only wet positions could satisfy the syndrome.
StcResult stc_embed(std::span<const std::uint8_t> cover, std::span<const double> costs,
                    std::span<const std::uint8_t> message, const StcParams& params);

std::vector<std::uint8_t> stc_extract(std::span<const std::uint8_t> stego, std::size_t m,
                                      const StcParams& params);

}  // namespace custego
