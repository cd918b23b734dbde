#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "custego/codec.hpp"
#include "custego/frame_io.hpp"
#include "custego/quadtree.hpp"
#include "custego/stc.hpp"

namespace custego {

/// full: every non-64x64 CU is a carrier. only8x8: 8x8 CUs only, blind
/// extraction. tew: forced-8x8 comparison baseline (see eval).
enum class Scheme { full, only8x8, tew };

std::string_view scheme_name(Scheme scheme);
Scheme parse_scheme(std::string_view name);

/// Cover bits of one frame in zig-zag order.
struct CarrierSequence {
  int frame = 0;
  std::vector<CuRef> carriers;
  std::vector<std::uint8_t> bits;

  std::size_t q() const { return carriers.size(); }
};

/// 32x32, 16x16 and 8x8 2Nx2N map to 0, 8x8 NxN to 1. 64x64 CUs are skipped.
CarrierSequence map_full(const StructureMap& map, int frame = 0);
/// Only 8x8 CUs: 2Nx2N -> 0, NxN -> 1.
CarrierSequence map_8x8(const StructureMap& map, int frame = 0);

/// Decode, re-encode at the same qp and return the new partition.
StructureMap recompress_structure(const CodedFrame& coded, Qp qp);
StructureMap recompress_structure(const Frame& recon, Qp qp);

/// Structure a carrier takes when its bit is flipped: one level deeper for
/// bit-0 carriers, 2Nx2N for an NxN carrier.
CuNode flipped_structure(CuKind kind);

/// |J - J'| / J, with DR = 0 when J = 0.
double dr_value(double j_current, double j_flipped);
/// DR of one carrier: coded cost of its leaf versus the cost of its flipped
/// structure evaluated in the same reconstruction context.
double dr(const Frame& source, const FrameEncoding& encoding, const CuRef& cu);

enum class DistortionCase { case1 = 1, case2 = 2, case3 = 3 };

DistortionCase classify_mdd(int mdd);
/// Case 1 (MDD = 0): MD * DR. Case 2 (MDD = 1): DR. Case 3 (MDD > 1): DR / MDD.
double three_level_cost(int md, double dr, int mdd);

struct CarrierCost {
  DistortionCase which = DistortionCase::case1;
  int md = 0;
  int mdd = 0;
  double dr = 0;
  double cost = 0;
};

struct ThreeLevelCosts {
  std::vector<CarrierCost> entries;

  std::vector<double> costs() const;
};

ThreeLevelCosts three_level_costs(const Frame& source, const FrameEncoding& encoding,
                                  const StructureMap& recompressed, const CarrierSequence& carriers);

/// Equal bits leave a CU alone, 0 -> 1 splits it one level
/// (8x8 2Nx2N becomes NxN), 1 -> 0 merges NxN into 2Nx2N.
StructureMap apply_modifications(const StructureMap& map, const CarrierSequence& carriers,
                                  std::span<const std::uint8_t> stego_bits);

struct EmbedHeader {
  Scheme scheme = Scheme::full;
  double alpha = 0.5;
  int qp = 32;
  StcParams stc;
  std::size_t message_len = 0;
  std::vector<std::size_t> carrier_counts;

  bool operator==(const EmbedHeader&) const = default;
};

std::string header_to_json(const EmbedHeader& header);
EmbedHeader header_from_json(std::string_view text);

/// Message bits assigned to each frame: min(floor(alpha * q_i), remaining).
std::vector<std::size_t> message_schedule(double alpha, std::span<const std::size_t> carrier_counts,
                                          std::size_t message_len);
std::size_t schedule_capacity(double alpha, std::span<const std::size_t> carrier_counts);

struct StegoPackage {
  std::vector<std::uint8_t> bitstream;
  EmbedHeader header;
  std::optional<std::vector<std::uint8_t>> side_info;  // CUSI of the cover structures
};

struct EmbedConfig {
  Scheme scheme = Scheme::full;
  double alpha = 0.5;
  Qp qp{32};
  StcParams stc;
};

/// Cover-side work shared by every message embedded into the same video.
struct FrameAnalysis {
  Frame source;  // padded
  FrameEncoding cover;
  StructureMap recompressed;
  CarrierSequence carriers;
  ThreeLevelCosts costs;
};

struct CoverAnalysis {
  Scheme scheme = Scheme::full;
  Qp qp{32};
  std::vector<FrameAnalysis> frames;
  std::vector<std::uint8_t> cover_bitstream;

  std::vector<std::size_t> carrier_counts() const;
  std::uint64_t cover_bits() const;
};

CoverAnalysis analyze_cover(const VideoSequence& video, Qp qp, Scheme scheme);
/// Same cover encodings and recompressions, carriers and costs rebuilt for `scheme`.
CoverAnalysis with_scheme(const CoverAnalysis& base, Scheme scheme);

struct EmbedResult {
  StegoPackage package;
  std::vector<StructureMap> stego_maps;
  std::vector<Frame> stego_recon;
  std::uint64_t stego_bits = 0;
  std::vector<std::vector<std::uint8_t>> stego_sequences;  // per-frame STC output
  std::vector<std::size_t> message_per_frame;
  std::size_t changes = 0;
};

EmbedResult embed(const CoverAnalysis& cover, std::span<const std::uint8_t> message, const EmbedConfig& config);
EmbedResult embed(const VideoSequence& video, std::span<const std::uint8_t> message, const EmbedConfig& config);

/// MSB-first unpacking of message bytes into bits and back (last byte zero-padded).
std::vector<std::uint8_t> bytes_to_bits(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits);

/// Recovers the message. The full and tew schemes need the cover structures,
/// from side info or by re-encoding `original` with the header's qp.
std::vector<std::uint8_t> extract(const StegoPackage& package, const VideoSequence* original = nullptr);

}  // namespace custego
