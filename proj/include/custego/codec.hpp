#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "custego/frame_io.hpp"
#include "custego/quadtree.hpp"

namespace custego {

class BitWriter;
class BitReader;

/// Quantization parameter, 0..51.
class Qp {
 public:
  explicit Qp(int value);
  int value() const { return value_; }
  bool operator==(const Qp&) const = default;

 private:
  int value_;
};

/// Lagrange multiplier 0.57 * 2^((qp - 12) / 3).
double lambda_from_qp(Qp qp);
/// Quantizer step 2^((qp - 4) / 6).
double quant_step(Qp qp);

enum class IntraMode : std::uint8_t { DC = 0, Planar = 1, Horizontal = 2, Vertical = 3 };
inline constexpr IntraMode kIntraModes[] = {IntraMode::DC, IntraMode::Planar, IntraMode::Horizontal,
                                            IntraMode::Vertical};

/// n*n prediction for the block at (x, y) from reconstructed neighbours.
/// The row above is available iff y > 0 and the column to the left iff x > 0;
/// missing references read as 128.
std::vector<int> predict(const Frame& recon, int x, int y, int n, IntraMode mode);

/// Orthonormal 2-D DCT-II of an n*n row-major block, n in {4, 8, 16, 32, 64}.
std::vector<double> dct_forward(std::span<const double> block, int n);
std::vector<double> dct_inverse(std::span<const double> coeffs, int n);

std::vector<std::int32_t> quantize(std::span<const double> coeffs, Qp qp);
std::vector<double> dequantize(std::span<const std::int32_t> levels, Qp qp);

struct RdCost {
  double distortion = 0;   // SSE
  std::uint64_t rate = 0;  // bits
  double j = 0;            // distortion + lambda * rate

  static RdCost make(double distortion, std::uint64_t rate, double lambda) {
    return {distortion, rate, distortion + lambda * static_cast<double>(rate)};
  }
};

/// One coded CU. S8_NxN leaves carry four modes and four 4x4 level blocks
/// (z-order); every other kind carries one of each.
struct CodedLeaf {
  Rect rect;
  CuKind kind = CuKind::S64;
  std::vector<IntraMode> modes;
  std::vector<std::vector<std::int32_t>> levels;
  RdCost cost;
};

struct CodedFrame {
  StructureMap structure;
  std::vector<CodedLeaf> leaves;  // coding order
  Qp qp{32};

  /// Exact number of bits this frame occupies in the bitstream, before byte alignment.
  std::uint64_t bits() const;
  double total_j() const;
};

struct FrameEncoding {
  CodedFrame coded;
  Frame recon;
};

/// Bits produced by write_leaf: split flag (depth < 3) or PU flag (depth 3),
/// 2 bits per prediction unit mode, and one signed exp-Golomb code per coefficient.
std::uint64_t entropy_size(const CodedLeaf& leaf);
void write_leaf(BitWriter& out, const CodedLeaf& leaf);
/// Reads a leaf written by write_leaf at `rect`. Throws FormatError if the
/// flag announces a split.
CodedLeaf read_leaf(BitReader& in, const Rect& rect);

/// Best intra mode(s) for a leaf of `kind` at `rect`. Writes the chosen
/// reconstruction into `recon`.
CodedLeaf rd_cost_leaf(const Frame& source, Frame& recon, const Rect& rect, CuKind kind, Qp qp);

/// Full RDO encode. `frame` must already be padded to the CTU grid.
FrameEncoding encode_frame(const Frame& frame, Qp qp);
/// Encode with a fixed partition; only intra modes are chosen.
FrameEncoding encode_frame_forced(const Frame& frame, Qp qp, const StructureMap& forced);

/// Cost of coding `rect` with the sub-tree `node` when everything outside
/// `rect` is taken from `context`. Rate includes the split flags of `node`.
RdCost evaluate_structure(const Frame& source, const Frame& context, const Rect& rect, const CuNode& node,
                          Qp qp);

/// Rebuilds the reconstruction from modes and levels.
Frame reconstruct(const CodedFrame& coded);

struct DecodedFrame {
  CodedFrame coded;
  Frame recon;
};

struct DecodedVideo {
  int width = 0;
  int height = 0;
  Qp qp{32};
  std::vector<DecodedFrame> frames;
};

// "CUSG" container: magic, version u8, width u16, height u16, qp u8,
// frame count u16 (big-endian), then each frame byte-aligned.
std::vector<std::uint8_t> write_bitstream(std::span<const CodedFrame> frames);
DecodedVideo read_bitstream(std::span<const std::uint8_t> bytes);

/// Single-frame convenience wrappers around the container.
std::vector<std::uint8_t> frame_bitstream(const CodedFrame& coded);
struct FrameDecoding {
  StructureMap structure;
  Frame recon;
};
FrameDecoding decode_frame(std::span<const std::uint8_t> bytes);

struct VideoEncoding {
  std::vector<FrameEncoding> frames;
  std::vector<std::uint8_t> bitstream;

  std::uint64_t bits() const;
};

VideoEncoding encode_video(std::span<const Frame> frames, Qp qp);
VideoEncoding encode_video_forced(std::span<const Frame> frames, Qp qp, std::span<const StructureMap> forced);

/// RD cost gap between a CU's chosen structure and its one-depth alternatives.
struct RdoMargin {
  CuRef cu;
  double j_opt = 0;
  double delta = 0;    // min over alternatives of J_alt - J_opt, clamped at 0
  double epsilon = 0;  // L2 norm of (recon - source) over the CU
};

std::vector<RdoMargin> rdo_margins(const Frame& source, const CodedFrame& coded, const Frame& recon,
                                   int frame_index = 0);
std::vector<RdoMargin> rdo_margins(const Frame& source, const CodedFrame& coded, int frame_index = 0);

}  // namespace custego
