#include <algorithm>
#include <stdexcept>

#include "custego/bitio.hpp"
#include "custego/codec.hpp"
#include "custego/errors.hpp"

namespace custego {

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'U', 'S', 'G'};
constexpr std::uint8_t kVersion = 1;

void write_node(BitWriter& out, const CuNode& node, int depth, const std::vector<CodedLeaf>& leaves,
                std::size_t& next) {
  if (node.is_split()) {
    out.put_bit(true);
    for (const auto& c : node.children) write_node(out, c, depth + 1, leaves, next);
    return;
  }
  if (next >= leaves.size()) throw std::invalid_argument("coded frame has fewer leaves than its structure");
  const CodedLeaf& leaf = leaves[next++];
  if (leaf.kind != node.kind) throw std::invalid_argument("coded leaf does not match structure");
  write_leaf(out, leaf);
}

CuNode read_node(BitReader& in, const Rect& rect, int depth, std::vector<CodedLeaf>& leaves) {
  if (depth < 3) {
    if (in.get_bit()) {
      CuNode node{kind_at_depth(depth), {}};
      node.children.reserve(4);
      for (int i = 0; i < 4; ++i) node.children.push_back(read_node(in, rect.child(i), depth + 1, leaves));
      return node;
    }
    leaves.push_back([&] {
      // Split flag 0 was consumed; the body follows.
      CodedLeaf leaf;
      leaf.rect = rect;
      leaf.kind = kind_at_depth(depth);
      leaf.modes.push_back(static_cast<IntraMode>(in.get_bits(2)));
      std::vector<std::int32_t> block(static_cast<std::size_t>(rect.size) * rect.size);
      for (auto& v : block) v = in.get_se();
      leaf.levels.push_back(std::move(block));
      leaf.cost.rate = entropy_size(leaf);
      return leaf;
    }());
    return CuNode::leaf(kind_at_depth(depth));
  }
  leaves.push_back(read_leaf(in, rect));
  return CuNode::leaf(leaves.back().kind);
}

}  // namespace

std::vector<std::uint8_t> write_bitstream(std::span<const CodedFrame> frames) {
  if (frames.empty()) throw std::invalid_argument("no frames to write");
  if (frames.size() > 0xFFFF) throw std::invalid_argument("too many frames for the container");
  const int w = frames.front().structure.width, h = frames.front().structure.height;
  const Qp qp = frames.front().qp;
  if (w <= 0 || h <= 0 || w > 0xFFFF || h > 0xFFFF) throw std::invalid_argument("dimensions do not fit u16");

  BitWriter out;
  out.put_bytes(kMagic);
  out.put_u8(kVersion);
  out.put_u16(static_cast<std::uint16_t>(w));
  out.put_u16(static_cast<std::uint16_t>(h));
  out.put_u8(static_cast<std::uint8_t>(qp.value()));
  out.put_u16(static_cast<std::uint16_t>(frames.size()));
  for (const auto& f : frames) {
    if (f.structure.width != w || f.structure.height != h || !(f.qp == qp))
      throw std::invalid_argument("frames differ in size or qp");
    std::size_t next = 0;
    for (const auto& ctu : f.structure.ctus) write_node(out, ctu, 0, f.leaves, next);
    if (next != f.leaves.size()) throw std::invalid_argument("coded frame has extra leaves");
    out.align();
  }
  return out.take();
}

DecodedVideo read_bitstream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    throw FormatError("bad magic");
  BitReader in(bytes);
  in.get_bits(32);
  if (in.get_u8() != kVersion) throw FormatError("unsupported bitstream version");
  const int w = in.get_u16(), h = in.get_u16();
  const int qp_value = in.get_u8();
  const int count = in.get_u16();
  if (w == 0 || h == 0 || w % kCtuSize != 0 || h % kCtuSize != 0) throw FormatError("illegal frame dimensions");
  if (qp_value > 51) throw FormatError("illegal qp");
  if (count == 0) throw FormatError("bitstream has no frames");

  DecodedVideo video{w, h, Qp(qp_value), {}};
  for (int f = 0; f < count; ++f) {
    CodedFrame coded{StructureMap(w, h), {}, video.qp};
    for (std::size_t i = 0; i < coded.structure.ctus.size(); ++i)
      coded.structure.ctus[i] = read_node(in, coded.structure.ctu_rect(i), 0, coded.leaves);
    in.align();
    Frame recon = reconstruct(coded);
    video.frames.push_back({std::move(coded), std::move(recon)});
  }
  if (!in.at_end()) throw FormatError("trailing data after last frame");
  return video;
}

std::vector<std::uint8_t> frame_bitstream(const CodedFrame& coded) {
  return write_bitstream(std::span<const CodedFrame>(&coded, 1));
}

FrameDecoding decode_frame(std::span<const std::uint8_t> bytes) {
  auto video = read_bitstream(bytes);
  if (video.frames.size() != 1) throw FormatError("expected a single-frame bitstream");
  auto& f = video.frames.front();
  return {std::move(f.coded.structure), std::move(f.recon)};
}

std::uint64_t VideoEncoding::bits() const {
  std::uint64_t total = 0;
  for (const auto& f : frames) total += f.coded.bits();
  return total;
}

VideoEncoding encode_video(std::span<const Frame> frames, Qp qp) {
  VideoEncoding out;
  std::vector<CodedFrame> coded;
  for (const auto& f : frames) {
    out.frames.push_back(encode_frame(f, qp));
    coded.push_back(out.frames.back().coded);
  }
  out.bitstream = write_bitstream(coded);
  return out;
}

VideoEncoding encode_video_forced(std::span<const Frame> frames, Qp qp, std::span<const StructureMap> forced) {
  if (forced.size() != frames.size()) throw std::invalid_argument("one forced structure per frame required");
  VideoEncoding out;
  std::vector<CodedFrame> coded;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.frames.push_back(encode_frame_forced(frames[i], qp, forced[i]));
    coded.push_back(out.frames.back().coded);
  }
  out.bitstream = write_bitstream(coded);
  return out;
}

}  // namespace custego
