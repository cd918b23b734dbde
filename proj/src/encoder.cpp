#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "custego/bitio.hpp"
#include "custego/codec.hpp"
#include "custego/errors.hpp"

namespace custego {

namespace {

std::uint8_t clip8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

// Prediction plus dequantized residual, written into `recon`.
void reconstruct_block(Frame& recon, int x, int y, int n, IntraMode mode, std::span<const std::int32_t> levels,
                       Qp qp) {
  const auto pred = predict(recon, x, y, n, mode);
  const bool all_zero = std::all_of(levels.begin(), levels.end(), [](std::int32_t v) { return v == 0; });
  if (all_zero) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) recon.at(x + i, y + j) = clip8(pred[static_cast<std::size_t>(j * n + i)]);
    return;
  }
  const auto residual = dct_inverse(dequantize(levels, qp), n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(j * n + i);
      recon.at(x + i, y + j) = clip8(pred[k] + static_cast<int>(std::lround(residual[k])));
    }
}

struct BlockChoice {
  IntraMode mode = IntraMode::DC;
  std::vector<std::int32_t> levels;
  double sse = 0;
  std::uint64_t bits = 0;  // mode + coefficients
};

// Tries every intra mode for one prediction unit, keeps the cheapest
// (first mode wins ties) and leaves its reconstruction in `recon`.
BlockChoice code_block(const Frame& source, Frame& recon, int x, int y, int n, Qp qp, double lambda) {
  BlockChoice best;
  double best_j = 0;
  std::vector<std::uint8_t> best_pixels;
  std::vector<double> residual(static_cast<std::size_t>(n) * n);
  for (const IntraMode mode : kIntraModes) {
    const auto pred = predict(recon, x, y, n, mode);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(j * n + i);
        residual[k] = static_cast<double>(source.at(x + i, y + j)) - pred[k];
      }
    auto levels = quantize(dct_forward(residual, n), qp);
    std::uint64_t bits = 2;
    for (auto v : levels) bits += static_cast<std::uint64_t>(se_length(v));

    reconstruct_block(recon, x, y, n, mode, levels, qp);
    double sse = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double d = static_cast<double>(source.at(x + i, y + j)) - recon.at(x + i, y + j);
        sse += d * d;
      }
    const double j_cost = sse + lambda * static_cast<double>(bits);
    if (best_pixels.empty() || j_cost < best_j) {
      best = {mode, std::move(levels), sse, bits};
      best_j = j_cost;
      best_pixels.resize(static_cast<std::size_t>(n) * n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) best_pixels[static_cast<std::size_t>(j * n + i)] = recon.at(x + i, y + j);
    }
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) recon.at(x + i, y + j) = best_pixels[static_cast<std::size_t>(j * n + i)];
  return best;
}

std::vector<std::uint8_t> save_region(const Frame& f, const Rect& r) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(r.size) * r.size);
  for (int j = 0; j < r.size; ++j)
    for (int i = 0; i < r.size; ++i) out[static_cast<std::size_t>(j * r.size + i)] = f.at(r.x + i, r.y + j);
  return out;
}

void restore_region(Frame& f, const Rect& r, const std::vector<std::uint8_t>& pixels) {
  for (int j = 0; j < r.size; ++j)
    for (int i = 0; i < r.size; ++i) f.at(r.x + i, r.y + j) = pixels[static_cast<std::size_t>(j * r.size + i)];
}

void check_padded(const Frame& frame) {
  if (frame.width <= 0 || frame.height <= 0 || frame.width % kCtuSize != 0 || frame.height % kCtuSize != 0)
    throw std::invalid_argument("frame must be padded to the 64x64 CTU grid");
  if (frame.luma.size() != static_cast<std::size_t>(frame.width) * frame.height)
    throw std::invalid_argument("frame luma size mismatch");
}

// Bottom-up RDO for one node. Appends chosen leaves in coding order.
RdCost rdo_node(const Frame& source, Frame& recon, const Rect& rect, int depth, Qp qp, double lambda,
                CuNode& out, std::vector<CodedLeaf>& leaves) {
  if (depth == 3) {
    CodedLeaf whole = rd_cost_leaf(source, recon, rect, CuKind::S8_2Nx2N, qp);
    const auto whole_pixels = save_region(recon, rect);
    CodedLeaf quarters = rd_cost_leaf(source, recon, rect, CuKind::S8_NxN, qp);
    if (quarters.cost.j < whole.cost.j) {
      out = CuNode::leaf(CuKind::S8_NxN);
      const RdCost c = quarters.cost;
      leaves.push_back(std::move(quarters));
      return c;
    }
    restore_region(recon, rect, whole_pixels);
    out = CuNode::leaf(CuKind::S8_2Nx2N);
    const RdCost c = whole.cost;
    leaves.push_back(std::move(whole));
    return c;
  }

  CodedLeaf leaf = rd_cost_leaf(source, recon, rect, kind_at_depth(depth), qp);
  const auto leaf_pixels = save_region(recon, rect);

  CuNode split{kind_at_depth(depth), std::vector<CuNode>(4)};
  std::vector<CodedLeaf> split_leaves;
  RdCost split_cost{0, 1, lambda};
  for (int i = 0; i < 4; ++i) {
    const RdCost c = rdo_node(source, recon, rect.child(i), depth + 1, qp, lambda,
                              split.children[static_cast<std::size_t>(i)], split_leaves);
    split_cost.distortion += c.distortion;
    split_cost.rate += c.rate;
    split_cost.j += c.j;
  }
  if (split_cost.j < leaf.cost.j) {
    out = std::move(split);
    for (auto& l : split_leaves) leaves.push_back(std::move(l));
    return split_cost;
  }
  restore_region(recon, rect, leaf_pixels);
  out = CuNode::leaf(kind_at_depth(depth));
  const RdCost c = leaf.cost;
  leaves.push_back(std::move(leaf));
  return c;
}

RdCost code_forced(const Frame& source, Frame& recon, const CuNode& node, const Rect& rect, int depth, Qp qp,
                   double lambda, std::vector<CodedLeaf>& leaves) {
  if (!node.is_split()) {
    leaves.push_back(rd_cost_leaf(source, recon, rect, node.kind, qp));
    return leaves.back().cost;
  }
  RdCost total{0, 1, lambda};
  for (int i = 0; i < 4; ++i) {
    const RdCost c = code_forced(source, recon, node.children[static_cast<std::size_t>(i)], rect.child(i),
                                 depth + 1, qp, lambda, leaves);
    total.distortion += c.distortion;
    total.rate += c.rate;
    total.j += c.j;
  }
  return total;
}

int count_splits(const CuNode& node) {
  if (!node.is_split()) return 0;
  int n = 1;
  for (const auto& c : node.children) n += count_splits(c);
  return n;
}

}  // namespace

std::uint64_t CodedFrame::bits() const {
  std::uint64_t total = 0;
  for (const auto& l : leaves) total += entropy_size(l);
  for (const auto& ctu : structure.ctus) total += static_cast<std::uint64_t>(count_splits(ctu));
  return total;
}

double CodedFrame::total_j() const {
  double j = 0;
  for (const auto& l : leaves) j += l.cost.j;
  std::uint64_t splits = 0;
  for (const auto& ctu : structure.ctus) splits += static_cast<std::uint64_t>(count_splits(ctu));
  return j + lambda_from_qp(qp) * static_cast<double>(splits);
}

std::uint64_t entropy_size(const CodedLeaf& leaf) {
  std::uint64_t bits = 1 + 2 * static_cast<std::uint64_t>(leaf.modes.size());
  for (const auto& block : leaf.levels)
    for (auto v : block) bits += static_cast<std::uint64_t>(se_length(v));
  return bits;
}

void write_leaf(BitWriter& out, const CodedLeaf& leaf) {
  const bool depth3 = tree_depth(leaf.kind) == 3;
  out.put_bit(depth3 && leaf.kind == CuKind::S8_NxN);  // PU flag, or split flag 0
  for (auto m : leaf.modes) out.put_bits(static_cast<std::uint32_t>(m), 2);
  for (const auto& block : leaf.levels)
    for (auto v : block) out.put_se(v);
}

namespace {

CodedLeaf read_leaf_body(BitReader& in, const Rect& rect, CuKind kind) {
  CodedLeaf leaf;
  leaf.rect = rect;
  leaf.kind = kind;
  const int units = kind == CuKind::S8_NxN ? 4 : 1;
  const int n = kind == CuKind::S8_NxN ? 4 : rect.size;
  for (int u = 0; u < units; ++u) leaf.modes.push_back(static_cast<IntraMode>(in.get_bits(2)));
  for (int u = 0; u < units; ++u) {
    std::vector<std::int32_t> block(static_cast<std::size_t>(n) * n);
    for (auto& v : block) v = in.get_se();
    leaf.levels.push_back(std::move(block));
  }
  leaf.cost.rate = entropy_size(leaf);
  return leaf;
}

}  // namespace

CodedLeaf read_leaf(BitReader& in, const Rect& rect) {
  const int depth = rect.size == 64 ? 0 : rect.size == 32 ? 1 : rect.size == 16 ? 2 : 3;
  const bool flag = in.get_bit();
  if (depth < 3 && flag) throw FormatError("expected a leaf, found a split flag");
  const CuKind kind = depth < 3 ? kind_at_depth(depth) : (flag ? CuKind::S8_NxN : CuKind::S8_2Nx2N);
  return read_leaf_body(in, rect, kind);
}

CodedLeaf rd_cost_leaf(const Frame& source, Frame& recon, const Rect& rect, CuKind kind, Qp qp) {
  if (kind_size(kind) != rect.size) throw std::invalid_argument("leaf kind does not match rect size");
  const double lambda = lambda_from_qp(qp);
  CodedLeaf leaf;
  leaf.rect = rect;
  leaf.kind = kind;
  double sse = 0;
  std::uint64_t bits = 1;
  if (kind == CuKind::S8_NxN) {
    for (int i = 0; i < 4; ++i) {
      const Rect pu = rect.child(i);
      auto c = code_block(source, recon, pu.x, pu.y, 4, qp, lambda);
      sse += c.sse;
      bits += c.bits;
      leaf.modes.push_back(c.mode);
      leaf.levels.push_back(std::move(c.levels));
    }
  } else {
    auto c = code_block(source, recon, rect.x, rect.y, rect.size, qp, lambda);
    sse = c.sse;
    bits += c.bits;
    leaf.modes.push_back(c.mode);
    leaf.levels.push_back(std::move(c.levels));
  }
  leaf.cost = RdCost::make(sse, bits, lambda);
  return leaf;
}

FrameEncoding encode_frame(const Frame& frame, Qp qp) {
  check_padded(frame);
  StructureMap chosen(frame.width, frame.height);
  Frame recon(frame.width, frame.height, 128);
  const double lambda = lambda_from_qp(qp);
  std::vector<CodedLeaf> scratch;
  for (std::size_t i = 0; i < chosen.ctus.size(); ++i)
    rdo_node(frame, recon, chosen.ctu_rect(i), 0, qp, lambda, chosen.ctus[i], scratch);
  // Re-run with the decided partition so encode_frame(f) == encode_frame_forced(f, own map).
  return encode_frame_forced(frame, qp, chosen);
}

FrameEncoding encode_frame_forced(const Frame& frame, Qp qp, const StructureMap& forced) {
  check_padded(frame);
  validate(forced);
  if (forced.width != frame.width || forced.height != frame.height)
    throw std::invalid_argument("forced structure does not match frame size");
  FrameEncoding enc{{forced, {}, qp}, Frame(frame.width, frame.height, 128)};
  const double lambda = lambda_from_qp(qp);
  for (std::size_t i = 0; i < forced.ctus.size(); ++i)
    code_forced(frame, enc.recon, forced.ctus[i], forced.ctu_rect(i), 0, qp, lambda, enc.coded.leaves);
  return enc;
}

RdCost evaluate_structure(const Frame& source, const Frame& context, const Rect& rect, const CuNode& node,
                          Qp qp) {
  Frame scratch = context;
  const double lambda = lambda_from_qp(qp);
  std::vector<CodedLeaf> leaves;
  const int depth = rect.size == 64 ? 0 : rect.size == 32 ? 1 : rect.size == 16 ? 2 : 3;
  return code_forced(source, scratch, node, rect, depth, qp, lambda, leaves);
}

Frame reconstruct(const CodedFrame& coded) {
  Frame recon(coded.structure.width, coded.structure.height, 128);
  for (const auto& leaf : coded.leaves) {
    if (leaf.kind == CuKind::S8_NxN) {
      for (int i = 0; i < 4; ++i) {
        const Rect pu = leaf.rect.child(i);
        reconstruct_block(recon, pu.x, pu.y, 4, leaf.modes[static_cast<std::size_t>(i)],
                          leaf.levels[static_cast<std::size_t>(i)], coded.qp);
      }
    } else {
      reconstruct_block(recon, leaf.rect.x, leaf.rect.y, leaf.rect.size, leaf.modes[0], leaf.levels[0], coded.qp);
    }
  }
  return recon;
}

}  // namespace custego
