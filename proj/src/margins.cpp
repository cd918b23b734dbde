#include <algorithm>
#include <cmath>
#include <limits>

#include "custego/codec.hpp"

namespace custego {

namespace {

struct MarginWalker {
  const Frame& source;
  const Frame& recon;
  const CodedFrame& coded;
  int frame_index;
  double lambda;
  std::size_t next_leaf = 0;
  std::vector<RdoMargin> out;

  double epsilon(const Rect& r) const {
    double sse = 0;
    for (int j = 0; j < r.size; ++j)
      for (int i = 0; i < r.size; ++i) {
        const double d = static_cast<double>(recon.at(r.x + i, r.y + j)) - source.at(r.x + i, r.y + j);
        sse += d * d;
      }
    return std::sqrt(sse);
  }

  // Cheapest one-depth alternative to the leaf itself: split one level, or PU flip at 8x8.
  double own_alternative(const CodedLeaf& leaf) const {
    CuNode alt;
    switch (leaf.kind) {
      case CuKind::S32: alt = CuNode::split_uniform(1); break;
      case CuKind::S16: alt = CuNode::split_uniform(2); break;
      case CuKind::S8_2Nx2N: alt = CuNode::leaf(CuKind::S8_NxN); break;
      case CuKind::S8_NxN: alt = CuNode::leaf(CuKind::S8_2Nx2N); break;
      case CuKind::S64: return std::numeric_limits<double>::infinity();
    }
    return evaluate_structure(source, recon, leaf.rect, alt, coded.qp).j - leaf.cost.j;
  }

  void walk(const CuNode& node, const Rect& rect, int depth) {
    if (!node.is_split()) {
      const CodedLeaf& leaf = coded.leaves[next_leaf++];
      if (leaf.kind != CuKind::S64) {
        CuRef ref{frame_index, rect, leaf.kind, static_cast<int>(out.size())};
        out.push_back({ref, leaf.cost.j, own_alternative(leaf), epsilon(rect)});
      }
      return;
    }
    const std::size_t first_out = out.size();
    const std::size_t first_leaf = next_leaf;
    for (int i = 0; i < 4; ++i) walk(node.children[static_cast<std::size_t>(i)], rect.child(i), depth + 1);

    const bool all_leaves = std::none_of(node.children.begin(), node.children.end(),
                                         [](const CuNode& c) { return c.is_split(); });
    if (!all_leaves) return;
    // Merge alternative: the parent coded as one leaf versus the four siblings plus the split flag.
    double group = lambda;
    for (std::size_t k = first_leaf; k < first_leaf + 4; ++k) group += coded.leaves[k].cost.j;
    const double merged =
        evaluate_structure(source, recon, rect, CuNode::leaf(kind_at_depth(depth)), coded.qp).j - group;
    for (std::size_t k = first_out; k < out.size(); ++k) out[k].delta = std::min(out[k].delta, merged);
  }
};

}  // namespace

std::vector<RdoMargin> rdo_margins(const Frame& source, const CodedFrame& coded, const Frame& recon,
                                   int frame_index) {
  MarginWalker walker{source, recon, coded, frame_index, lambda_from_qp(coded.qp), 0, {}};
  for (std::size_t i = 0; i < coded.structure.ctus.size(); ++i)
    walker.walk(coded.structure.ctus[i], coded.structure.ctu_rect(i), 0);
  for (auto& m : walker.out) m.delta = std::max(0.0, m.delta);
  return walker.out;
}

std::vector<RdoMargin> rdo_margins(const Frame& source, const CodedFrame& coded, int frame_index) {
  return rdo_margins(source, coded, reconstruct(coded), frame_index);
}

}  // namespace custego
