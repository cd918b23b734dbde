#pragma once

#include <random>

#include "custego/codec.hpp"
#include "custego/quadtree.hpp"
#include "custego/stego.hpp"

namespace testing {

using custego::CuKind;
using custego::CuNode;

inline CuNode leaf(CuKind k) { return CuNode::leaf(k); }

inline CuNode split(int depth, CuNode a, CuNode b, CuNode c, CuNode d) {
  CuNode n = CuNode::split_uniform(depth);
  n.children = {std::move(a), std::move(b), std::move(c), std::move(d)};
  return n;
}

inline custego::StructureMap one_ctu(CuNode root) {
  custego::StructureMap m(64, 64);
  m.ctus[0] = std::move(root);
  return m;
}

inline CuNode random_tree(std::mt19937_64& rng, int depth = 0) {
  if (depth == 3) return leaf(rng() & 1 ? CuKind::S8_NxN : CuKind::S8_2Nx2N);
  if (rng() % 3 == 0) return leaf(custego::kind_at_depth(depth));
  CuNode n = CuNode::split_uniform(depth);
  for (auto& c : n.children) c = random_tree(rng, depth + 1);
  return n;
}

inline custego::StructureMap random_map(std::mt19937_64& rng, int w, int h) {
  custego::StructureMap m(w, h);
  for (auto& c : m.ctus) c = random_tree(rng);
  return m;
}

inline custego::Frame random_frame(std::mt19937_64& rng, int w, int h) {
  custego::Frame f(w, h);
  for (auto& p : f.luma) p = static_cast<std::uint8_t>(rng());
  return f;
}

// Every cover leaf is either untouched or, for carriers, replaced by its
// one-level flip. Returns the number of violations.
inline int depth_bound_violations(const custego::StructureMap& cover, const custego::StructureMap& stego,
                                  const custego::CarrierSequence& carriers) {
  int bad = 0;
  std::size_t next = 0;
  custego::for_each_leaf(cover, [&](const custego::Rect& rect, CuKind kind) {
    const CuNode* node = custego::find_node(stego, rect);
    const bool carrier = next < carriers.q() && carriers.carriers[next].rect == rect;
    if (carrier) ++next;
    if (node == nullptr) {
      ++bad;
      return;
    }
    if (*node == leaf(kind)) return;
    if (!carrier || !(*node == custego::flipped_structure(kind))) ++bad;
  });
  if (next != carriers.q()) ++bad;
  return bad;
}

}  // namespace testing
