#include "custego/quadtree.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "custego/bitio.hpp"
#include "custego/errors.hpp"

namespace custego {

int kind_size(CuKind kind) {
  switch (kind) {
    case CuKind::S64: return 64;
    case CuKind::S32: return 32;
    case CuKind::S16: return 16;
    case CuKind::S8_2Nx2N:
    case CuKind::S8_NxN: return 8;
  }
  return 0;
}

int tree_depth(CuKind kind) {
  switch (kind) {
    case CuKind::S64: return 0;
    case CuKind::S32: return 1;
    case CuKind::S16: return 2;
    default: return 3;
  }
}

CuKind kind_at_depth(int depth) {
  switch (depth) {
    case 0: return CuKind::S64;
    case 1: return CuKind::S32;
    case 2: return CuKind::S16;
    case 3: return CuKind::S8_2Nx2N;
    default: throw std::invalid_argument("quad-tree depth out of range");
  }
}

std::string_view kind_name(CuKind kind) {
  switch (kind) {
    case CuKind::S64: return "64x64";
    case CuKind::S32: return "32x32";
    case CuKind::S16: return "16x16";
    case CuKind::S8_2Nx2N: return "8x8_2Nx2N";
    case CuKind::S8_NxN: return "8x8_NxN";
  }
  return "?";
}

CuNode CuNode::split_uniform(int depth) {
  if (depth < 0 || depth > 2) throw std::invalid_argument("only depths 0..2 can split");
  CuNode n{kind_at_depth(depth), {}};
  n.children.assign(4, CuNode::leaf(kind_at_depth(depth + 1)));
  return n;
}

StructureMap::StructureMap(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("structure map needs positive dimensions");
  ctus.assign(static_cast<std::size_t>(ctus_x()) * ctus_y(), CuNode::leaf(CuKind::S64));
}

namespace {

void validate_node(const CuNode& node, int depth) {
  if (node.is_split()) {
    if (depth > 2) throw std::invalid_argument("split below depth 2");
    if (node.children.size() != 4) throw std::invalid_argument("split node must have four children");
    if (node.kind != kind_at_depth(depth)) throw std::invalid_argument("split node kind mismatch");
    for (const auto& c : node.children) validate_node(c, depth + 1);
    return;
  }
  if (tree_depth(node.kind) != depth) throw std::invalid_argument("leaf kind inconsistent with depth");
}

void visit(const CuNode& node, const Rect& rect, const std::function<void(const Rect&, CuKind)>& fn) {
  if (!node.is_split()) {
    fn(rect, node.kind);
    return;
  }
  for (int i = 0; i < 4; ++i) visit(node.children[static_cast<std::size_t>(i)], rect.child(i), fn);
}

void check_aligned(const StructureMap& map, const Rect& rect) {
  const bool size_ok = rect.size == 8 || rect.size == 16 || rect.size == 32 || rect.size == 64;
  if (!size_ok || rect.x < 0 || rect.y < 0 || rect.x % rect.size != 0 || rect.y % rect.size != 0 ||
      rect.x + rect.size > map.ctus_x() * kCtuSize || rect.y + rect.size > map.ctus_y() * kCtuSize)
    throw std::invalid_argument("unaligned rect");
}

std::size_t ctu_index_of(const StructureMap& map, const Rect& rect) {
  return static_cast<std::size_t>(rect.y / kCtuSize) * static_cast<std::size_t>(map.ctus_x()) +
         static_cast<std::size_t>(rect.x / kCtuSize);
}

int max_leaf_depth_in(const CuNode& node, const Rect& node_rect, const Rect& query) {
  if (!node_rect.intersects(query)) return -1;
  if (!node.is_split()) return leaf_depth(node.kind);
  int best = -1;
  for (int i = 0; i < 4; ++i)
    best = std::max(best, max_leaf_depth_in(node.children[static_cast<std::size_t>(i)], node_rect.child(i), query));
  return best;
}

template <typename Node>
Node* locate(Node& node, const Rect& node_rect, const Rect& target) {
  if (node_rect == target) return &node;
  if (!node.is_split() || !node_rect.contains(target)) return nullptr;
  for (int i = 0; i < 4; ++i) {
    const Rect c = node_rect.child(i);
    if (c.contains(target)) return locate(node.children[static_cast<std::size_t>(i)], c, target);
  }
  return nullptr;
}

}  // namespace

void validate(const StructureMap& map) {
  if (map.width <= 0 || map.height <= 0) throw std::invalid_argument("structure map needs positive dimensions");
  if (map.ctus.size() != static_cast<std::size_t>(map.ctus_x()) * map.ctus_y())
    throw std::invalid_argument("CTU grid size does not match dimensions");
  for (const auto& ctu : map.ctus) validate_node(ctu, 0);
}

void for_each_leaf(const StructureMap& map, const std::function<void(const Rect&, CuKind)>& fn) {
  for (std::size_t i = 0; i < map.ctus.size(); ++i) visit(map.ctus[i], map.ctu_rect(i), fn);
}

std::vector<CuRef> zigzag_scan(const StructureMap& map, bool include64, int frame_index) {
  std::vector<CuRef> out;
  for_each_leaf(map, [&](const Rect& r, CuKind k) {
    if (k == CuKind::S64 && !include64) return;
    out.push_back({frame_index, r, k, static_cast<int>(out.size())});
  });
  return out;
}

int max_depth(CuKind kind) {
  if (kind == CuKind::S64) throw std::invalid_argument("64x64 CUs are never carriers");
  return leaf_depth(kind);
}

int leaf_depth(CuKind kind) {
  switch (kind) {
    case CuKind::S64: return 0;
    case CuKind::S32: return 1;
    case CuKind::S16: return 2;
    case CuKind::S8_2Nx2N: return 3;
    case CuKind::S8_NxN: return 4;
  }
  return 0;
}

int region_max_depth(const StructureMap& map, const Rect& rect) {
  check_aligned(map, rect);
  const std::size_t ctu = ctu_index_of(map, rect);
  return max_leaf_depth_in(map.ctus[ctu], map.ctu_rect(ctu), rect);
}

int mdd(const CuRef& orig, const StructureMap& recompressed) {
  return std::abs(max_depth(orig.kind) - region_max_depth(recompressed, orig.rect));
}

int structure_equal_region(const StructureMap&, const StructureMap& b, const Rect& rect, CuKind kind) {
  const CuNode* node = find_node(b, rect);
  return node != nullptr && !node->is_split() && node->kind == kind ? 1 : 0;
}

const CuNode* find_node(const StructureMap& map, const Rect& rect) {
  check_aligned(map, rect);
  const std::size_t ctu = ctu_index_of(map, rect);
  return locate(map.ctus[ctu], map.ctu_rect(ctu), rect);
}

void replace_node(StructureMap& map, const Rect& rect, CuNode node) {
  check_aligned(map, rect);
  const std::size_t ctu = ctu_index_of(map, rect);
  CuNode* target = locate(map.ctus[ctu], map.ctu_rect(ctu), rect);
  if (target == nullptr) throw std::invalid_argument("no node covers the rect exactly");
  *target = std::move(node);
}

void write_tree_bits(BitWriter& out, const CuNode& node, int depth) {
  if (depth == 3) {
    out.put_bit(node.kind == CuKind::S8_NxN);
    return;
  }
  out.put_bit(node.is_split());
  if (node.is_split())
    for (const auto& c : node.children) write_tree_bits(out, c, depth + 1);
}

CuNode read_tree_bits(BitReader& in, int depth) {
  if (depth == 3) return CuNode::leaf(in.get_bit() ? CuKind::S8_NxN : CuKind::S8_2Nx2N);
  if (!in.get_bit()) return CuNode::leaf(kind_at_depth(depth));
  CuNode node{kind_at_depth(depth), {}};
  node.children.reserve(4);
  for (int i = 0; i < 4; ++i) node.children.push_back(read_tree_bits(in, depth + 1));
  return node;
}

namespace {

constexpr std::uint8_t kSideInfoMagic[4] = {'C', 'U', 'S', 'I'};
constexpr std::uint8_t kSideInfoVersion = 1;

}  // namespace

std::vector<std::uint8_t> serialize_structures(std::span<const StructureMap> maps) {
  if (maps.empty()) throw std::invalid_argument("no structure maps to serialize");
  const int w = maps.front().width, h = maps.front().height;
  if (w <= 0 || h <= 0 || w > 0xFFFF || h > 0xFFFF) throw std::invalid_argument("dimensions do not fit u16");
  BitWriter out;
  out.put_bytes(kSideInfoMagic);
  out.put_u8(kSideInfoVersion);
  out.put_u16(static_cast<std::uint16_t>(w));
  out.put_u16(static_cast<std::uint16_t>(h));
  for (const auto& map : maps) {
    validate(map);
    if (map.width != w || map.height != h) throw std::invalid_argument("structure maps differ in size");
    for (const auto& ctu : map.ctus) write_tree_bits(out, ctu);
    out.align();
  }
  return out.take();
}

std::vector<std::uint8_t> serialize_structure(const StructureMap& map) {
  return serialize_structures(std::span<const StructureMap>(&map, 1));
}

std::vector<StructureMap> parse_structures(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 9) throw FormatError("truncated side info");
  if (!std::equal(std::begin(kSideInfoMagic), std::end(kSideInfoMagic), bytes.begin()))
    throw FormatError("bad magic");
  BitReader in(bytes);
  in.get_bits(32);
  if (in.get_u8() != kSideInfoVersion) throw FormatError("unsupported side info version");
  const int w = in.get_u16(), h = in.get_u16();
  if (w == 0 || h == 0) throw FormatError("side info has zero dimensions");
  std::vector<StructureMap> maps;
  while (!in.at_end()) {
    StructureMap map(w, h);
    for (auto& ctu : map.ctus) ctu = read_tree_bits(in);
    in.align();
    maps.push_back(std::move(map));
  }
  if (maps.empty()) throw FormatError("truncated side info");
  return maps;
}

StructureMap parse_structure(std::span<const std::uint8_t> bytes) {
  auto maps = parse_structures(bytes);
  if (maps.size() != 1) throw FormatError("expected a single frame of side info");
  return std::move(maps.front());
}

}  // namespace custego
