#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace custego {

inline constexpr int kCtuSize = 64;

/// Coding-unit shape. S8_NxN is an 8x8 CU predicted as four 4x4 partitions.
enum class CuKind : std::uint8_t { S64, S32, S16, S8_2Nx2N, S8_NxN };

inline constexpr CuKind kCarrierKinds[] = {CuKind::S32, CuKind::S16, CuKind::S8_2Nx2N, CuKind::S8_NxN};

int kind_size(CuKind kind);
/// Quad-tree depth of the node holding a CU of this kind (0..3).
int tree_depth(CuKind kind);
/// Kind of an unsplit node at tree depth 0..3 (2Nx2N at depth 3).
CuKind kind_at_depth(int depth);
std::string_view kind_name(CuKind kind);

struct Rect {
  int x = 0;
  int y = 0;
  int size = 0;

  bool operator==(const Rect&) const = default;
  bool intersects(const Rect& o) const {
    return x < o.x + o.size && o.x < x + size && y < o.y + o.size && o.y < y + size;
  }
  bool contains(const Rect& o) const {
    return o.x >= x && o.y >= y && o.x + o.size <= x + size && o.y + o.size <= y + size;
  }
  Rect child(int i) const {
    const int h = size / 2;
    return {x + (i & 1) * h, y + (i >> 1) * h, h};
  }
};

/// Quad-tree node. A node is split iff it has exactly four children
/// (top-left, top-right, bottom-left, bottom-right). `kind` is meaningful
/// for leaves only; split nodes keep the kind of their depth.
struct CuNode {
  CuKind kind = CuKind::S64;
  std::vector<CuNode> children;

  bool is_split() const { return !children.empty(); }

  static CuNode leaf(CuKind kind) { return {kind, {}}; }
  /// Splits a node at `depth` into four unsplit children.
  static CuNode split_uniform(int depth);

  bool operator==(const CuNode&) const = default;
};

/// Per-frame forest of CTU quad-trees in CTU raster order.
struct StructureMap {
  int width = 0;
  int height = 0;
  std::vector<CuNode> ctus;

  StructureMap() = default;
  /// All-S64 map for the given dimensions.
  StructureMap(int w, int h);

  int ctus_x() const { return (width + kCtuSize - 1) / kCtuSize; }
  int ctus_y() const { return (height + kCtuSize - 1) / kCtuSize; }
  Rect ctu_rect(std::size_t index) const {
    const int cx = static_cast<int>(index % static_cast<std::size_t>(ctus_x()));
    const int cy = static_cast<int>(index / static_cast<std::size_t>(ctus_x()));
    return {cx * kCtuSize, cy * kCtuSize, kCtuSize};
  }

  bool operator==(const StructureMap&) const = default;
};

/// Reference to one CU: its frame, rect, kind and zig-zag scan position.
struct CuRef {
  int frame = 0;
  Rect rect;
  CuKind kind = CuKind::S64;
  int scan_pos = 0;

  bool operator==(const CuRef&) const = default;
};

/// Throws std::invalid_argument unless every node obeys the depth/kind rules.
void validate(const StructureMap& map);

/// Visits leaves in coding order (CTU raster, z-order inside a CTU).
void for_each_leaf(const StructureMap& map, const std::function<void(const Rect&, CuKind)>& fn);

/// Leaves in z-order. S64 leaves are skipped unless `include64`.
std::vector<CuRef> zigzag_scan(const StructureMap& map, bool include64, int frame_index = 0);

/// MD of a carrier kind: S32 1, S16 2, S8_2Nx2N 3, S8_NxN 4. Rejects S64.
int max_depth(CuKind kind);
/// Like max_depth, with S64 counted as 0.
int leaf_depth(CuKind kind);

/// Maximum leaf depth over all leaves intersecting `rect`.
int region_max_depth(const StructureMap& map, const Rect& rect);

/// |MD(orig) - region_max_depth(recompressed, orig.rect)|.
int mdd(const CuRef& orig, const StructureMap& recompressed);

/// 1 iff `rect` in `b` is exactly one leaf of `kind`.
int structure_equal_region(const StructureMap& a, const StructureMap& b, const Rect& rect, CuKind kind);

/// Node whose area is exactly `rect`, or nullptr.
const CuNode* find_node(const StructureMap& map, const Rect& rect);
/// Replaces the node covering exactly `rect`. Throws if no such node exists.
void replace_node(StructureMap& map, const Rect& rect, CuNode node);

// Side-info ("CUSI") format: magic, version, width/height u16 BE, then per
// frame a pre-order bit stream (split bit at depths 0..2, PU bit at depth 3)
// padded to a byte boundary.
std::vector<std::uint8_t> serialize_structure(const StructureMap& map);
std::vector<std::uint8_t> serialize_structures(std::span<const StructureMap> maps);
StructureMap parse_structure(std::span<const std::uint8_t> bytes);
std::vector<StructureMap> parse_structures(std::span<const std::uint8_t> bytes);

class BitWriter;
class BitReader;
void write_tree_bits(BitWriter& out, const CuNode& node, int depth = 0);
CuNode read_tree_bits(BitReader& in, int depth = 0);

}  // namespace custego
