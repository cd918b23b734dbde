#include "custego/stego.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "custego/errors.hpp"

namespace custego {

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::full: return "full";
    case Scheme::only8x8: return "8x8";
    case Scheme::tew: return "tew";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "full") return Scheme::full;
  if (name == "8x8" || name == "only8x8") return Scheme::only8x8;
  if (name == "tew") return Scheme::tew;
  throw std::invalid_argument("unknown scheme " + std::string(name));
}

CarrierSequence map_full(const StructureMap& map, int frame) {
  CarrierSequence seq;
  seq.frame = frame;
  seq.carriers = zigzag_scan(map, false, frame);
  for (const auto& c : seq.carriers) seq.bits.push_back(c.kind == CuKind::S8_NxN ? 1 : 0);
  return seq;
}

CarrierSequence map_8x8(const StructureMap& map, int frame) {
  CarrierSequence seq;
  seq.frame = frame;
  for (const auto& c : zigzag_scan(map, false, frame)) {
    if (c.kind != CuKind::S8_2Nx2N && c.kind != CuKind::S8_NxN) continue;
    CuRef ref = c;
    ref.scan_pos = static_cast<int>(seq.carriers.size());
    seq.carriers.push_back(ref);
    seq.bits.push_back(c.kind == CuKind::S8_NxN ? 1 : 0);
  }
  return seq;
}

namespace {

// Carriers of the forced-8x8 baseline: every CU that is not already 8x8.
CarrierSequence map_tew(const StructureMap& map, int frame) {
  CarrierSequence seq;
  seq.frame = frame;
  for (const auto& c : zigzag_scan(map, true, frame)) {
    if (kind_size(c.kind) == 8) continue;
    CuRef ref = c;
    ref.scan_pos = static_cast<int>(seq.carriers.size());
    seq.carriers.push_back(ref);
    seq.bits.push_back(0);
  }
  return seq;
}

CarrierSequence map_for(Scheme scheme, const StructureMap& map, int frame) {
  switch (scheme) {
    case Scheme::full: return map_full(map, frame);
    case Scheme::only8x8: return map_8x8(map, frame);
    case Scheme::tew: return map_tew(map, frame);
  }
  return {};
}

CuNode all_8x8(int depth) {
  if (depth == 3) return CuNode::leaf(CuKind::S8_2Nx2N);
  CuNode n{kind_at_depth(depth), {}};
  for (int i = 0; i < 4; ++i) n.children.push_back(all_8x8(depth + 1));
  return n;
}

}  // namespace

StructureMap recompress_structure(const Frame& recon, Qp qp) { return encode_frame(recon, qp).coded.structure; }

StructureMap recompress_structure(const CodedFrame& coded, Qp qp) {
  return recompress_structure(reconstruct(coded), qp);
}

CuNode flipped_structure(CuKind kind) {
  switch (kind) {
    case CuKind::S32: return CuNode::split_uniform(1);
    case CuKind::S16: return CuNode::split_uniform(2);
    case CuKind::S8_2Nx2N: return CuNode::leaf(CuKind::S8_NxN);
    case CuKind::S8_NxN: return CuNode::leaf(CuKind::S8_2Nx2N);
    case CuKind::S64: break;
  }
  throw std::invalid_argument("64x64 CUs are never carriers");
}

double dr_value(double j_current, double j_flipped) {
  if (j_current == 0.0) return 0.0;
  return std::abs(j_current - j_flipped) / j_current;
}

double dr(const Frame& source, const FrameEncoding& encoding, const CuRef& cu) {
  const CodedLeaf* leaf = nullptr;
  for (const auto& l : encoding.coded.leaves)
    if (l.rect == cu.rect) {
      leaf = &l;
      break;
    }
  if (leaf == nullptr || leaf->kind != cu.kind) throw std::invalid_argument("CU is not a coded leaf");
  const RdCost flipped =
      evaluate_structure(source, encoding.recon, cu.rect, flipped_structure(cu.kind), encoding.coded.qp);
  return dr_value(leaf->cost.j, flipped.j);
}

DistortionCase classify_mdd(int mdd) {
  if (mdd < 0) throw std::invalid_argument("negative MDD");
  return mdd == 0 ? DistortionCase::case1 : mdd == 1 ? DistortionCase::case2 : DistortionCase::case3;
}

double three_level_cost(int md, double dr, int mdd) {
  switch (classify_mdd(mdd)) {
    case DistortionCase::case1: return md * dr;
    case DistortionCase::case2: return dr;
    case DistortionCase::case3: return dr / mdd;
  }
  return dr;
}

std::vector<double> ThreeLevelCosts::costs() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.cost);
  return out;
}

ThreeLevelCosts three_level_costs(const Frame& source, const FrameEncoding& encoding,
                                  const StructureMap& recompressed, const CarrierSequence& carriers) {
  // Leaf lookup by coding order; carriers are a subsequence of it.
  ThreeLevelCosts out;
  std::size_t leaf = 0;
  const auto& leaves = encoding.coded.leaves;
  for (const auto& cu : carriers.carriers) {
    while (leaf < leaves.size() && !(leaves[leaf].rect == cu.rect)) ++leaf;
    if (leaf == leaves.size()) throw std::invalid_argument("carriers do not come from this encoding");
    const RdCost flipped =
        evaluate_structure(source, encoding.recon, cu.rect, flipped_structure(cu.kind), encoding.coded.qp);
    CarrierCost c;
    c.md = max_depth(cu.kind);
    c.mdd = mdd(cu, recompressed);
    c.which = classify_mdd(c.mdd);
    c.dr = dr_value(leaves[leaf].cost.j, flipped.j);
    c.cost = three_level_cost(c.md, c.dr, c.mdd);
    out.entries.push_back(c);
  }
  return out;
}

StructureMap apply_modifications(const StructureMap& map, const CarrierSequence& carriers,
                                 std::span<const std::uint8_t> stego_bits) {
  if (stego_bits.size() != carriers.q()) throw std::invalid_argument("stego sequence length differs from carriers");
  StructureMap out = map;
  for (std::size_t j = 0; j < carriers.q(); ++j) {
    const std::uint8_t c = carriers.bits[j] & 1u, s = stego_bits[j] & 1u;
    if (c == s) continue;
    const CuRef& cu = carriers.carriers[j];
    if (c == 0 && cu.kind == CuKind::S8_NxN) throw std::invalid_argument("carrier bit inconsistent with CU kind");
    if (c == 1 && cu.kind != CuKind::S8_NxN) throw std::invalid_argument("carrier bit inconsistent with CU kind");
    replace_node(out, cu.rect, flipped_structure(cu.kind));
  }
  return out;
}

std::string header_to_json(const EmbedHeader& h) {
  nlohmann::json j;
  j["scheme"] = scheme_name(h.scheme);
  j["alpha"] = h.alpha;
  j["qp"] = h.qp;
  j["h"] = h.stc.h;
  std::vector<int> hhat;
  for (int r = 0; r < h.stc.h; ++r) hhat.push_back(static_cast<int>((h.stc.hhat >> r) & 1u));
  j["hhat"] = hhat;
  j["seed"] = h.stc.seed;
  j["message_len"] = h.message_len;
  j["carrier_counts"] = h.carrier_counts;
  return j.dump(2) + "\n";
}

EmbedHeader header_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EmbedHeader h;
    h.scheme = parse_scheme(j.at("scheme").get<std::string>());
    h.alpha = j.at("alpha").get<double>();
    h.qp = j.at("qp").get<int>();
    h.stc.h = j.at("h").get<int>();
    const auto hhat = j.at("hhat").get<std::vector<int>>();
    if (static_cast<int>(hhat.size()) != h.stc.h) throw FormatError("hhat length differs from h");
    h.stc.hhat = 0;
    for (std::size_t r = 0; r < hhat.size(); ++r)
      if (hhat[r]) h.stc.hhat |= 1u << r;
    h.stc.seed = j.at("seed").get<std::uint64_t>();
    h.message_len = j.at("message_len").get<std::size_t>();
    h.carrier_counts = j.at("carrier_counts").get<std::vector<std::size_t>>();
    validate(h.stc);
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed embedding header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed embedding header: ") + e.what());
  }
}

std::vector<std::size_t> message_schedule(double alpha, std::span<const std::size_t> carrier_counts,
                                          std::size_t message_len) {
  std::vector<std::size_t> out;
  std::size_t remaining = message_len;
  for (auto q : carrier_counts) {
    const auto cap = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(q)));
    const std::size_t take = std::min(cap, remaining);
    out.push_back(take);
    remaining -= take;
  }
  return out;
}

std::size_t schedule_capacity(double alpha, std::span<const std::size_t> carrier_counts) {
  std::size_t total = 0;
  for (auto q : carrier_counts) total += static_cast<std::size_t>(std::floor(alpha * static_cast<double>(q)));
  return total;
}

std::vector<std::size_t> CoverAnalysis::carrier_counts() const {
  std::vector<std::size_t> out;
  for (const auto& f : frames) out.push_back(f.carriers.q());
  return out;
}

std::uint64_t CoverAnalysis::cover_bits() const {
  std::uint64_t total = 0;
  for (const auto& f : frames) total += f.cover.coded.bits();
  return total;
}

CoverAnalysis with_scheme(const CoverAnalysis& base, Scheme scheme) {
  CoverAnalysis out = base;
  out.scheme = scheme;
  for (std::size_t i = 0; i < out.frames.size(); ++i) {
    auto& f = out.frames[i];
    f.carriers = map_for(scheme, f.cover.coded.structure, static_cast<int>(i));
    f.costs = scheme == Scheme::tew ? ThreeLevelCosts{}
                                    : three_level_costs(f.source, f.cover, f.recompressed, f.carriers);
  }
  return out;
}

CoverAnalysis analyze_cover(const VideoSequence& video, Qp qp, Scheme scheme) {
  if (video.frames.empty()) throw std::invalid_argument("empty video");
  CoverAnalysis out;
  out.scheme = scheme;
  out.qp = qp;
  std::vector<CodedFrame> coded;
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    FrameAnalysis f;
    f.source = pad_to_ctu(video.frames[i]);
    f.cover = encode_frame(f.source, qp);
    f.recompressed = recompress_structure(f.cover.recon, qp);
    f.carriers = map_for(scheme, f.cover.coded.structure, static_cast<int>(i));
    if (scheme != Scheme::tew) f.costs = three_level_costs(f.source, f.cover, f.recompressed, f.carriers);
    coded.push_back(f.cover.coded);
    out.frames.push_back(std::move(f));
  }
  out.cover_bitstream = write_bitstream(coded);
  return out;
}

namespace {

std::vector<std::uint8_t> tew_modify(const CarrierSequence& carriers, std::span<const std::uint8_t> bits,
                                     StructureMap& map) {
  std::vector<std::uint8_t> seq(carriers.q(), 0);
  for (std::size_t j = 0; j < bits.size(); ++j) {
    seq[j] = bits[j] & 1u;
    if (seq[j]) replace_node(map, carriers.carriers[j].rect, all_8x8(tree_depth(carriers.carriers[j].kind)));
  }
  return seq;
}

}  // namespace

EmbedResult embed(const CoverAnalysis& cover, std::span<const std::uint8_t> message, const EmbedConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw std::invalid_argument("payload alpha must be in (0, 1]");
  if (!(config.qp == cover.qp) || config.scheme != cover.scheme)
    throw std::invalid_argument("cover analysis was built for a different qp or scheme");
  validate(config.stc);

  const auto counts = cover.carrier_counts();
  const std::size_t capacity = schedule_capacity(config.alpha, counts);
  if (message.size() > capacity)
    throw CapacityError("message needs " + std::to_string(message.size()) + " bits, capacity is " +
                        std::to_string(capacity));

  EmbedResult result;
  result.package.header = {config.scheme, config.alpha, config.qp.value(), config.stc, message.size(), counts};
  result.message_per_frame = message_schedule(config.alpha, counts, message.size());

  std::vector<CodedFrame> coded;
  std::vector<StructureMap> cover_maps;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < cover.frames.size(); ++i) {
    const auto& f = cover.frames[i];
    const std::size_t m = result.message_per_frame[i];
    const auto chunk = message.subspan(offset, m);
    offset += m;

    StructureMap stego_map = f.cover.coded.structure;
    std::vector<std::uint8_t> seq;
    if (config.scheme == Scheme::tew) {
      seq = tew_modify(f.carriers, chunk, stego_map);
      for (auto b : seq) result.changes += b;
    } else {
      const auto costs = f.costs.costs();
      auto stc = stc_embed(f.carriers.bits, costs, chunk, config.stc);
      result.changes += stc.changes;
      seq = std::move(stc.stego);
      stego_map = apply_modifications(f.cover.coded.structure, f.carriers, seq);
    }

    cover_maps.push_back(f.cover.coded.structure);
    if (stego_map == f.cover.coded.structure) {
      coded.push_back(f.cover.coded);
      result.stego_recon.push_back(f.cover.recon);
    } else {
      auto enc = encode_frame_forced(f.source, cover.qp, stego_map);
      coded.push_back(std::move(enc.coded));
      result.stego_recon.push_back(std::move(enc.recon));
    }
    result.stego_bits += coded.back().bits();
    result.stego_maps.push_back(std::move(stego_map));
    result.stego_sequences.push_back(std::move(seq));
  }
  result.package.bitstream = write_bitstream(coded);
  if (config.scheme != Scheme::only8x8) result.package.side_info = serialize_structures(cover_maps);
  return result;
}

EmbedResult embed(const VideoSequence& video, std::span<const std::uint8_t> message, const EmbedConfig& config) {
  return embed(analyze_cover(video, config.qp, config.scheme), message, config);
}

std::vector<std::uint8_t> bytes_to_bits(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> bits;
  bits.reserve(bytes.size() * 8);
  for (auto b : bytes)
    for (int k = 7; k >= 0; --k) bits.push_back(static_cast<std::uint8_t>((b >> k) & 1u));
  return bits;
}

std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i] & 1u) bytes[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return bytes;
}

std::vector<std::uint8_t> extract(const StegoPackage& package, const VideoSequence* original) {
  const EmbedHeader& h = package.header;
  const DecodedVideo stego = read_bitstream(package.bitstream);
  if (stego.qp.value() != h.qp) throw ExtractionError("header mismatch: qp differs from bitstream");
  if (h.carrier_counts.size() != stego.frames.size())
    throw ExtractionError("header mismatch: frame count differs from bitstream");

  std::vector<StructureMap> originals;
  if (h.scheme != Scheme::only8x8) {
    if (package.side_info) {
      originals = parse_structures(*package.side_info);
    } else if (original != nullptr) {
      for (const auto& f : original->frames) originals.push_back(encode_frame(pad_to_ctu(f), Qp(h.qp)).coded.structure);
    } else {
      throw ExtractionError("missing side info for the " + std::string(scheme_name(h.scheme)) + " scheme");
    }
    if (originals.size() != stego.frames.size()) throw ExtractionError("side info frame count differs from bitstream");
  }

  const auto schedule = message_schedule(h.alpha, h.carrier_counts, h.message_len);
  std::vector<std::uint8_t> message;
  for (std::size_t i = 0; i < stego.frames.size(); ++i) {
    const StructureMap& stego_map = stego.frames[i].coded.structure;
    const int fi = static_cast<int>(i);
    std::vector<std::uint8_t> seq;
    if (h.scheme == Scheme::only8x8) {
      seq = map_8x8(stego_map, fi).bits;
    } else {
      if (originals[i].width != stego_map.width || originals[i].height != stego_map.height)
        throw ExtractionError("side info dimensions differ from bitstream");
      const CarrierSequence carriers = map_for(h.scheme, originals[i], fi);
      seq.resize(carriers.q());
      for (std::size_t j = 0; j < carriers.q(); ++j) {
        const auto& cu = carriers.carriers[j];
        const int changed = 1 - structure_equal_region(originals[i], stego_map, cu.rect, cu.kind);
        seq[j] = static_cast<std::uint8_t>(carriers.bits[j] ^ changed);
      }
    }
    if (seq.size() != h.carrier_counts[i]) throw ExtractionError("header mismatch: carrier count differs");
    if (h.scheme == Scheme::tew) {
      message.insert(message.end(), seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(schedule[i]));
    } else {
      const auto part = stc_extract(seq, schedule[i], h.stc);
      message.insert(message.end(), part.begin(), part.end());
    }
  }
  return message;
}

}  // namespace custego
