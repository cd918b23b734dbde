#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "custego/codec.hpp"
#include "custego/quadtree.hpp"

namespace custego {

/// Leaf counts per carrier kind, in kCarrierKinds order (32, 16, 8 2Nx2N, 8 NxN).
struct BlockCounts {
  std::array<long, 4> n{};

  long operator[](std::size_t i) const { return n[i]; }
  bool operator==(const BlockCounts&) const = default;
};

BlockCounts count_blocks(const StructureMap& map);

/// exp(-|n - n_rec| / max(n, 1)); 1 when both are zero.
double bqum(long n, long n_rec);

/// Fraction of `t` leaves of `orig` that are still a single `t` leaf in `rec`.
/// 1 when `orig` has no leaf of kind `t`.
double bsim(const StructureMap& orig, const StructureMap& rec, CuKind t);

struct CbssmFeatureVector {
  std::array<double, 4> bqum{1, 1, 1, 1};
  std::array<double, 4> bsim{1, 1, 1, 1};

  std::array<double, 8> values() const;
  double mean_bsim() const;
  bool operator==(const CbssmFeatureVector&) const = default;
};

CbssmFeatureVector frame_features(const StructureMap& orig, const StructureMap& rec);
CbssmFeatureVector average(std::span<const CbssmFeatureVector> vectors);

/// Per-frame features of the first `n_frames` frames of a CUSG stream.
/// Recompression uses `qp` if given, else the stream's own qp.
std::vector<CbssmFeatureVector> frame_feature_vectors(std::span<const std::uint8_t> bitstream,
                                                      std::optional<Qp> qp, int n_frames);
CbssmFeatureVector feature_vector(std::span<const std::uint8_t> bitstream, std::optional<Qp> qp, int n_frames);

/// CSV with header video,frame,bqum32,...,bsim8_n.
std::string features_csv_header();
std::string features_csv_row(const std::string& video, int frame, const CbssmFeatureVector& f);

struct MarginSample {
  RdoMargin margin;
  bool changed = false;
};

struct FrameMarginMeans {
  int frame = 0;
  std::size_t n_changed = 0;
  std::size_t n_unchanged = 0;
  double changed_mean = 0;    // meaningful when n_changed > 0
  double unchanged_mean = 0;  // meaningful when n_unchanged > 0
};

struct LipschitzEstimate {
  bool estimable = false;  // false when no changed CU has epsilon > 0
  double l_j = 0;
  /// Fraction of all CUs with delta > 2 * L_J * epsilon.
  double separated_fraction = 0;
  /// Fraction of unchanged CUs with delta > 2 * L_J * epsilon.
  double unchanged_separated = 0;
  std::size_t above_bound = 0;
  /// Structure-change rate among CUs above the bound.
  double change_rate_above_bound = 0;
  std::vector<FrameMarginMeans> per_frame;
};

/// L_J = median(delta / epsilon over changed CUs) / 2. Throws on an empty sample.
LipschitzEstimate estimate_lipschitz(std::span<const MarginSample> samples);

struct RestorationReport {
  std::size_t cus = 0;
  double fraction_structure_unchanged = 1;
  double mean_bsim = 1;
  LipschitzEstimate lipschitz;
};

/// Encode each frame, recompress the reconstruction and relate each CU's
/// RD margin to whether its structure survived.
RestorationReport analyze_restoration(std::span<const Frame> frames, Qp qp);
RestorationReport summarize_restoration(std::span<const MarginSample> samples,
                                        std::span<const CbssmFeatureVector> features);
std::vector<MarginSample> margin_samples(const Frame& source, const FrameEncoding& encoding,
                                         const StructureMap& recompressed, int frame_index);

std::string restoration_json(const RestorationReport& report);

}  // namespace custego
