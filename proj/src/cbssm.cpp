#include "custego/cbssm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "custego/stego.hpp"

namespace custego {

namespace {

std::size_t kind_slot(CuKind kind) {
  switch (kind) {
    case CuKind::S32: return 0;
    case CuKind::S16: return 1;
    case CuKind::S8_2Nx2N: return 2;
    case CuKind::S8_NxN: return 3;
    case CuKind::S64: break;
  }
  throw std::invalid_argument("64x64 CUs are not counted");
}

}  // namespace

BlockCounts count_blocks(const StructureMap& map) {
  BlockCounts c;
  for_each_leaf(map, [&](const Rect&, CuKind k) {
    if (k != CuKind::S64) ++c.n[kind_slot(k)];
  });
  return c;
}

double bqum(long n, long n_rec) {
  if (n < 0 || n_rec < 0) throw std::invalid_argument("block counts must be non-negative");
  if (n == 0 && n_rec == 0) return 1.0;
  return std::exp(-static_cast<double>(std::labs(n - n_rec)) / static_cast<double>(std::max(n, 1L)));
}

double bsim(const StructureMap& orig, const StructureMap& rec, CuKind t) {
  long total = 0, kept = 0;
  for_each_leaf(orig, [&](const Rect& r, CuKind k) {
    if (k != t) return;
    ++total;
    kept += structure_equal_region(orig, rec, r, t);
  });
  return total == 0 ? 1.0 : static_cast<double>(kept) / static_cast<double>(total);
}

std::array<double, 8> CbssmFeatureVector::values() const {
  return {bqum[0], bqum[1], bqum[2], bqum[3], bsim[0], bsim[1], bsim[2], bsim[3]};
}

double CbssmFeatureVector::mean_bsim() const { return (bsim[0] + bsim[1] + bsim[2] + bsim[3]) / 4.0; }

CbssmFeatureVector frame_features(const StructureMap& orig, const StructureMap& rec) {
  if (orig.width != rec.width || orig.height != rec.height) throw std::invalid_argument("maps differ in size");
  const BlockCounts a = count_blocks(orig), b = count_blocks(rec);
  CbssmFeatureVector f;
  for (std::size_t i = 0; i < 4; ++i) {
    f.bqum[i] = bqum(a[i], b[i]);
    f.bsim[i] = bsim(orig, rec, kCarrierKinds[i]);
  }
  return f;
}

CbssmFeatureVector average(std::span<const CbssmFeatureVector> vectors) {
  if (vectors.empty()) throw std::invalid_argument("nothing to average");
  CbssmFeatureVector out;
  out.bqum.fill(0);
  out.bsim.fill(0);
  for (const auto& v : vectors)
    for (std::size_t i = 0; i < 4; ++i) {
      out.bqum[i] += v.bqum[i];
      out.bsim[i] += v.bsim[i];
    }
  const double n = static_cast<double>(vectors.size());
  for (std::size_t i = 0; i < 4; ++i) {
    out.bqum[i] /= n;
    out.bsim[i] /= n;
  }
  return out;
}

std::vector<CbssmFeatureVector> frame_feature_vectors(std::span<const std::uint8_t> bitstream,
                                                      std::optional<Qp> qp, int n_frames) {
  const DecodedVideo video = read_bitstream(bitstream);
  if (n_frames <= 0 || static_cast<std::size_t>(n_frames) > video.frames.size())
    throw std::invalid_argument("frame count exceeds the stream");
  const Qp q = qp.value_or(video.qp);
  std::vector<CbssmFeatureVector> out;
  for (int i = 0; i < n_frames; ++i) {
    const auto& f = video.frames[static_cast<std::size_t>(i)];
    out.push_back(frame_features(f.coded.structure, recompress_structure(f.recon, q)));
  }
  return out;
}

CbssmFeatureVector feature_vector(std::span<const std::uint8_t> bitstream, std::optional<Qp> qp, int n_frames) {
  const auto per_frame = frame_feature_vectors(bitstream, qp, n_frames);
  return average(per_frame);
}

std::string features_csv_header() {
  return "video,frame,bqum32,bqum16,bqum8_2n,bqum8_n,bsim32,bsim16,bsim8_2n,bsim8_n\n";
}

std::string features_csv_row(const std::string& video, int frame, const CbssmFeatureVector& f) {
  std::string row = video + "," + std::to_string(frame);
  char buf[32];
  for (double v : f.values()) {
    std::snprintf(buf, sizeof buf, ",%.6f", v);
    row += buf;
  }
  return row + "\n";
}

LipschitzEstimate estimate_lipschitz(std::span<const MarginSample> samples) {
  if (samples.empty()) throw std::invalid_argument("empty margin sample");
  LipschitzEstimate est;

  std::vector<double> ratios;
  for (const auto& s : samples)
    if (s.changed && s.margin.epsilon > 0) ratios.push_back(s.margin.delta / s.margin.epsilon);
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    const std::size_t n = ratios.size();
    const double median = n % 2 ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
    est.estimable = true;
    est.l_j = median / 2.0;

    std::size_t changed_above = 0, unchanged = 0, unchanged_above = 0;
    for (const auto& s : samples) {
      if (!s.changed) ++unchanged;
      if (s.margin.delta > 2.0 * est.l_j * s.margin.epsilon) {
        ++est.above_bound;
        if (s.changed) ++changed_above;
        else ++unchanged_above;
      }
    }
    est.unchanged_separated =
        unchanged == 0 ? 0.0 : static_cast<double>(unchanged_above) / static_cast<double>(unchanged);
    est.separated_fraction = static_cast<double>(est.above_bound) / static_cast<double>(samples.size());
    est.change_rate_above_bound =
        est.above_bound == 0 ? 0.0 : static_cast<double>(changed_above) / static_cast<double>(est.above_bound);
  }

  std::map<int, FrameMarginMeans> frames;
  for (const auto& s : samples) {
    auto& f = frames[s.margin.cu.frame];
    f.frame = s.margin.cu.frame;
    if (s.changed) {
      ++f.n_changed;
      f.changed_mean += s.margin.delta;
    } else {
      ++f.n_unchanged;
      f.unchanged_mean += s.margin.delta;
    }
  }
  for (auto& [idx, f] : frames) {
    if (f.n_changed) f.changed_mean /= static_cast<double>(f.n_changed);
    if (f.n_unchanged) f.unchanged_mean /= static_cast<double>(f.n_unchanged);
    est.per_frame.push_back(f);
  }
  return est;
}

std::vector<MarginSample> margin_samples(const Frame& source, const FrameEncoding& encoding,
                                         const StructureMap& recompressed, int frame_index) {
  std::vector<MarginSample> out;
  for (const auto& m : rdo_margins(source, encoding.coded, encoding.recon, frame_index)) {
    const bool kept = structure_equal_region(encoding.coded.structure, recompressed, m.cu.rect, m.cu.kind) == 1;
    out.push_back({m, !kept});
  }
  return out;
}

RestorationReport summarize_restoration(std::span<const MarginSample> samples,
                                        std::span<const CbssmFeatureVector> features) {
  RestorationReport report;
  report.cus = samples.size();
  std::size_t kept = 0;
  for (const auto& s : samples) kept += s.changed ? 0 : 1;
  report.fraction_structure_unchanged =
      samples.empty() ? 1.0 : static_cast<double>(kept) / static_cast<double>(samples.size());
  if (!features.empty()) {
    double bsim_sum = 0;
    for (const auto& f : features) bsim_sum += f.mean_bsim();
    report.mean_bsim = bsim_sum / static_cast<double>(features.size());
  }
  if (!samples.empty()) report.lipschitz = estimate_lipschitz(samples);
  return report;
}

RestorationReport analyze_restoration(std::span<const Frame> frames, Qp qp) {
  if (frames.empty()) throw std::invalid_argument("no frames to analyze");
  std::vector<MarginSample> samples;
  std::vector<CbssmFeatureVector> features;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame source = pad_to_ctu(frames[i]);
    const FrameEncoding enc = encode_frame(source, qp);
    const StructureMap rec = recompress_structure(enc.recon, qp);
    features.push_back(frame_features(enc.coded.structure, rec));
    auto s = margin_samples(source, enc, rec, static_cast<int>(i));
    samples.insert(samples.end(), s.begin(), s.end());
  }
  return summarize_restoration(samples, features);
}

std::string restoration_json(const RestorationReport& r) {
  nlohmann::json j;
  j["cus"] = r.cus;
  j["fraction_structure_unchanged"] = r.fraction_structure_unchanged;
  j["mean_bsim"] = r.mean_bsim;
  if (r.lipschitz.estimable) {
    j["l_j"] = r.lipschitz.l_j;
    j["bound_factor"] = 2.0 * r.lipschitz.l_j;
    j["separated_fraction"] = r.lipschitz.separated_fraction;
    j["unchanged_separated_fraction"] = r.lipschitz.unchanged_separated;
    j["change_rate_above_bound"] = r.lipschitz.change_rate_above_bound;
  } else {
    j["l_j"] = nullptr;
    j["note"] = "no changed CUs; bound not estimable";
  }
  auto& series = j["per_frame"] = nlohmann::json::array();
  for (const auto& f : r.lipschitz.per_frame) {
    nlohmann::json row{{"frame", f.frame}, {"n_changed", f.n_changed}, {"n_unchanged", f.n_unchanged}};
    row["changed_mean_delta"] = f.n_changed ? nlohmann::json(f.changed_mean) : nlohmann::json(nullptr);
    row["unchanged_mean_delta"] = f.n_unchanged ? nlohmann::json(f.unchanged_mean) : nlohmann::json(nullptr);
    series.push_back(row);
  }
  return j.dump(2) + "\n";
}

}  // namespace custego
