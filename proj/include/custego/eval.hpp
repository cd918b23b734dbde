#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "custego/cbssm.hpp"
#include "custego/frame_io.hpp"
#include "custego/stego.hpp"

namespace custego {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(255^2 / MSE), capped at 99 dB for identical frames.
double psnr(const Frame& a, const Frame& b);
/// Mean of per-frame PSNR.
double psnr(std::span<const Frame> a, std::span<const Frame> b);

/// 1000 |psnr_ori - psnr_stg| / capacity.
double delta_psnr(double psnr_ori, double psnr_stg, double capacity);
/// 1000 |bit_stg - bit_ori| / (capacity * bit_ori).
double bir(double bit_ori, double bit_stg, double capacity);
/// Bits embeddable for a 1% bitrate increase; nullopt when bir is 0 (unbounded).
std::optional<double> capacity_per_1pct(double bir);

struct MetricsReport {
  double psnr_ori = 0;
  double psnr_stg = 0;
  std::size_t capacity = 0;
  double delta_psnr = 0;
  double bir = 0;
  std::optional<double> capacity_per_1pct;
};

/// Zero capacity yields delta_psnr = bir = 0 and an unbounded capacity_per_1pct.
MetricsReport measure(const CoverAnalysis& cover, const EmbedResult& stego, std::span<const Frame> sources,
                      std::size_t capacity);

/// Forced-8x8 comparison embedder: each message bit 1 turns the next non-8x8 CU
/// into 8x8 leaves, bit 0 leaves it alone. alpha spreads the message over frames.
StegoPackage baseline_tew_embed(const VideoSequence& video, std::span<const std::uint8_t> message, Qp qp,
                                double alpha = 1.0);

struct LabeledFeatures {
  std::array<double, 8> x{};
  int label = 0;  // 0 cover, 1 stego
};

struct ClassifierModel {
  std::array<double, 8> weights{};
  double bias = 0;
  std::array<double, 8> mean{};
  std::array<double, 8> scale{};
  std::uint64_t seed = 0;
  int repeats = 0;
  double split_ratio = 0.5;

  double probability(const std::array<double, 8>& x) const;
  int predict(const std::array<double, 8>& x) const { return probability(x) >= 0.5 ? 1 : 0; }
};

struct DetectorOptions {
  std::uint64_t seed = 1;
  int repeats = 100;
  int iterations = 500;
  double learning_rate = 0.5;
};

struct DetectorResult {
  ClassifierModel model;  // fitted in the last repeat
  double mean_accuracy = 0;
  std::vector<double> accuracies;
};

/// Logistic regression on standardized features, averaged over seeded
/// stratified 1:1 train/test splits.
DetectorResult train_detector(std::span<const LabeledFeatures> samples, const DetectorOptions& options = {});

struct CorpusEntry {
  std::string cls;
  VideoSequence video;
};

/// `count` synthetic clips named synth00, synth01, ...
std::vector<CorpusEntry> synthetic_corpus(int count, int width, int height, int frames, std::uint64_t seed = 1);
/// Every .y4m file in `dir`, class "user", sorted by name.
std::vector<CorpusEntry> load_corpus_dir(const std::filesystem::path& dir);

struct ExperimentConfig {
  std::vector<int> qps{26, 32, 38};
  std::vector<double> payloads{0.1, 0.3, 0.5};
  std::vector<Scheme> schemes{Scheme::full, Scheme::only8x8, Scheme::tew};
  int feature_frames = 10;
  std::uint64_t seed = 1;
  int repeats = 100;
  int jobs = 1;
};

struct ExperimentRow {
  std::string video;
  std::string cls;
  int qp = 0;
  double payload = 0;
  Scheme scheme = Scheme::full;
  MetricsReport metrics;
  CbssmFeatureVector cover_features;
  CbssmFeatureVector stego_features;
};

struct DetectionRow {
  int qp = 0;
  double payload = 0;
  Scheme scheme = Scheme::full;
  double accuracy = 0;
};

struct ExperimentResults {
  std::vector<ExperimentRow> rows;  // video-major, then qp, payload, scheme
  std::vector<DetectionRow> detection;
  std::map<int, RestorationReport> restoration;  // by qp, over first frames
};

ExperimentResults run_experiment(std::span<const CorpusEntry> corpus, const ExperimentConfig& config);

/// Corpus mean of `metric` over rows of one grid point.
double corpus_mean(const ExperimentResults& results, int qp, double payload, Scheme scheme,
                   double (*metric)(const ExperimentRow&));
std::optional<double> detection_accuracy(const ExperimentResults& results, int qp, double payload, Scheme scheme);

/// delta_psnr.csv, bir.csv, capacity.csv, capacity_per_1pct.csv, psnr_stg.csv,
/// mean_bsim.csv, detection.csv, summary.json and margins_qp<qp>.dat.
void write_experiment(const ExperimentResults& results, const std::filesystem::path& out_dir);
std::string experiment_summary_json(const ExperimentResults& results);

}  // namespace custego
