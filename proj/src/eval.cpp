#include "custego/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace custego {

double psnr(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("psnr: frame dimensions differ");
  if (a.luma.empty()) throw std::invalid_argument("psnr: empty frame");
  double sse = 0;
  for (std::size_t i = 0; i < a.luma.size(); ++i) {
    const double d = static_cast<double>(a.luma[i]) - static_cast<double>(b.luma[i]);
    sse += d * d;
  }
  if (sse == 0) return kPsnrCap;
  const double mse = sse / static_cast<double>(a.luma.size());
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double psnr(std::span<const Frame> a, std::span<const Frame> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("psnr: frame counts differ");
  double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += psnr(a[i], b[i]);
  return sum / static_cast<double>(a.size());
}

double delta_psnr(double psnr_ori, double psnr_stg, double capacity) {
  if (!(capacity > 0)) throw std::invalid_argument("delta_psnr: capacity must be positive");
  return 1000.0 * std::fabs(psnr_ori - psnr_stg) / capacity;
}

double bir(double bit_ori, double bit_stg, double capacity) {
  if (!(bit_ori > 0) || !(capacity > 0)) throw std::invalid_argument("bir: zero denominator");
  return 1000.0 * std::fabs(bit_stg - bit_ori) / (capacity * bit_ori);
}

std::optional<double> capacity_per_1pct(double b) {
  if (b < 0) throw std::invalid_argument("capacity_per_1pct: negative bir");
  if (b == 0) return std::nullopt;
  return 10.0 / b;
}

namespace {

std::vector<Frame> cropped(std::span<const Frame> frames, const Frame& like) {
  std::vector<Frame> out;
  for (const auto& f : frames) out.push_back(crop(f, like.width, like.height));
  return out;
}

}  // namespace

MetricsReport measure(const CoverAnalysis& cover, const EmbedResult& stego, std::span<const Frame> sources,
                      std::size_t capacity) {
  if (sources.size() != cover.frames.size()) throw std::invalid_argument("measure: frame counts differ");
  std::vector<Frame> cover_recon;
  for (const auto& f : cover.frames) cover_recon.push_back(f.cover.recon);
  MetricsReport r;
  r.psnr_ori = psnr(sources, cropped(cover_recon, sources.front()));
  r.psnr_stg = psnr(sources, cropped(stego.stego_recon, sources.front()));
  r.capacity = capacity;
  if (capacity == 0) return r;
  r.delta_psnr = delta_psnr(r.psnr_ori, r.psnr_stg, static_cast<double>(capacity));
  r.bir = bir(static_cast<double>(cover.cover_bits()), static_cast<double>(stego.stego_bits),
              static_cast<double>(capacity));
  r.capacity_per_1pct = capacity_per_1pct(r.bir);
  return r;
}

StegoPackage baseline_tew_embed(const VideoSequence& video, std::span<const std::uint8_t> message, Qp qp,
                                double alpha) {
  return embed(video, message, {Scheme::tew, alpha, qp, {}}).package;
}

double ClassifierModel::probability(const std::array<double, 8>& x) const {
  double z = bias;
  for (std::size_t k = 0; k < 8; ++k) z += weights[k] * (x[k] - mean[k]) / scale[k];
  return 1.0 / (1.0 + std::exp(-z));
}

namespace {

ClassifierModel fit(std::span<const LabeledFeatures> samples, const std::vector<std::size_t>& train,
                    const DetectorOptions& opt) {
  ClassifierModel m;
  const double n = static_cast<double>(train.size());
  for (std::size_t k = 0; k < 8; ++k) {
    double sum = 0, sq = 0;
    for (auto i : train) sum += samples[i].x[k];
    m.mean[k] = sum / n;
    for (auto i : train) sq += (samples[i].x[k] - m.mean[k]) * (samples[i].x[k] - m.mean[k]);
    const double sd = std::sqrt(sq / n);
    m.scale[k] = sd > 1e-12 ? sd : 1.0;
  }
  for (int it = 0; it < opt.iterations; ++it) {
    std::array<double, 8> grad{};
    double grad_b = 0;
    for (auto i : train) {
      const double err = m.probability(samples[i].x) - samples[i].label;
      for (std::size_t k = 0; k < 8; ++k) grad[k] += err * (samples[i].x[k] - m.mean[k]) / m.scale[k];
      grad_b += err;
    }
    for (std::size_t k = 0; k < 8; ++k) m.weights[k] -= opt.learning_rate * grad[k] / n;
    m.bias -= opt.learning_rate * grad_b / n;
  }
  return m;
}

}  // namespace

DetectorResult train_detector(std::span<const LabeledFeatures> samples, const DetectorOptions& opt) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int c = samples[i].label;
    if (c != 0 && c != 1) throw std::invalid_argument("labels must be 0 or 1");
    by_class[c].push_back(i);
  }
  if (samples.size() < 4 || by_class[0].size() < 2 || by_class[1].size() < 2)
    throw std::invalid_argument("detector needs at least two samples of each class");
  if (opt.repeats <= 0) throw std::invalid_argument("repeats must be positive");

  DetectorResult result;
  std::mt19937_64 rng(opt.seed);
  for (int r = 0; r < opt.repeats; ++r) {
    std::vector<std::size_t> train, test;
    for (auto& cls : by_class) {
      std::vector<std::size_t> idx = cls;
      std::shuffle(idx.begin(), idx.end(), rng);
      const std::size_t half = idx.size() / 2;
      train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half));
      test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(half), idx.end());
    }
    ClassifierModel m = fit(samples, train, opt);
    std::size_t correct = 0;
    for (auto i : test) correct += m.predict(samples[i].x) == samples[i].label;
    result.accuracies.push_back(static_cast<double>(correct) / static_cast<double>(test.size()));
    m.seed = opt.seed;
    m.repeats = opt.repeats;
    result.model = m;
  }
  result.mean_accuracy = std::accumulate(result.accuracies.begin(), result.accuracies.end(), 0.0) /
                         static_cast<double>(result.accuracies.size());
  return result;
}

std::vector<CorpusEntry> synthetic_corpus(int count, int width, int height, int frames, std::uint64_t seed) {
  std::vector<CorpusEntry> out;
  for (int i = 0; i < count; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "synth%02d", i);
    out.push_back({"synthetic", synth_video(seed * 1000003u + static_cast<std::uint64_t>(i), width, height, frames, name)});
  }
  return out;
}

std::vector<CorpusEntry> load_corpus_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".y4m") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<CorpusEntry> out;
  for (const auto& f : files) {
    auto v = load_video(f, VideoFormat::y4m);
    v.name = f.stem().string();
    out.push_back({"user", std::move(v)});
  }
  return out;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t grid_seed(std::uint64_t seed, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return mix(mix(mix(mix(seed ^ a) ^ b) ^ c) ^ d);
}

CbssmFeatureVector cover_features(const CoverAnalysis& a, std::size_t n) {
  std::vector<CbssmFeatureVector> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(frame_features(a.frames[i].cover.coded.structure, a.frames[i].recompressed));
  return average(v);
}

CbssmFeatureVector stego_features(const CoverAnalysis& a, const EmbedResult& e, std::size_t n) {
  std::vector<CbssmFeatureVector> v;
  for (std::size_t i = 0; i < n; ++i) {
    if (e.stego_maps[i] == a.frames[i].cover.coded.structure)
      v.push_back(frame_features(a.frames[i].cover.coded.structure, a.frames[i].recompressed));
    else
      v.push_back(frame_features(e.stego_maps[i], recompress_structure(e.stego_recon[i], a.qp)));
  }
  return average(v);
}

struct TaskOutput {
  std::vector<ExperimentRow> rows;
  std::vector<MarginSample> margins;
  CbssmFeatureVector first_frame;
};

TaskOutput run_task(const CorpusEntry& entry, std::size_t video_index, std::size_t qp_index,
                    const ExperimentConfig& cfg) {
  TaskOutput out;
  const Qp qp{cfg.qps[qp_index]};
  const CoverAnalysis base = analyze_cover(entry.video, qp, Scheme::full);
  const std::size_t nf = std::min<std::size_t>(base.frames.size(), static_cast<std::size_t>(std::max(cfg.feature_frames, 1)));
  const CbssmFeatureVector cover_vec = cover_features(base, nf);

  const auto& f0 = base.frames.front();
  out.margins = margin_samples(f0.source, f0.cover, f0.recompressed, static_cast<int>(video_index));
  out.first_frame = frame_features(f0.cover.coded.structure, f0.recompressed);

  for (std::size_t pi = 0; pi < cfg.payloads.size(); ++pi) {
    for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
      const Scheme scheme = cfg.schemes[si];
      const CoverAnalysis analysis = scheme == Scheme::full ? base : with_scheme(base, scheme);
      const double alpha = cfg.payloads[pi];
      const std::size_t cap = schedule_capacity(alpha, analysis.carrier_counts());
      std::mt19937_64 rng(grid_seed(cfg.seed, video_index, qp_index, pi, si));
      std::vector<std::uint8_t> message(cap);
      for (auto& b : message) b = static_cast<std::uint8_t>(rng() & 1u);
      const EmbedResult e = embed(analysis, message, {scheme, alpha, qp, {}});

      ExperimentRow row;
      row.video = entry.video.name;
      row.cls = entry.cls;
      row.qp = qp.value();
      row.payload = alpha;
      row.scheme = scheme;
      row.metrics = measure(analysis, e, entry.video.frames, cap);
      row.cover_features = cover_vec;
      row.stego_features = stego_features(analysis, e, nf);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace

ExperimentResults run_experiment(std::span<const CorpusEntry> corpus, const ExperimentConfig& cfg) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  if (cfg.qps.empty() || cfg.payloads.empty() || cfg.schemes.empty()) throw std::invalid_argument("empty grid");

  const std::size_t nq = cfg.qps.size();
  std::vector<TaskOutput> outputs(corpus.size() * nq);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t t = next++; t < outputs.size(); t = next++) {
      try {
        outputs[t] = run_task(corpus[t / nq], t / nq, t % nq, cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(cfg.jobs, 1, static_cast<int>(outputs.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  ExperimentResults results;
  for (auto& o : outputs) results.rows.insert(results.rows.end(), o.rows.begin(), o.rows.end());

  for (std::size_t qi = 0; qi < nq; ++qi) {
    std::vector<MarginSample> samples;
    std::vector<CbssmFeatureVector> features;
    for (std::size_t v = 0; v < corpus.size(); ++v) {
      const auto& o = outputs[v * nq + qi];
      samples.insert(samples.end(), o.margins.begin(), o.margins.end());
      features.push_back(o.first_frame);
    }
    results.restoration[cfg.qps[qi]] = summarize_restoration(samples, features);
  }

  for (std::size_t qi = 0; qi < nq; ++qi)
    for (std::size_t pi = 0; pi < cfg.payloads.size(); ++pi)
      for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
        std::vector<LabeledFeatures> samples;
        for (const auto& r : results.rows) {
          if (r.qp != cfg.qps[qi] || r.payload != cfg.payloads[pi] || r.scheme != cfg.schemes[si]) continue;
          samples.push_back({r.cover_features.values(), 0});
          samples.push_back({r.stego_features.values(), 1});
        }
        DetectionRow d{cfg.qps[qi], cfg.payloads[pi], cfg.schemes[si], 0.5};
        if (samples.size() >= 4) {
          DetectorOptions opt;
          opt.seed = grid_seed(cfg.seed, 0xde7ec7, qi, pi, si);
          opt.repeats = cfg.repeats;
          d.accuracy = train_detector(samples, opt).mean_accuracy;
        }
        results.detection.push_back(d);
      }
  return results;
}

double corpus_mean(const ExperimentResults& results, int qp, double payload, Scheme scheme,
                   double (*metric)(const ExperimentRow&)) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : results.rows)
    if (r.qp == qp && r.payload == payload && r.scheme == scheme) {
      sum += metric(r);
      ++n;
    }
  if (n == 0) throw std::invalid_argument("no rows at this grid point");
  return sum / static_cast<double>(n);
}

std::optional<double> detection_accuracy(const ExperimentResults& results, int qp, double payload, Scheme scheme) {
  for (const auto& d : results.detection)
    if (d.qp == qp && d.payload == payload && d.scheme == scheme) return d.accuracy;
  return std::nullopt;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_metric(const ExperimentResults& results, const std::filesystem::path& path,
                  std::string (*value)(const ExperimentRow&)) {
  std::string text = "video,class,qp,payload,scheme,value\n";
  for (const auto& r : results.rows)
    text += r.video + "," + r.cls + "," + std::to_string(r.qp) + "," + num(r.payload) + "," +
            std::string(scheme_name(r.scheme)) + "," + value(r) + "\n";
  write_text(path, text);
}

}  // namespace

std::string experiment_summary_json(const ExperimentResults& results) {
  nlohmann::json j;
  std::vector<std::tuple<int, double, Scheme>> grid;
  for (const auto& d : results.detection) grid.emplace_back(d.qp, d.payload, d.scheme);
  auto& points = j["grid"] = nlohmann::json::array();
  for (const auto& [qp, payload, scheme] : grid) {
    nlohmann::json p{{"qp", qp}, {"payload", payload}, {"scheme", scheme_name(scheme)}};
    p["delta_psnr"] = corpus_mean(results, qp, payload, scheme, [](const ExperimentRow& r) { return r.metrics.delta_psnr; });
    p["bir"] = corpus_mean(results, qp, payload, scheme, [](const ExperimentRow& r) { return r.metrics.bir; });
    p["capacity"] = corpus_mean(results, qp, payload, scheme,
                                [](const ExperimentRow& r) { return static_cast<double>(r.metrics.capacity); });
    p["stego_mean_bsim"] = corpus_mean(results, qp, payload, scheme,
                                       [](const ExperimentRow& r) { return r.stego_features.mean_bsim(); });
    p["detector_accuracy"] = *detection_accuracy(results, qp, payload, scheme);
    points.push_back(p);
  }
  auto& rest = j["restoration"] = nlohmann::json::object();
  for (const auto& [qp, r] : results.restoration)
    rest[std::to_string(qp)] = nlohmann::json::parse(restoration_json(r));
  j["rows"] = results.rows.size();
  return j.dump(2) + "\n";
}

void write_experiment(const ExperimentResults& results, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_metric(results, dir / "delta_psnr.csv", [](const ExperimentRow& r) { return num(r.metrics.delta_psnr); });
  write_metric(results, dir / "bir.csv", [](const ExperimentRow& r) { return num(r.metrics.bir); });
  write_metric(results, dir / "capacity.csv",
               [](const ExperimentRow& r) { return std::to_string(r.metrics.capacity); });
  write_metric(results, dir / "capacity_per_1pct.csv", [](const ExperimentRow& r) {
    return r.metrics.capacity_per_1pct ? num(*r.metrics.capacity_per_1pct) : std::string("inf");
  });
  write_metric(results, dir / "psnr_stg.csv", [](const ExperimentRow& r) { return num(r.metrics.psnr_stg); });
  write_metric(results, dir / "mean_bsim.csv",
               [](const ExperimentRow& r) { return num(r.stego_features.mean_bsim()); });

  std::string det = "qp,payload,scheme,accuracy\n";
  for (const auto& d : results.detection)
    det += std::to_string(d.qp) + "," + num(d.payload) + "," + std::string(scheme_name(d.scheme)) + "," +
           num(d.accuracy) + "\n";
  write_text(dir / "detection.csv", det);
  write_text(dir / "summary.json", experiment_summary_json(results));

  for (const auto& [qp, r] : results.restoration) {
    std::string dat = "# frame changed_mean_delta unchanged_mean_delta\n";
    for (const auto& f : r.lipschitz.per_frame)
      dat += std::to_string(f.frame) + " " + (f.n_changed ? num(f.changed_mean) : "nan") + " " +
             (f.n_unchanged ? num(f.unchanged_mean) : "nan") + "\n";
    write_text(dir / ("margins_qp" + std::to_string(qp) + ".dat"), dat);
  }
}

}  // namespace custego
