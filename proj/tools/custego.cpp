#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "custego/cbssm.hpp"
#include "custego/errors.hpp"
#include "custego/eval.hpp"
#include "custego/stego.hpp"

namespace fs = std::filesystem;
using namespace custego;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kFormat = 2, kCapacity = 3, kExtraction = 4 };

struct VideoInput {
  std::string path;
  std::string format = "auto";
  int width = 0;
  int height = 0;
  bool yuv420 = false;
  int frames = 0;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--format", format, "Input format")->check(CLI::IsMember({"auto", "y4m", "raw"}));
    cmd->add_option("--width", width, "Raw frame width");
    cmd->add_option("--height", height, "Raw frame height");
    cmd->add_flag("--yuv420", yuv420, "Raw input carries 4:2:0 chroma planes");
    cmd->add_option("--frames", frames, "Use at most this many frames")->check(CLI::NonNegativeNumber);
  }

  VideoSequence load() const { return load_from(path); }

  VideoSequence load_from(const std::string& file) const {
    const bool y4m = format == "y4m" || (format == "auto" && fs::path(file).extension() == ".y4m");
    std::optional<RawOptions> raw;
    if (!y4m) {
      if (width <= 0 || height <= 0) throw std::invalid_argument("raw input needs --width and --height");
      raw = RawOptions{width, height, yuv420 ? RawLayout::yuv420 : RawLayout::luma_only};
    }
    VideoSequence v = load_video(file, y4m ? VideoFormat::y4m : VideoFormat::raw, raw);
    if (frames > 0 && static_cast<std::size_t>(frames) < v.frames.size()) v.frames.resize(static_cast<std::size_t>(frames));
    return v;
  }
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CUSTEGO_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::invalid_argument("CUSTEGO_SEED is not an unsigned integer");
    }
  }
  return 1;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

void write_text(const fs::path& path, const std::string& text) {
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  write_file(path, bytes);
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

bool is_bitstream(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 4 && bytes[0] == 'C' && bytes[1] == 'U' && bytes[2] == 'S' && bytes[3] == 'G';
}

std::vector<Frame> sources_for_psnr(const VideoSequence& video) {
  std::vector<Frame> out;
  for (const auto& f : video.frames) out.push_back(pad_to_ctu(f));
  return out;
}

std::vector<Frame> recon_frames(const DecodedVideo& v) {
  std::vector<Frame> out;
  for (const auto& f : v.frames) out.push_back(f.recon);
  return out;
}

// encode

struct EncodeArgs {
  VideoInput in;
  std::string out;
  int qp = 32;
};

int cmd_encode(const EncodeArgs& a) {
  const VideoSequence video = a.in.load();
  std::vector<Frame> padded = sources_for_psnr(video);
  const VideoEncoding enc = encode_video(padded, Qp{a.qp});
  write_file(a.out, enc.bitstream);

  std::vector<Frame> recon;
  for (const auto& f : enc.frames) recon.push_back(f.recon);
  const double quality = psnr(padded, recon);
  emit({{"frames", video.frames.size()}, {"qp", a.qp}, {"bits", enc.bits()},
        {"bytes", enc.bitstream.size()}, {"psnr", quality}});
  std::fprintf(stderr, "encoded %zu frames at qp %d: %zu bytes, PSNR %.2f dB\n", video.frames.size(), a.qp,
               enc.bitstream.size(), quality);
  return kOk;
}

// decode

struct DecodeArgs {
  std::string in;
  std::string out;
  std::string structure;
  std::string reference;
  VideoInput ref;
  bool raw = false;
};

int cmd_decode(const DecodeArgs& a) {
  const DecodedVideo v = read_bitstream(read_file(a.in));
  VideoSequence out{"decoded", recon_frames(v)};
  if (a.raw)
    save_raw(a.out, out);
  else
    save_y4m(a.out, out);

  std::vector<StructureMap> maps;
  for (const auto& f : v.frames) maps.push_back(f.coded.structure);
  if (!a.structure.empty()) write_file(a.structure, serialize_structures(maps));

  json j{{"frames", v.frames.size()}, {"width", v.width}, {"height", v.height}, {"qp", v.qp.value()}};
  std::vector<json> counts;
  for (const auto& m : maps) {
    const BlockCounts c = count_blocks(m);
    counts.push_back({{"n32", c[0]}, {"n16", c[1]}, {"n8_2n", c[2]}, {"n8_n", c[3]}});
  }
  j["block_counts"] = counts;
  if (!a.reference.empty()) {
    const VideoSequence src = a.ref.load_from(a.reference);
    if (src.frames.size() != out.frames.size()) throw std::invalid_argument("reference frame count differs");
    j["psnr"] = psnr(sources_for_psnr(src), out.frames);
    std::fprintf(stderr, "PSNR %.2f dB\n", j["psnr"].get<double>());
  }
  emit(j);
  std::fprintf(stderr, "decoded %zu frames (%dx%d, qp %d)\n", v.frames.size(), v.width, v.height, v.qp.value());
  return kOk;
}

// embed

struct EmbedArgs {
  VideoInput in;
  std::string out;
  std::string message_file;
  std::optional<std::size_t> random_bits;
  int qp = 32;
  double payload = 0.5;
  std::string scheme = "full";
  int h = 7;
  std::optional<std::uint64_t> seed;
  std::string sideinfo;
};

int cmd_embed(const EmbedArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const Scheme scheme = parse_scheme(a.scheme);
  std::vector<std::uint8_t> message;
  if (!a.message_file.empty()) {
    message = bytes_to_bits(read_file(a.message_file));
  } else {
    std::mt19937_64 rng(seed);
    message.resize(*a.random_bits);
    for (auto& b : message) b = static_cast<std::uint8_t>(rng() & 1u);
  }

  const VideoSequence video = a.in.load();
  StcParams stc;
  stc.h = a.h;
  stc.hhat = default_hhat(a.h);
  stc.seed = seed;
  const CoverAnalysis cover = analyze_cover(video, Qp{a.qp}, scheme);
  const auto counts = cover.carrier_counts();
  const std::size_t capacity = schedule_capacity(a.payload, counts);

  json report{{"scheme", scheme_name(scheme)}, {"qp", a.qp}, {"alpha", a.payload}, {"carriers_per_frame", counts},
              {"capacity", capacity}, {"message_bits", message.size()}};
  if (message.size() > capacity) {
    report["error"] = "capacity exceeded";
    report["required"] = message.size();
    report["available"] = capacity;
    emit(report);
    std::fprintf(stderr, "capacity exceeded: need %zu bits, %zu available\n", message.size(), capacity);
    return kCapacity;
  }

  const EmbedResult r = embed(cover, message, {scheme, a.payload, Qp{a.qp}, stc});
  write_file(a.out, r.package.bitstream);
  write_text(a.out + ".json", header_to_json(r.package.header));
  if (r.package.side_info && !a.sideinfo.empty()) write_file(a.sideinfo, *r.package.side_info);
  if (scheme == Scheme::only8x8 && !a.sideinfo.empty())
    std::fprintf(stderr, "note: the 8x8 scheme extracts blind; no side info written\n");

  report["bits_per_frame"] = r.message_per_frame;
  report["changes"] = r.changes;
  report["cover_bits"] = cover.cover_bits();
  report["stego_bits"] = r.stego_bits;
  emit(report);
  std::fprintf(stderr, "embedded %zu of %zu bits with %zu structure changes\n", message.size(), capacity, r.changes);
  return kOk;
}

// extract

struct ExtractArgs {
  std::string in;
  std::string out;
  std::string header;
  std::string sideinfo;
  std::string original;
  VideoInput orig;
  std::optional<int> h;
  std::optional<std::uint64_t> seed;
};

int cmd_extract(const ExtractArgs& a) {
  StegoPackage pkg;
  pkg.bitstream = read_file(a.in);
  pkg.header = header_from_json(read_text(a.header.empty() ? a.in + ".json" : a.header));
  if (a.h && *a.h != pkg.header.stc.h) throw ExtractionError("header mismatch: --h differs from header");
  if (a.seed && *a.seed != pkg.header.stc.seed) throw ExtractionError("header mismatch: --seed differs from header");
  if (!a.sideinfo.empty()) pkg.side_info = read_file(a.sideinfo);

  std::optional<VideoSequence> original;
  if (!a.original.empty()) original = a.orig.load_from(a.original);
  const auto bits = extract(pkg, original ? &*original : nullptr);
  write_file(a.out, bits_to_bytes(bits));
  emit({{"scheme", scheme_name(pkg.header.scheme)}, {"message_bits", bits.size()}, {"bytes", (bits.size() + 7) / 8}});
  std::fprintf(stderr, "extracted %zu bits\n", bits.size());
  return kOk;
}

// analyze

struct AnalyzeArgs {
  VideoInput in;
  std::optional<int> qp;
  std::string csv;
  std::string report;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const auto bytes = read_file(a.in.path);
  std::vector<StructureMap> maps;
  std::vector<Frame> frames;
  Qp qp{a.qp.value_or(32)};
  if (is_bitstream(bytes)) {
    const DecodedVideo v = read_bitstream(bytes);
    if (!a.qp) qp = v.qp;
    const std::size_t n = a.in.frames > 0 ? std::min<std::size_t>(static_cast<std::size_t>(a.in.frames), v.frames.size())
                                          : v.frames.size();
    for (std::size_t i = 0; i < n; ++i) {
      maps.push_back(v.frames[i].coded.structure);
      frames.push_back(v.frames[i].recon);
    }
  } else {
    const VideoSequence video = a.in.load();
    for (const auto& f : video.frames) {
      frames.push_back(pad_to_ctu(f));
      maps.push_back(encode_frame(frames.back(), qp).coded.structure);
    }
  }

  std::string csv = features_csv_header();
  std::vector<CbssmFeatureVector> features;
  const std::string name = fs::path(a.in.path).stem().string();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    features.push_back(frame_features(maps[i], recompress_structure(frames[i], qp)));
    csv += features_csv_row(name, static_cast<int>(i), features.back());
  }
  const RestorationReport restoration = analyze_restoration(frames, qp);
  if (!a.csv.empty()) write_text(a.csv, csv);
  if (!a.report.empty()) write_text(a.report, restoration_json(restoration));

  const CbssmFeatureVector mean = average(features);
  json j{{"qp", qp.value()}, {"frames", features.size()}, {"bqum", mean.bqum}, {"bsim", mean.bsim},
         {"mean_bsim", mean.mean_bsim()}, {"restoration", json::parse(restoration_json(restoration))}};
  emit(j);
  std::fprintf(stderr, "%zu frames, mean BSIM %.4f, structure unchanged %.1f%%\n", features.size(), mean.mean_bsim(),
               100.0 * restoration.fraction_structure_unchanged);
  return kOk;
}

// experiment

struct ExperimentArgs {
  std::string corpus;
  std::string out;
  std::vector<int> qps{26, 32, 38};
  std::vector<double> payloads{0.1, 0.3, 0.5};
  std::vector<std::string> schemes{"full", "8x8", "tew"};
  int synthetic = 0;
  int width = 128;
  int height = 128;
  int clip_frames = 3;
  int feature_frames = 10;
  int repeats = 100;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

int cmd_experiment(const ExperimentArgs& a) {
  ExperimentConfig cfg;
  cfg.qps = a.qps;
  cfg.payloads = a.payloads;
  cfg.schemes.clear();
  for (const auto& s : a.schemes) cfg.schemes.push_back(parse_scheme(s));
  cfg.feature_frames = a.feature_frames;
  cfg.repeats = a.repeats;
  cfg.jobs = a.jobs;
  cfg.seed = resolve_seed(a.seed);

  std::vector<CorpusEntry> corpus;
  if (!a.corpus.empty()) corpus = load_corpus_dir(a.corpus);
  if (a.synthetic > 0) {
    auto synth = synthetic_corpus(a.synthetic, a.width, a.height, a.clip_frames, cfg.seed);
    corpus.insert(corpus.end(), synth.begin(), synth.end());
  }
  if (corpus.empty()) throw std::invalid_argument("empty corpus: give a directory of .y4m files or --synthetic N");

  const ExperimentResults results = run_experiment(corpus, cfg);
  write_experiment(results, a.out);
  std::cout << experiment_summary_json(results);
  std::fprintf(stderr, "%zu rows over %zu videos written to %s\n", results.rows.size(), corpus.size(), a.out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CU block-structure video steganography toolkit"};
  app.require_subcommand(1);

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "Encode a video to a CUSG bitstream");
  c_enc->add_option("input", enc.in.path)->required();
  c_enc->add_option("output", enc.out)->required();
  c_enc->add_option("--qp", enc.qp)->check(CLI::Range(0, 51));
  enc.in.add_flags(c_enc);

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Decode a CUSG bitstream to Y4M (or raw) and a structure dump");
  c_dec->add_option("input", dec.in)->required();
  c_dec->add_option("output", dec.out)->required();
  c_dec->add_option("--structure", dec.structure, "Write the CU structures as a CUSI file");
  c_dec->add_option("--reference", dec.reference, "Source video for PSNR");
  c_dec->add_flag("--raw", dec.raw, "Write raw luma instead of Y4M");
  dec.ref.add_flags(c_dec);

  EmbedArgs emb;
  auto* c_emb = app.add_subcommand("embed", "Embed a message into the CU structure of a video");
  c_emb->add_option("input", emb.in.path)->required();
  c_emb->add_option("output", emb.out)->required();
  auto* o_msg = c_emb->add_option("--message-file", emb.message_file);
  auto* o_rnd = c_emb->add_option("--random-bits", emb.random_bits);
  o_msg->excludes(o_rnd);
  c_emb->add_option("--qp", emb.qp)->check(CLI::Range(0, 51));
  c_emb->add_option("--payload", emb.payload, "Payload alpha in (0, 1]")->check(CLI::Range(0.0, 1.0));
  c_emb->add_option("--scheme", emb.scheme)->check(CLI::IsMember({"full", "8x8", "tew"}));
  c_emb->set_help_flag("--help", "Print this help message and exit");
  c_emb->add_option("--h", emb.h, "STC constraint height")->check(CLI::Range(2, 12));
  c_emb->add_option("--seed", emb.seed);
  c_emb->add_option("--sideinfo", emb.sideinfo, "Write cover structures here (full scheme)");
  emb.in.add_flags(c_emb);

  ExtractArgs ext;
  auto* c_ext = app.add_subcommand("extract", "Recover an embedded message");
  c_ext->add_option("input", ext.in)->required();
  c_ext->add_option("output", ext.out)->required();
  c_ext->add_option("--header", ext.header, "Header JSON (default: <input>.json)");
  c_ext->add_option("--sideinfo", ext.sideinfo);
  c_ext->add_option("--original", ext.original, "Cover video, re-encoded when side info is absent");
  c_ext->set_help_flag("--help", "Print this help message and exit");
  c_ext->add_option("--h", ext.h);
  c_ext->add_option("--seed", ext.seed);
  ext.orig.add_flags(c_ext);

  AnalyzeArgs ana;
  auto* c_ana = app.add_subcommand("analyze", "CBSSM features and restoration report");
  c_ana->add_option("input", ana.in.path, "CUSG bitstream or source video")->required();
  c_ana->add_option("--qp", ana.qp)->check(CLI::Range(0, 51));
  c_ana->add_option("--csv", ana.csv, "Write per-frame features here");
  c_ana->add_option("--report", ana.report, "Write the restoration report JSON here");
  ana.in.add_flags(c_ana);

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment", "Run the evaluation grid");
  c_exp->add_option("corpus", exp.corpus, "Directory of .y4m files");
  c_exp->add_option("--out", exp.out)->required();
  c_exp->add_option("--qps", exp.qps)->delimiter(',');
  c_exp->add_option("--payloads", exp.payloads)->delimiter(',');
  c_exp->add_option("--schemes", exp.schemes)->delimiter(',');
  c_exp->add_option("--synthetic", exp.synthetic, "Add N synthetic clips");
  c_exp->add_option("--width", exp.width);
  c_exp->add_option("--height", exp.height);
  c_exp->add_option("--clip-frames", exp.clip_frames);
  c_exp->add_option("--frames", exp.feature_frames, "Frames averaged per feature vector");
  c_exp->add_option("--repeats", exp.repeats);
  c_exp->add_option("--jobs", exp.jobs)->check(CLI::PositiveNumber);
  c_exp->add_option("--seed", exp.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_enc) return cmd_encode(enc);
    if (*c_dec) return cmd_decode(dec);
    if (*c_emb) {
      if (emb.message_file.empty() && !emb.random_bits) throw std::invalid_argument("give --message-file or --random-bits");
      return cmd_embed(emb);
    }
    if (*c_ext) return cmd_extract(ext);
    if (*c_ana) return cmd_analyze(ana);
    if (*c_exp) return cmd_experiment(exp);
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kFormat;
  } catch (const CapacityError& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return kCapacity;
  } catch (const ExtractionError& e) {
    std::fprintf(stderr, "extraction failed: %s\n", e.what());
    return kExtraction;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
