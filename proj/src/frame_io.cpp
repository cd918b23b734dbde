#include "custego/frame_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "custego/errors.hpp"

namespace custego {

Frame::Frame(int w, int h, std::uint8_t fill)
    : width(w), height(h), luma(static_cast<std::size_t>(w) * h, fill) {}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace {

// Bytes of chroma following each luma plane for a Y4M colorspace tag.
std::size_t chroma_bytes(const std::string& tag, int w, int h) {
  const std::size_t cw2 = static_cast<std::size_t>((w + 1) / 2);
  const std::size_t ch2 = static_cast<std::size_t>((h + 1) / 2);
  if (tag.empty() || tag.rfind("420", 0) == 0) return 2 * cw2 * ch2;
  if (tag.rfind("422", 0) == 0) return 2 * cw2 * static_cast<std::size_t>(h);
  if (tag.rfind("444", 0) == 0) return 2 * static_cast<std::size_t>(w) * h;
  if (tag.rfind("mono", 0) == 0) return 0;
  throw FormatError("unsupported y4m colorspace C" + tag);
}

}  // namespace

VideoSequence parse_y4m(std::span<const std::uint8_t> bytes, std::string name) {
  auto newline = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (newline == bytes.end()) throw FormatError("malformed y4m header");
  const std::string header(bytes.begin(), newline);
  std::istringstream tokens(header);
  std::string token;
  tokens >> token;
  if (token != "YUV4MPEG2") throw FormatError("malformed y4m header: bad signature");

  int w = 0, h = 0;
  std::string colorspace;
  while (tokens >> token) {
    try {
      if (token[0] == 'W') w = std::stoi(token.substr(1));
      else if (token[0] == 'H') h = std::stoi(token.substr(1));
      else if (token[0] == 'C') colorspace = token.substr(1);
    } catch (const std::logic_error&) {
      throw FormatError("malformed y4m header token " + token);
    }
  }
  if (w <= 0 || h <= 0) throw FormatError("y4m header has zero dimensions");

  const std::size_t luma = static_cast<std::size_t>(w) * h;
  const std::size_t skip = chroma_bytes(colorspace, w, h);

  VideoSequence video;
  video.name = std::move(name);
  std::size_t pos = static_cast<std::size_t>(newline - bytes.begin()) + 1;
  while (pos < bytes.size()) {
    auto frame_end = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(),
                               std::uint8_t{'\n'});
    if (frame_end == bytes.end()) throw FormatError("truncated frame header");
    const std::string frame_header(bytes.begin() + static_cast<std::ptrdiff_t>(pos), frame_end);
    if (frame_header.rfind("FRAME", 0) != 0) throw FormatError("malformed frame header");
    pos = static_cast<std::size_t>(frame_end - bytes.begin()) + 1;
    if (bytes.size() - pos < luma + skip) throw FormatError("truncated frame");
    Frame f(w, h);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), luma, f.luma.begin());
    video.frames.push_back(std::move(f));
    pos += luma + skip;
  }
  if (video.frames.empty()) throw FormatError("y4m stream has no frames");
  return video;
}

VideoSequence parse_raw(std::span<const std::uint8_t> bytes, const RawOptions& options,
                        std::string name) {
  if (options.width <= 0 || options.height <= 0) throw FormatError("raw input has zero dimensions");
  const std::size_t luma = static_cast<std::size_t>(options.width) * options.height;
  const std::size_t frame_bytes =
      luma + (options.layout == RawLayout::yuv420 ? chroma_bytes("420", options.width, options.height) : 0);
  if (bytes.empty() || bytes.size() % frame_bytes != 0) throw FormatError("truncated frame");

  VideoSequence video;
  video.name = std::move(name);
  for (std::size_t pos = 0; pos < bytes.size(); pos += frame_bytes) {
    Frame f(options.width, options.height);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), luma, f.luma.begin());
    video.frames.push_back(std::move(f));
  }
  return video;
}

VideoSequence load_video(const std::filesystem::path& path, VideoFormat format,
                         const std::optional<RawOptions>& raw) {
  const auto bytes = read_file(path);
  const std::string name = path.stem().string();
  if (format == VideoFormat::y4m) return parse_y4m(bytes, name);
  if (!raw) throw std::invalid_argument("raw input needs explicit width and height");
  return parse_raw(bytes, *raw, name);
}

std::vector<std::uint8_t> to_y4m(const VideoSequence& video) {
  std::ostringstream header;
  header << "YUV4MPEG2 W" << video.width() << " H" << video.height() << " F30:1 Ip A1:1 Cmono\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  static constexpr std::string_view kFrame = "FRAME\n";
  for (const auto& f : video.frames) {
    out.insert(out.end(), kFrame.begin(), kFrame.end());
    out.insert(out.end(), f.luma.begin(), f.luma.end());
  }
  return out;
}

void save_y4m(const std::filesystem::path& path, const VideoSequence& video) {
  write_file(path, to_y4m(video));
}

void save_raw(const std::filesystem::path& path, const VideoSequence& video) {
  std::vector<std::uint8_t> out;
  for (const auto& f : video.frames) out.insert(out.end(), f.luma.begin(), f.luma.end());
  write_file(path, out);
}

Frame pad_to_ctu(const Frame& frame, int ctu) {
  const int w = (frame.width + ctu - 1) / ctu * ctu;
  const int h = (frame.height + ctu - 1) / ctu * ctu;
  if (w == frame.width && h == frame.height) return frame;
  Frame out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, frame.height - 1);
    for (int x = 0; x < w; ++x) out.at(x, y) = frame.at(std::min(x, frame.width - 1), sy);
  }
  return out;
}

Frame crop(const Frame& frame, int width, int height) {
  if (width > frame.width || height > frame.height) throw std::invalid_argument("crop larger than frame");
  Frame out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out.at(x, y) = frame.at(x, y);
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from a hash of (seed, x, y).
double hash_unit(std::uint64_t seed, std::int64_t x, std::int64_t y) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(x) * 0x100000001B3ull ^
                                                       splitmix64(static_cast<std::uint64_t>(y))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Small deterministic generator; std distributions are implementation-defined.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : state_(seed) {}
  double uniform() { return static_cast<double>(splitmix64(state_++) >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }

 private:
  std::uint64_t state_;
};

struct Wave {
  double amp, fx, fy, phase;
};

enum class Fill { flat, ramp, stripes, grain };

struct Shape {
  bool ellipse;
  double cx, cy, rx, ry;
  double level;
  Fill fill;
  double param0, param1;
};

struct Scene {
  std::uint64_t seed;
  double base;
  std::vector<Wave> waves;
  std::vector<Shape> shapes;
  double grain_sigma;

  Scene(std::uint64_t s, double extent) : seed(s) {
    SceneRng rng(s * 7919 + 17);
    base = rng.uniform(70, 180);
    const int n_waves = rng.integer(2, 4);
    for (int i = 0; i < n_waves; ++i)
      waves.push_back({rng.uniform(8, 30), rng.uniform(-1.5, 1.5) / extent, rng.uniform(-1.5, 1.5) / extent,
                       rng.uniform(0, 2 * std::numbers::pi)});
    const int n_shapes = rng.integer(3, 8);
    for (int i = 0; i < n_shapes; ++i) {
      Shape sh;
      sh.ellipse = rng.uniform() < 0.5;
      sh.cx = rng.uniform(0, extent);
      sh.cy = rng.uniform(0, extent);
      sh.rx = rng.uniform(0.05, 0.3) * extent;
      sh.ry = rng.uniform(0.05, 0.3) * extent;
      sh.level = rng.uniform(20, 235);
      const double f = rng.uniform();
      sh.fill = f < 0.4 ? Fill::flat : f < 0.6 ? Fill::ramp : f < 0.8 ? Fill::stripes : Fill::grain;
      sh.param0 = rng.uniform(3, 14);
      sh.param1 = rng.uniform(0, std::numbers::pi);
      shapes.push_back(sh);
    }
    grain_sigma = rng.uniform(0.5, 2.5);
  }

  double sample(int x, int y) const {
    double v = base;
    for (const auto& w : waves) v += w.amp * std::cos(2 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      const auto& sh = shapes[i];
      const double dx = (x - sh.cx) / sh.rx, dy = (y - sh.cy) / sh.ry;
      const bool inside = sh.ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
      if (!inside) continue;
      switch (sh.fill) {
        case Fill::flat: v = sh.level; break;
        case Fill::ramp: v = sh.level + 25.0 * dx; break;
        case Fill::stripes:
          v = sh.level + 35.0 * std::sin(2 * std::numbers::pi *
                                         (x * std::cos(sh.param1) + y * std::sin(sh.param1)) / sh.param0);
          break;
        case Fill::grain: v = sh.level + 40.0 * (hash_unit(seed + 101 + i, x, y) - 0.5); break;
      }
    }
    // Approximate Gaussian sensor grain (sum of uniforms).
    double g = 0;
    for (int k = 0; k < 4; ++k) g += hash_unit(seed + 7 * k + 3, x, y);
    v += grain_sigma * (g - 2.0) * std::sqrt(3.0);
    return v;
  }
};

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

Frame synth_frame(const SynthSpec& spec, int width, int height) {
  if (width <= 0 || height <= 0 || width % 8 != 0 || height % 8 != 0)
    throw std::invalid_argument("synthetic frame size must be a positive multiple of 8");
  Frame f(width, height);
  switch (spec.kind) {
    case SynthKind::flat:
      std::fill(f.luma.begin(), f.luma.end(), static_cast<std::uint8_t>(std::clamp(spec.value, 0, 255)));
      break;
    case SynthKind::gradient:
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
          f.at(x, y) = static_cast<std::uint8_t>((x + y) * 255 / std::max(1, width + height - 2));
      break;
    case SynthKind::checker: {
      if (spec.period <= 0) throw std::invalid_argument("checker period must be positive");
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) f.at(x, y) = ((x / spec.period + y / spec.period) % 2) ? 255 : 0;
      break;
    }
    case SynthKind::noise:
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
          f.at(x, y) = static_cast<std::uint8_t>(hash_unit(spec.seed, x, y) * 256.0);
      break;
    case SynthKind::scene: {
      const Scene scene(spec.seed, std::max(width, height));
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) f.at(x, y) = clamp8(scene.sample(x, y));
      break;
    }
  }
  return f;
}

VideoSequence synth_video(std::uint64_t seed, int width, int height, int frames, std::string name) {
  if (width <= 0 || height <= 0 || width % 8 != 0 || height % 8 != 0 || frames <= 0)
    throw std::invalid_argument("invalid synthetic video geometry");
  const Scene scene(seed, std::max(width, height));
  SceneRng rng(seed * 31 + 5);
  const double vx = rng.uniform(-3, 3), vy = rng.uniform(-2, 2);
  VideoSequence video;
  video.name = name.empty() ? "scene" + std::to_string(seed) : std::move(name);
  for (int t = 0; t < frames; ++t) {
    const int ox = static_cast<int>(std::lround(vx * t)), oy = static_cast<int>(std::lround(vy * t));
    Frame f(width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) f.at(x, y) = clamp8(scene.sample(x + ox, y + oy));
    video.frames.push_back(std::move(f));
  }
  return video;
}

}  // namespace custego
