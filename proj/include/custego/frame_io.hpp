#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace custego {

/// One 8-bit luma plane, row-major.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> luma;

  Frame() = default;
  Frame(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const { return luma[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return luma[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const Frame&) const = default;
};

struct VideoSequence {
  std::string name;
  std::vector<Frame> frames;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
};

enum class VideoFormat { y4m, raw };

// Planar layouts accepted for raw input. Chroma planes are skipped.
enum class RawLayout { luma_only, yuv420 };

struct RawOptions {
  int width = 0;
  int height = 0;
  RawLayout layout = RawLayout::luma_only;
};

VideoSequence load_video(const std::filesystem::path& path, VideoFormat format,
                         const std::optional<RawOptions>& raw = std::nullopt);

VideoSequence parse_y4m(std::span<const std::uint8_t> bytes, std::string name = "y4m");
VideoSequence parse_raw(std::span<const std::uint8_t> bytes, const RawOptions& options,
                        std::string name = "raw");

/// Writes a mono (Cmono) Y4M stream.
std::vector<std::uint8_t> to_y4m(const VideoSequence& video);
void save_y4m(const std::filesystem::path& path, const VideoSequence& video);
void save_raw(const std::filesystem::path& path, const VideoSequence& video);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Rounds dimensions up to a multiple of `ctu` by replicating the last row and column.
Frame pad_to_ctu(const Frame& frame, int ctu = 64);
Frame crop(const Frame& frame, int width, int height);

enum class SynthKind { flat, gradient, checker, noise, scene };

struct SynthSpec {
  SynthKind kind = SynthKind::flat;
  int value = 128;          // flat level
  int period = 8;           // checker tile size
  std::uint64_t seed = 1;   // noise / scene
};

/// Deterministic test pattern. Width and height must be positive multiples of 8.
Frame synth_frame(const SynthSpec& spec, int width, int height);

/// A short clip cut from one synthetic scene with a slow pan, so consecutive
/// frames share content the way camera footage does.
VideoSequence synth_video(std::uint64_t seed, int width, int height, int frames,
                          std::string name = {});

}  // namespace custego
