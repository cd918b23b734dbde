#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "custego/bitio.hpp"
#include "custego/errors.hpp"
#include "helpers.hpp"

using namespace custego;
using namespace testing;

namespace {

// Direct O(n^4) orthonormal DCT-II.
std::vector<double> naive_dct(const std::vector<double>& x, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  auto a = [n](int k) { return k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n); };
  for (int v = 0; v < n; ++v)
    for (int u = 0; u < n; ++u) {
      double s = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          s += x[static_cast<std::size_t>(j * n + i)] * std::cos((2 * i + 1) * u * std::numbers::pi / (2.0 * n)) *
               std::cos((2 * j + 1) * v * std::numbers::pi / (2.0 * n));
      out[static_cast<std::size_t>(v * n + u)] = a(u) * a(v) * s;
    }
  return out;
}

std::uint8_t clip(long v) { return static_cast<std::uint8_t>(std::clamp(v, 0L, 255L)); }

// Cost of coding one n*n unit with `mode`, computed from the format rules.
double mode_cost(const Frame& src, const Frame& context, int x, int y, int n, IntraMode mode, Qp qp, int flag_bits) {
  const auto pred = predict(context, x, y, n, mode);
  std::vector<double> res(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      res[static_cast<std::size_t>(j * n + i)] = src.at(x + i, y + j) - pred[static_cast<std::size_t>(j * n + i)];
  const auto levels = quantize(naive_dct(res, n), qp);
  std::uint64_t bits = static_cast<std::uint64_t>(flag_bits) + 2;
  for (auto l : levels) bits += static_cast<std::uint64_t>(se_length(l));
  const auto back = dct_inverse(dequantize(levels, qp), n);
  double sse = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(j * n + i);
      const bool zero = std::all_of(levels.begin(), levels.end(), [](int v) { return v == 0; });
      const int r = clip(pred[k] + (zero ? 0L : std::lround(back[k])));
      const double d = src.at(x + i, y + j) - r;
      sse += d * d;
    }
  return sse + lambda_from_qp(qp) * static_cast<double>(bits);
}

}  // namespace

TEST_CASE("lambda and quantizer step") {
  CHECK(lambda_from_qp(Qp{12}) == doctest::Approx(0.57).epsilon(1e-12));
  CHECK(lambda_from_qp(Qp{15}) == doctest::Approx(1.14).epsilon(1e-12));
  for (int q = 0; q < 51; ++q) CHECK(lambda_from_qp(Qp{q + 1}) > lambda_from_qp(Qp{q}));
  CHECK(quant_step(Qp{4}) == 1.0);
  CHECK(quant_step(Qp{10}) == doctest::Approx(2.0));
  CHECK_THROWS(Qp{52});
  CHECK_THROWS(Qp{-1});
}

TEST_CASE("intra prediction") {
  Frame recon(32, 32, 128);
  for (auto mode : kIntraModes)
    for (int v : predict(recon, 8, 8, 8, mode)) CHECK(v == 128);

  Frame empty(16, 16, 0);
  for (auto mode : kIntraModes)
    for (int v : predict(empty, 0, 0, 8, mode)) CHECK(v == 128);

  Frame f(16, 16, 0);
  for (int i = 0; i < 16; ++i) f.at(i, 3) = 10;
  const auto vert = predict(f, 0, 4, 8, IntraMode::Vertical);
  for (int v : vert) CHECK(v == 10);

  for (int j = 0; j < 16; ++j) f.at(3, j) = static_cast<std::uint8_t>(j * 10);
  const auto hor = predict(f, 4, 4, 4, IntraMode::Horizontal);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) CHECK(hor[static_cast<std::size_t>(j * 4 + i)] == (4 + j) * 10);

  // Top row 10..., left column 40...: DC = (4*10 + 4*40 + 4) / 8 = 25.
  Frame g(16, 16, 0);
  for (int i = 0; i < 8; ++i) g.at(4 + i, 3) = 10;
  for (int j = 0; j < 8; ++j) g.at(3, 4 + j) = 40;
  for (int v : predict(g, 4, 4, 4, IntraMode::DC)) CHECK(v == 25);
  // Only the left column available.
  Frame h(16, 16, 0);
  for (int j = 0; j < 4; ++j) h.at(3, j) = 90;
  for (int v : predict(h, 4, 0, 4, IntraMode::DC)) CHECK(v == 90);

  // Planar on constant references reproduces the constant.
  Frame p(16, 16, 60);
  for (int v : predict(p, 8, 8, 8, IntraMode::Planar)) CHECK(v == 60);
}

TEST_CASE("planar matches the bilinear formula") {
  std::mt19937_64 rng(4);
  const Frame f = random_frame(rng, 32, 32);
  const int n = 8, x = 8, y = 8;
  const auto pred = predict(f, x, y, n, IntraMode::Planar);
  const int tr = f.at(x + n - 1, y - 1), bl = f.at(x - 1, y + n - 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int expect =
          ((n - 1 - i) * f.at(x - 1, y + j) + (i + 1) * tr + (n - 1 - j) * f.at(x + i, y - 1) + (j + 1) * bl + n) / (2 * n);
      CHECK(pred[static_cast<std::size_t>(j * n + i)] == expect);
    }
}

TEST_CASE("DCT") {
  for (int n : {4, 8, 16, 32, 64}) {
    std::vector<double> c(static_cast<std::size_t>(n) * n, 5.0);
    const auto coef = dct_forward(c, n);
    CHECK(coef[0] == doctest::Approx(n * 5.0));
    for (std::size_t k = 1; k < coef.size(); ++k) CHECK(std::fabs(coef[k]) < 1e-9);
  }
  std::mt19937_64 rng(8);
  for (int n : {4, 8, 16}) {
    std::vector<double> x(static_cast<std::size_t>(n) * n);
    for (auto& v : x) v = static_cast<double>(static_cast<int>(rng() % 511) - 255);
    const auto coef = dct_forward(x, n);
    const auto ref = naive_dct(x, n);
    double ex = 0, ec = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      CHECK(coef[k] == doctest::Approx(ref[k]).epsilon(1e-9).scale(1.0));
      ex += x[k] * x[k];
      ec += coef[k] * coef[k];
    }
    CHECK(std::fabs(ex - ec) <= 1e-6 * ex);
    const auto back = dct_inverse(coef, n);
    for (std::size_t k = 0; k < x.size(); ++k) {
      CHECK(std::fabs(back[k] - x[k]) <= 0.5);
      CHECK(std::lround(back[k]) == static_cast<long>(x[k]));
    }
  }
}

TEST_CASE("quantization") {
  const std::vector<double> ints{-7, 0, 3, 250};
  const auto lv = quantize(ints, Qp{4});
  CHECK(lv == std::vector<std::int32_t>{-7, 0, 3, 250});

  const std::vector<double> halves{2.5, -2.5, 0.49, -0.5};
  CHECK(quantize(halves, Qp{4}) == std::vector<std::int32_t>{3, -3, 0, -1});

  const std::vector<double> zeros(16, 0.0);
  for (auto v : dequantize(quantize(zeros, Qp{30}), Qp{30})) CHECK(v == 0.0);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-2000, 2000);
  for (int q : {0, 12, 26, 38, 51}) {
    std::vector<double> c(64);
    for (auto& v : c) v = d(rng);
    const auto back = dequantize(quantize(c, Qp{q}), Qp{q});
    for (std::size_t k = 0; k < c.size(); ++k) CHECK(std::fabs(back[k] - c[k]) <= quant_step(Qp{q}) / 2 + 1e-9);
  }
}

TEST_CASE("entropy size of all-zero leaves") {
  CodedLeaf nxn{{0, 0, 8}, CuKind::S8_NxN, std::vector<IntraMode>(4, IntraMode::DC),
                std::vector<std::vector<std::int32_t>>(4, std::vector<std::int32_t>(16, 0)), {}};
  // Per 4x4 unit: 16 one-bit zero codes + 2 mode bits; plus one PU bit.
  CHECK(entropy_size(nxn) == 4 * (16 + 2) + 1);

  CodedLeaf two{{0, 0, 8}, CuKind::S8_2Nx2N, {IntraMode::Planar}, {std::vector<std::int32_t>(64, 0)}, {}};
  CHECK(entropy_size(two) == 64 + 2 + 1);
  CodedLeaf s16{{0, 0, 16}, CuKind::S16, {IntraMode::DC}, {std::vector<std::int32_t>(256, 0)}, {}};
  CHECK(entropy_size(s16) == 256 + 2 + 1);
}

TEST_CASE("leaf write/read round-trip") {
  std::mt19937_64 rng(12);
  const CuKind kinds[] = {CuKind::S64, CuKind::S32, CuKind::S16, CuKind::S8_2Nx2N, CuKind::S8_NxN};
  for (int t = 0; t < 100; ++t) {
    const CuKind k = kinds[rng() % 5];
    CodedLeaf leaf{{0, 0, kind_size(k)}, k, {}, {}, {}};
    const int units = k == CuKind::S8_NxN ? 4 : 1;
    const int n = k == CuKind::S8_NxN ? 4 : kind_size(k);
    for (int u = 0; u < units; ++u) {
      leaf.modes.push_back(kIntraModes[rng() % 4]);
      std::vector<std::int32_t> lv(static_cast<std::size_t>(n) * n);
      for (auto& v : lv) v = rng() % 4 ? 0 : static_cast<std::int32_t>(rng() % 201) - 100;
      leaf.levels.push_back(lv);
    }
    BitWriter w;
    write_leaf(w, leaf);
    CHECK(w.bit_count() == entropy_size(leaf));
    w.align();
    BitReader r(w.bytes());
    const CodedLeaf back = read_leaf(r, leaf.rect);
    CHECK(back.kind == leaf.kind);
    CHECK(back.modes == leaf.modes);
    CHECK(back.levels == leaf.levels);
  }
}

TEST_CASE("leaf RD choice is the cheapest mode") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 40; ++t) {
    const Frame src = random_frame(rng, 32, 32);
    Frame context = random_frame(rng, 32, 32);
    const Qp qp{static_cast<int>(rng() % 40) + 4};
    const Rect r{16, 16, 16};
    Frame recon = context;
    const CodedLeaf leaf = rd_cost_leaf(src, recon, r, CuKind::S16, qp);
    double best = 1e300;
    for (auto mode : kIntraModes) best = std::min(best, mode_cost(src, context, r.x, r.y, r.size, mode, qp, 1));
    CHECK(leaf.cost.j == doctest::Approx(best).epsilon(1e-12));
    CHECK(leaf.cost.j == doctest::Approx(leaf.cost.distortion + lambda_from_qp(qp) * leaf.cost.rate).epsilon(1e-12));
  }

  // Flat source equal to the DC prediction.
  Frame flat(64, 64, 128);
  Frame recon(64, 64, 128);
  const CodedLeaf leaf = rd_cost_leaf(flat, recon, {0, 0, 64}, CuKind::S64, Qp{32});
  CHECK(leaf.cost.distortion == 0.0);
  CHECK(leaf.cost.j == doctest::Approx(lambda_from_qp(Qp{32}) * leaf.cost.rate));
}

TEST_CASE("flat frames stay unsplit, busy frames split") {
  const auto flat = encode_frame(synth_frame({SynthKind::flat, 90}, 128, 128), Qp{32});
  for (const auto& cu : zigzag_scan(flat.coded.structure, true)) CHECK(cu.kind == CuKind::S64);

  const auto checker = encode_frame(synth_frame({SynthKind::checker, 0, 8}, 128, 128), Qp{32});
  CHECK(zigzag_scan(checker.coded.structure, true).size() > 4);
}

TEST_CASE("bitstream decodes to the encoder reconstruction") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const Frame f = t % 2 ? random_frame(rng, 128, 64) : synth_video(rng(), 128, 64, 1).frames[0];
    const Qp qp{20 + 6 * (t % 4)};
    const FrameEncoding e = encode_frame(f, qp);
    const auto bytes = frame_bitstream(e.coded);
    const FrameDecoding d = decode_frame(bytes);
    CHECK(d.recon == e.recon);
    CHECK(d.structure == e.coded.structure);
    CHECK(reconstruct(e.coded) == e.recon);
    CHECK(frame_bitstream(encode_frame(f, qp).coded) == bytes);
    // Header plus coded bits, byte aligned.
    CHECK(bytes.size() == 12 + (e.coded.bits() + 7) / 8);
    for (const auto& leaf : e.coded.leaves)
      CHECK(leaf.cost.j == doctest::Approx(leaf.cost.distortion + lambda_from_qp(qp) * leaf.cost.rate).epsilon(1e-9));
  }
}

TEST_CASE("forced encoding") {
  std::mt19937_64 rng(9);
  const Frame f = synth_video(3, 128, 128, 1).frames[0];
  const FrameEncoding opt = encode_frame(f, Qp{32});
  const FrameEncoding same = encode_frame_forced(f, Qp{32}, opt.coded.structure);
  CHECK(frame_bitstream(same.coded) == frame_bitstream(opt.coded));
  for (int t = 0; t < 10; ++t) {
    const StructureMap m = random_map(rng, 128, 128);
    const FrameEncoding forced = encode_frame_forced(f, Qp{32}, m);
    CHECK(decode_frame(frame_bitstream(forced.coded)).structure == m);
  }
  CHECK_THROWS(encode_frame_forced(f, Qp{32}, StructureMap(64, 64)));
  CHECK_THROWS(encode_frame(Frame(60, 64, 0), Qp{32}));
}

TEST_CASE("RDO choice beats sampled alternatives") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 200; ++t) {
    const Frame f = t % 2 ? random_frame(rng, 64, 64) : synth_frame({SynthKind::scene, 0, 8, rng()}, 64, 64);
    const Qp qp{20 + 6 * static_cast<int>(rng() % 4)};
    const double j_opt = encode_frame(f, qp).coded.total_j();
    for (int k = 0; k < 50; ++k) {
      const double j_alt = encode_frame_forced(f, qp, random_map(rng, 64, 64)).coded.total_j();
      REQUIRE(j_opt <= j_alt + 1e-9 * j_alt);
    }
  }
}

TEST_CASE("multi-frame container") {
  const VideoSequence v = synth_video(8, 64, 64, 3);
  const VideoEncoding enc = encode_video(v.frames, Qp{26});
  const DecodedVideo d = read_bitstream(enc.bitstream);
  REQUIRE(d.frames.size() == 3);
  CHECK(d.qp == Qp{26});
  CHECK(d.width == 64);
  for (std::size_t i = 0; i < 3; ++i) CHECK(d.frames[i].recon == enc.frames[i].recon);

  auto bad = enc.bitstream;
  bad[1] = 'X';
  CHECK_THROWS_WITH_AS(read_bitstream(bad), "bad magic", FormatError);
  auto trailing = enc.bitstream;
  trailing.push_back(0);
  CHECK_THROWS_AS(read_bitstream(trailing), FormatError);
  auto cut = enc.bitstream;
  cut.resize(cut.size() / 2);
  CHECK_THROWS_AS(read_bitstream(cut), FormatError);
}

TEST_CASE("RD margins") {
  const Frame f = synth_video(4, 128, 128, 1).frames[0];
  const FrameEncoding e = encode_frame(f, Qp{32});
  const auto margins = rdo_margins(f, e.coded, e.recon);
  CHECK(margins.size() == zigzag_scan(e.coded.structure, false).size());
  for (const auto& m : margins) {
    CHECK(m.delta >= 0.0);
    CHECK(m.epsilon >= 0.0);
    CHECK(m.cu.kind != CuKind::S64);
  }
  // Reproduce epsilon for one CU.
  const auto& m = margins.front();
  double sq = 0;
  for (int y = m.cu.rect.y; y < m.cu.rect.y + m.cu.rect.size; ++y)
    for (int x = m.cu.rect.x; x < m.cu.rect.x + m.cu.rect.size; ++x) {
      const double d = static_cast<double>(e.recon.at(x, y)) - f.at(x, y);
      sq += d * d;
    }
  CHECK(m.epsilon == doctest::Approx(std::sqrt(sq)));

  // Step 1 with exactly predictable content: nothing is lost.
  Frame ramp(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) ramp.at(x, y) = static_cast<std::uint8_t>(100 + (x / 8) * 4);
  const FrameEncoding lossless = encode_frame(ramp, Qp{4});
  for (const auto& mm : rdo_margins(ramp, lossless.coded, lossless.recon)) CHECK(mm.epsilon == 0.0);
}
