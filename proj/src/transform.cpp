#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "custego/codec.hpp"

namespace custego {

Qp::Qp(int value) : value_(value) {
  if (value < 0 || value > 51) throw std::invalid_argument("qp out of range [0, 51]");
}

double lambda_from_qp(Qp qp) { return 0.57 * std::exp2((qp.value() - 12) / 3.0); }

double quant_step(Qp qp) { return std::exp2((qp.value() - 4) / 6.0); }

std::vector<int> predict(const Frame& recon, int x, int y, int n, IntraMode mode) {
  const bool has_top = y > 0, has_left = x > 0;
  std::array<int, 64> top{}, left{};
  for (int i = 0; i < n; ++i) {
    top[static_cast<std::size_t>(i)] = has_top ? recon.at(x + i, y - 1) : 128;
    left[static_cast<std::size_t>(i)] = has_left ? recon.at(x - 1, y + i) : 128;
  }
  std::vector<int> pred(static_cast<std::size_t>(n) * n);
  switch (mode) {
    case IntraMode::DC: {
      int sum = 0, count = 0;
      if (has_top) {
        for (int i = 0; i < n; ++i) sum += top[static_cast<std::size_t>(i)];
        count += n;
      }
      if (has_left) {
        for (int i = 0; i < n; ++i) sum += left[static_cast<std::size_t>(i)];
        count += n;
      }
      const int dc = count == 0 ? 128 : (sum + count / 2) / count;
      std::fill(pred.begin(), pred.end(), dc);
      break;
    }
    case IntraMode::Planar: {
      const int top_right = top[static_cast<std::size_t>(n - 1)];
      const int bottom_left = left[static_cast<std::size_t>(n - 1)];
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          pred[static_cast<std::size_t>(j * n + i)] =
              ((n - 1 - i) * left[static_cast<std::size_t>(j)] + (i + 1) * top_right +
               (n - 1 - j) * top[static_cast<std::size_t>(i)] + (j + 1) * bottom_left + n) /
              (2 * n);
      break;
    }
    case IntraMode::Horizontal:
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) pred[static_cast<std::size_t>(j * n + i)] = left[static_cast<std::size_t>(j)];
      break;
    case IntraMode::Vertical:
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) pred[static_cast<std::size_t>(j * n + i)] = top[static_cast<std::size_t>(i)];
      break;
  }
  return pred;
}

namespace {

// Row k holds basis function k.
const std::vector<double>& dct_matrix(int n) {
  static const auto tables = [] {
    std::array<std::vector<double>, 7> t;
    for (int log2n = 2; log2n <= 6; ++log2n) {
      const int size = 1 << log2n;
      auto& m = t[static_cast<std::size_t>(log2n)];
      m.resize(static_cast<std::size_t>(size) * size);
      for (int k = 0; k < size; ++k) {
        const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / size);
        for (int i = 0; i < size; ++i)
          m[static_cast<std::size_t>(k * size + i)] =
              scale * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * size));
      }
    }
    return t;
  }();
  switch (n) {
    case 4: return tables[2];
    case 8: return tables[3];
    case 16: return tables[4];
    case 32: return tables[5];
    case 64: return tables[6];
    default: throw std::invalid_argument("unsupported transform size");
  }
}

void check_block(std::size_t got, int n) {
  if (got != static_cast<std::size_t>(n) * n) throw std::invalid_argument("block is not n*n");
}

}  // namespace

std::vector<double> dct_forward(std::span<const double> block, int n) {
  const auto& t = dct_matrix(n);
  check_block(block.size(), n);
  const std::size_t sn = static_cast<std::size_t>(n);
  std::vector<double> tmp(sn * sn, 0.0), out(sn * sn, 0.0);
  // tmp = T * X
  for (std::size_t k = 0; k < sn; ++k)
    for (std::size_t i = 0; i < sn; ++i) {
      const double c = t[k * sn + i];
      for (std::size_t j = 0; j < sn; ++j) tmp[k * sn + j] += c * block[i * sn + j];
    }
  // out = tmp * T^T
  for (std::size_t k = 0; k < sn; ++k)
    for (std::size_t l = 0; l < sn; ++l) {
      double acc = 0;
      for (std::size_t j = 0; j < sn; ++j) acc += tmp[k * sn + j] * t[l * sn + j];
      out[k * sn + l] = acc;
    }
  return out;
}

std::vector<double> dct_inverse(std::span<const double> coeffs, int n) {
  const auto& t = dct_matrix(n);
  check_block(coeffs.size(), n);
  const std::size_t sn = static_cast<std::size_t>(n);
  std::vector<double> tmp(sn * sn, 0.0), out(sn * sn, 0.0);
  // tmp = T^T * Y
  for (std::size_t k = 0; k < sn; ++k)
    for (std::size_t i = 0; i < sn; ++i) {
      const double c = t[k * sn + i];
      if (c == 0.0) continue;
      for (std::size_t l = 0; l < sn; ++l) tmp[i * sn + l] += c * coeffs[k * sn + l];
    }
  // out = tmp * T
  for (std::size_t i = 0; i < sn; ++i)
    for (std::size_t j = 0; j < sn; ++j) {
      double acc = 0;
      for (std::size_t l = 0; l < sn; ++l) acc += tmp[i * sn + l] * t[l * sn + j];
      out[i * sn + j] = acc;
    }
  return out;
}

std::vector<std::int32_t> quantize(std::span<const double> coeffs, Qp qp) {
  const double step = quant_step(qp);
  std::vector<std::int32_t> levels(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    levels[i] = static_cast<std::int32_t>(std::lround(coeffs[i] / step));  // half away from zero
  return levels;
}

std::vector<double> dequantize(std::span<const std::int32_t> levels, Qp qp) {
  const double step = quant_step(qp);
  std::vector<double> coeffs(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) coeffs[i] = levels[i] * step;
  return coeffs;
}

}  // namespace custego
