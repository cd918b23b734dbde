#include "custego/stc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "custego/errors.hpp"

namespace custego {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Column `j` of the h-row sub-matrix shared by all blocks.
std::uint32_t submatrix_column(const StcParams& p, std::size_t j) {
  if (j == 0) return p.hhat;
  const std::uint32_t mask = (1u << p.h) - 1;
  const std::uint32_t edges = 1u | (1u << (p.h - 1));
  return (static_cast<std::uint32_t>(mix(p.seed ^ mix(j))) & mask) | edges;
}

}  // namespace

void validate(const StcParams& p) {
  if (p.h < 2 || p.h > 12) throw std::invalid_argument("constraint height must be in [2, 12]");
  if (p.hhat >> p.h) throw std::invalid_argument("hhat has bits above the constraint height");
  if (!(p.hhat & 1u) || !(p.hhat & (1u << (p.h - 1))))
    throw std::invalid_argument("hhat must have its top and bottom bits set");
}

std::uint32_t default_hhat(int h) {
  if (h < 2 || h > 12) throw std::invalid_argument("constraint height must be in [2, 12]");
  std::uint32_t v = 1u << (h - 1);
  for (int r = 0; r < h; ++r)
    if (r % 3 != 2) v |= 1u << r;
  return v;
}

ParityLayout build_parity(std::size_t n, std::size_t m, const StcParams& params) {
  validate(params);
  if (m == 0) throw std::invalid_argument("message length must be positive");
  if (m > n) throw std::invalid_argument("message longer than cover");
  ParityLayout layout;
  layout.n = n;
  layout.m = m;
  layout.h = params.h;
  const std::size_t width = n / m, extra = n % m;
  for (std::size_t b = 0; b < m; ++b) {
    const std::size_t w = width + (b < extra ? 1 : 0);
    const std::size_t rows = std::min<std::size_t>(static_cast<std::size_t>(params.h), m - b);
    const std::uint32_t keep = (1u << rows) - 1;
    for (std::size_t j = 0; j < w; ++j) {
      layout.columns.push_back(submatrix_column(params, j) & keep);
      layout.first_row.push_back(b);
    }
    layout.block_end.push_back(layout.columns.size());
  }
  return layout;
}

std::vector<std::vector<std::uint8_t>> ParityLayout::dense() const {
  std::vector<std::vector<std::uint8_t>> H(m, std::vector<std::uint8_t>(n, 0));
  for (std::size_t j = 0; j < n; ++j)
    for (int r = 0; r < h; ++r)
      if ((columns[j] >> r) & 1u) H[first_row[j] + static_cast<std::size_t>(r)][j] = 1;
  return H;
}

std::vector<std::uint8_t> ParityLayout::syndrome(std::span<const std::uint8_t> word) const {
  if (word.size() != n) throw std::invalid_argument("word length does not match parity matrix");
  std::vector<std::uint8_t> s(m, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!(word[j] & 1u)) continue;
    for (int r = 0; r < h; ++r)
      if ((columns[j] >> r) & 1u) s[first_row[j] + static_cast<std::size_t>(r)] ^= 1u;
  }
  return s;
}

StcResult stc_embed(std::span<const std::uint8_t> cover, std::span<const double> costs,
                    std::span<const std::uint8_t> message, const StcParams& params) {
  validate(params);
  if (costs.size() != cover.size()) throw std::invalid_argument("cost vector length differs from cover");
  if (message.size() > cover.size()) throw std::invalid_argument("message longer than cover");
  for (double c : costs)
    if (std::isnan(c) || c < 0) throw std::invalid_argument("costs must be non-negative");

  StcResult result;
  result.stego.assign(cover.begin(), cover.end());
  for (auto& b : result.stego) b &= 1u;
  if (message.empty()) return result;

  const ParityLayout layout = build_parity(cover.size(), message.size(), params);
  const std::size_t n = cover.size();

  double finite_sum = 0;
  for (double c : costs)
    if (std::isfinite(c)) finite_sum += c;
  const double wet = finite_sum + 1.0;  // above any finite path
  auto weight = [&](std::size_t j) { return std::isfinite(costs[j]) ? costs[j] : wet; };

  const std::size_t states = std::size_t{1} << params.h;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(states, inf), next(states, inf);
  cost[0] = 0;
  // One bit per (column, state): the chosen stego bit.
  const std::size_t words_per_column = (states + 63) / 64;
  std::vector<std::uint64_t> path(n * words_per_column, 0);

  std::size_t j = 0;
  for (std::size_t b = 0; b < layout.m; ++b) {
    for (; j < layout.block_end[b]; ++j) {
      const std::uint32_t col = layout.columns[j];
      const bool cover_bit = result.stego[j] != 0;
      const double w = weight(j);
      const double cost0 = cover_bit ? w : 0.0;  // stego bit 0
      const double cost1 = cover_bit ? 0.0 : w;  // stego bit 1
      std::uint64_t* bits = &path[j * words_per_column];
      for (std::size_t s = 0; s < states; ++s) {
        const double via0 = cost[s] + cost0;
        const double via1 = cost[s ^ col] + cost1;
        // Equal cost: keep the cover bit.
        const bool take1 = via1 < via0 || (via1 == via0 && cover_bit);
        next[s] = take1 ? via1 : via0;
        if (take1) bits[s / 64] |= std::uint64_t{1} << (s % 64);
      }
      std::swap(cost, next);
    }
    const std::size_t bit = message[b] & 1u;
    for (std::size_t t = 0; t < states / 2; ++t) next[t] = cost[(t << 1) | bit];
    std::fill(next.begin() + static_cast<std::ptrdiff_t>(states / 2), next.end(), inf);
    std::swap(cost, next);
  }

  if (!(cost[0] < wet)) throw ExtractionError("STC infeasible: syndrome needs a wet position");

  std::size_t state = 0;
  j = n;
  for (std::size_t b = layout.m; b-- > 0;) {
    state = (state << 1) | (message[b] & 1u);
    const std::size_t begin = b == 0 ? 0 : layout.block_end[b - 1];
    while (j > begin) {
      --j;
      const bool y = (path[j * words_per_column + state / 64] >> (state % 64)) & 1u;
      result.stego[j] = y ? 1 : 0;
      if (y) state ^= layout.columns[j];
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (result.stego[k] != (cover[k] & 1u)) {
      result.cost += costs[k];
      ++result.changes;
    }
  }
  return result;
}

std::vector<std::uint8_t> stc_extract(std::span<const std::uint8_t> stego, std::size_t m,
                                      const StcParams& params) {
  if (m > stego.size()) throw std::invalid_argument("message length exceeds stego length");
  if (m == 0) return {};
  return build_parity(stego.size(), m, params).syndrome(stego);
}

}  // namespace custego
