#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "hyperttsv/combinatorics.hpp"
#include "hyperttsv/error.hpp"
#include "hyperttsv/hypergraph.hpp"

namespace hyperttsv {

/// Guard on n^N for the explicit tensor.
inline constexpr std::uint64_t kOracleLimit = 100'000'000;

/// The blowup tensor with every ordered index tuple stored separately.
struct ExplicitBlowup {
  std::size_t n = 0;
  std::size_t order = 0;
  std::map<std::vector<VertexId>, double> entries;
};

inline bool oracle_fits(std::size_t n, std::size_t order) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < order; ++i) {
    if (n != 0 && total > kOracleLimit / n) return false;
    total *= n;
  }
  return total <= kOracleLimit;
}

/// Enumerates, for each edge, all |e|^N maps from tuple positions onto e,
/// keeps the surjective ones and adds w(e)/|beta(e)| at each.
inline ExplicitBlowup build_explicit(const Hypergraph& h) {
  const std::size_t N = h.rank();
  if (!oracle_fits(h.n(), N)) {
    throw Error(Errc::oracle_too_large,
                fmt::format("n^N = {}^{} exceeds the explicit-tensor limit {}", h.n(), N, kOracleLimit));
  }
  ExplicitBlowup t{h.n(), N, {}};
  if (h.empty()) return t;
  const BlowupTable table(static_cast<unsigned>(N));

  std::vector<std::size_t> digits(N);
  std::vector<VertexId> tuple(N);
  std::vector<std::size_t> hits;
  for (const Edge& e : h.edges()) {
    const std::size_t k = e.size();
    const double value = table.scaled_value(static_cast<unsigned>(k), e.weight);
    std::fill(digits.begin(), digits.end(), 0);
    while (true) {
      hits.assign(k, 0);
      for (std::size_t p = 0; p < N; ++p) {
        ++hits[digits[p]];
        tuple[p] = e.vertices[digits[p]];
      }
      bool onto = true;
      for (const std::size_t c : hits) onto = onto && c > 0;
      if (onto) t.entries[tuple] += value;

      std::size_t p = 0;
      while (p < N && ++digits[p] == k) digits[p++] = 0;
      if (p == N) break;
    }
  }
  return t;
}

/// s[i1] = sum over stored tuples starting with i1 of value * prod_{k>=2} b[i_k].
inline std::vector<double> ttsv1_oracle(const ExplicitBlowup& t, std::span<const double> b) {
  if (b.size() != t.n) {
    throw Error(Errc::dimension_mismatch, fmt::format("vector length {} != n = {}", b.size(), t.n));
  }
  std::vector<double> s(t.n, 0.0);
  for (const auto& [idx, value] : t.entries) {
    double prod = value;
    for (std::size_t k = 1; k < idx.size(); ++k) prod *= b[idx[k]];
    s[idx[0]] += prod;
  }
  return s;
}

}  // namespace hyperttsv
