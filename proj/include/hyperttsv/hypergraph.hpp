#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "hyperttsv/error.hpp"

namespace hyperttsv {

/// Internal vertex ids are 0-based; files and user-facing output are 1-based.
using VertexId = std::uint32_t;

struct Edge {
  std::vector<VertexId> vertices;  // strictly increasing
  double weight = 0.0;

  std::size_t size() const noexcept { return vertices.size(); }

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Edge with the default weight |e|. Vertices are sorted and de-duplicated.
inline Edge make_edge(std::vector<VertexId> vertices) {
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  const double w = static_cast<double>(vertices.size());
  return Edge{std::move(vertices), w};
}

inline Edge make_edge(std::vector<VertexId> vertices, double weight) {
  Edge e = make_edge(std::move(vertices));
  e.weight = weight;
  return e;
}

/// Immutable vertex count plus list of weighted hyperedges. Duplicate edges
/// are kept as separate entries.
class Hypergraph {
 public:
  Hypergraph() = default;

  Hypergraph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const Edge& e = edges_[i];
      if (e.vertices.empty()) throw Error(Errc::empty_edge, fmt::format("edge {} is empty", i));
      for (std::size_t j = 0; j < e.vertices.size(); ++j) {
        if (e.vertices[j] >= n_) {
          throw Error(Errc::invalid_argument,
                      fmt::format("edge {} has vertex {} outside 1..{}", i, e.vertices[j] + 1, n_));
        }
        if (j > 0 && e.vertices[j - 1] >= e.vertices[j]) {
          throw Error(Errc::invalid_argument,
                      fmt::format("edge {} vertices are not strictly increasing", i));
        }
      }
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
        throw Error(Errc::invalid_argument, fmt::format("edge {} has non-positive weight", i));
      }
      rank_ = std::max(rank_, e.vertices.size());
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t rank() const noexcept { return rank_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return edges_.empty(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t i) const { return edges_.at(i); }

  friend bool operator==(const Hypergraph&, const Hypergraph&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t rank_ = 0;
  std::vector<Edge> edges_;
};

// ---------------------------------------------------------------------------
// Text edge-list format

struct ParseReport {
  /// 1-based line numbers whose vertex list contained repeats.
  std::vector<std::size_t> deduplicated_lines;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

/// Reads one edge per line: whitespace-separated 1-based vertex ids, plus a
/// trailing positive real weight when `weighted` is set. Lines starting with
/// '#' and blank lines are skipped. n is the largest id seen, or the value of
/// a `# vertices: N` comment when that is larger.
inline Hypergraph parse_hypergraph(std::istream& in, bool weighted, ParseReport* report = nullptr) {
  std::vector<Edge> edges;
  std::uint64_t max_id = 0;
  std::uint64_t declared_n = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = detail::trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      constexpr std::string_view directive = "vertices:";
      const std::string_view rest = detail::trim(body.substr(1));
      if (rest.starts_with(directive)) {
        const std::string_view num = detail::trim(rest.substr(directive.size()));
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
        if (ec == std::errc{} && ptr == num.data() + num.size()) declared_n = v;
      }
      continue;
    }
    auto tokens = detail::split_ws(body);

    double weight = 0.0;
    if (weighted) {
      const std::string_view wtok = tokens.back();
      tokens.pop_back();
      const auto [ptr, ec] = std::from_chars(wtok.data(), wtok.data() + wtok.size(), weight);
      if (ec != std::errc{} || ptr != wtok.data() + wtok.size() || !std::isfinite(weight) ||
          weight <= 0.0) {
        throw Error(Errc::malformed_line,
                    fmt::format("line {}: weight '{}' is not a positive real", lineno, wtok));
      }
    }

    std::vector<VertexId> verts;
    verts.reserve(tokens.size());
    for (const std::string_view tok : tokens) {
      std::uint64_t id = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
      if (ec != std::errc{} || ptr != tok.data() + tok.size() ||
          id > std::numeric_limits<VertexId>::max()) {
        throw Error(Errc::malformed_line,
                    fmt::format("line {}: token '{}' is not a vertex id", lineno, tok));
      }
      if (id == 0) throw Error(Errc::zero_vertex_id, fmt::format("line {}: vertex ids are 1-based", lineno));
      max_id = std::max(max_id, id);
      verts.push_back(static_cast<VertexId>(id - 1));
    }
    if (verts.empty()) throw Error(Errc::empty_edge, fmt::format("line {}: no vertices", lineno));

    const std::size_t before = verts.size();
    Edge e = make_edge(std::move(verts));
    if (e.size() != before && report != nullptr) report->deduplicated_lines.push_back(lineno);
    if (weighted) e.weight = weight;
    edges.push_back(std::move(e));
  }
  if (in.bad()) throw Error(Errc::io, "read failure");
  return Hypergraph(static_cast<std::size_t>(std::max(max_id, declared_n)), std::move(edges));
}

inline Hypergraph parse_hypergraph(std::string_view text, bool weighted,
                                   ParseReport* report = nullptr) {
  std::istringstream in{std::string(text)};
  return parse_hypergraph(in, weighted, report);
}

inline Hypergraph load_hypergraph(const std::filesystem::path& path, bool weighted,
                                  ParseReport* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  return parse_hypergraph(in, weighted, report);
}

/// Writes the edge-list format; weights are printed with 17 significant
/// digits so that parsing the output reproduces the hypergraph exactly.
inline void write_hypergraph(std::ostream& out, const Hypergraph& h, bool weighted) {
  out << "# vertices: " << h.n() << '\n';
  std::string buf;
  for (const Edge& e : h.edges()) {
    buf.clear();
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (j > 0) buf.push_back(' ');
      fmt::format_to(std::back_inserter(buf), "{}", e.vertices[j] + 1);
    }
    if (weighted) fmt::format_to(std::back_inserter(buf), " {:.17g}", e.weight);
    buf.push_back('\n');
    out << buf;
  }
  if (!out) throw Error(Errc::io, "write failure");
}

// ---------------------------------------------------------------------------
// Queries

/// Keeps exactly the edges with |e| <= max_size; n is unchanged.
inline Hypergraph filter_by_max_size(const Hypergraph& h, std::size_t max_size) {
  std::vector<Edge> kept;
  for (const Edge& e : h.edges()) {
    if (e.size() <= max_size) kept.push_back(e);
  }
  return Hypergraph(h.n(), std::move(kept));
}

/// Each incident edge contributes w(e)/|e|, i.e. 1 under the default weights.
inline std::vector<double> degrees(const Hypergraph& h) {
  std::vector<double> d(h.n(), 0.0);
  for (const Edge& e : h.edges()) {
    const double share = e.weight / static_cast<double>(e.size());
    for (const VertexId v : e.vertices) d[v] += share;
  }
  return d;
}

/// Vertex -> incident edge indices, in CSR layout.
struct Incidence {
  std::vector<std::size_t> offsets;  // n + 1
  std::vector<std::uint32_t> edges;

  std::span<const std::uint32_t> of(VertexId v) const {
    return {edges.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
};

inline Incidence incidence(const Hypergraph& h) {
  Incidence inc;
  inc.offsets.assign(h.n() + 1, 0);
  for (const Edge& e : h.edges()) {
    for (const VertexId v : e.vertices) ++inc.offsets[v + 1];
  }
  std::partial_sum(inc.offsets.begin(), inc.offsets.end(), inc.offsets.begin());
  inc.edges.resize(inc.offsets.back());
  std::vector<std::size_t> cursor(inc.offsets.begin(), inc.offsets.end() - 1);
  for (std::size_t i = 0; i < h.edge_count(); ++i) {
    for (const VertexId v : h.edge(i).vertices) inc.edges[cursor[v]++] = static_cast<std::uint32_t>(i);
  }
  return inc;
}

/// True iff the vertex/edge incidence graph joins all of 1..n into one
/// component. Isolated vertices make the answer false when n > 1.
inline bool is_connected(const Hypergraph& h) {
  if (h.n() <= 1) return true;
  std::vector<VertexId> parent(h.n());
  std::iota(parent.begin(), parent.end(), VertexId{0});
  auto find = [&](VertexId v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  std::size_t components = h.n();
  for (const Edge& e : h.edges()) {
    const VertexId r0 = find(e.vertices.front());
    for (std::size_t j = 1; j < e.size(); ++j) {
      const VertexId r = find(e.vertices[j]);
      if (r != r0) {
        parent[r] = r0;
        --components;
      }
    }
  }
  return components == 1;
}

/// Histogram of edge sizes, index k = number of edges of size k.
inline std::vector<std::size_t> size_histogram(const Hypergraph& h) {
  std::vector<std::size_t> hist(h.rank() + 1, 0);
  for (const Edge& e : h.edges()) ++hist[e.size()];
  return hist;
}

// ---------------------------------------------------------------------------
// Synthetic generation

struct GenSpec {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t rank = 0;  // positive multiple of 5
  std::uint64_t seed = 0;
};

namespace detail {

// Floyd's algorithm: a uniform k-subset of [0, n).
template <class Rng>
std::vector<VertexId> random_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::unordered_set<VertexId> chosen;
  chosen.reserve(k * 2);
  std::vector<VertexId> out;
  out.reserve(k);
  for (std::size_t j = n - k; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const auto t = static_cast<VertexId>(pick(rng));
    const VertexId v = chosen.insert(t).second ? t : static_cast<VertexId>(j);
    if (v != t) chosen.insert(v);
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Component orders 5, 10, ..., rank each receive floor(m/k) edges drawn
/// uniformly from all subsets of that size; the remainder goes to the
/// largest order.
inline Hypergraph generate_synthetic(const GenSpec& spec) {
  if (spec.rank == 0 || spec.rank % 5 != 0) {
    throw Error(Errc::invalid_argument, "rank must be a positive multiple of 5");
  }
  if (spec.n < spec.rank) {
    throw Error(Errc::rank_exceeds_vertices,
                fmt::format("rank {} exceeds vertex count {}", spec.rank, spec.n));
  }
  const std::size_t k = spec.rank / 5;
  const std::size_t quota = spec.m / k;
  std::mt19937_64 rng(spec.seed);
  std::vector<Edge> edges;
  edges.reserve(spec.m);
  for (std::size_t l = 1; l <= k; ++l) {
    const std::size_t order = 5 * l;
    const std::size_t count = (l == k) ? spec.m - quota * (k - 1) : quota;
    for (std::size_t i = 0; i < count; ++i) {
      edges.push_back(make_edge(detail::random_subset(spec.n, order, rng)));
    }
  }
  return Hypergraph(spec.n, std::move(edges));
}

/// Seeded vector with entries uniform in [lo, hi).
inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = 0.1,
                                         double hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> b(n);
  for (double& x : b) x = dist(rng);
  return b;
}

}  // namespace hyperttsv
