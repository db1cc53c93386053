#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "hyperttsv/combinatorics.hpp"
#include "hyperttsv/error.hpp"
#include "hyperttsv/hypergraph.hpp"

namespace hyperttsv {

enum class CcssMode : std::uint32_t { trimmed = 0, full = 1 };

using NodeRef = std::uint32_t;
inline constexpr NodeRef kNoParent = std::numeric_limits<NodeRef>::max();

struct CcssNode {
  VertexId label;
  NodeRef parent;       // kNoParent for roots
  std::uint32_t level;  // 1-based
  NodeRef child_begin;  // children occupy [child_begin, child_end), ascending label
  NodeRef child_end;
  std::uint32_t leaf_begin;  // owned special leaves occupy [leaf_begin, leaf_end)
  std::uint32_t leaf_end;

  friend bool operator==(const CcssNode&, const CcssNode&) = default;
};

/// The pair (e, v) stored at the node ending the sorted path e \ {v}.
struct SpecialLeaf {
  NodeRef owner;
  VertexId dropped;
  std::uint32_t edge_size;
  double scaled_value;  // w(e) / |beta(e)|
  double leaf_weight;   // w(e) (N-1)! / |beta(e)|, the factor engines apply

  friend bool operator==(const SpecialLeaf&, const SpecialLeaf&) = default;
};

/// Order-independent 64-bit digest of a hypergraph's vertex count, rank and
/// edge multiset. Stored in the forest so engines can reject a forest built
/// from a different hypergraph.
inline std::uint64_t fingerprint(const Hypergraph& h) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t sum = mix(h.n()) ^ (mix(h.rank()) << 1);
  for (const Edge& e : h.edges()) {
    std::uint64_t x = mix(e.size());
    for (const VertexId v : e.vertices) x = mix(x ^ v);
    x = mix(x ^ std::bit_cast<std::uint64_t>(e.weight));
    sum += x;
  }
  return sum;
}

/// Trie-forest over ordered proper subsets of hyperedges with shared
/// prefixes merged. Nodes are stored level by level; within a level they are
/// in lexicographic order of their root paths, so roots are nodes
/// [0, root_count()) and every node's children are contiguous.
class CcssForest {
 public:
  CcssForest() = default;

  std::size_t order() const noexcept { return order_; }
  std::size_t vertex_count() const noexcept { return n_; }
  CcssMode mode() const noexcept { return mode_; }
  std::uint64_t source_fingerprint() const noexcept { return fingerprint_; }

  std::span<const CcssNode> nodes() const noexcept { return nodes_; }
  std::span<const SpecialLeaf> leaves() const noexcept { return leaves_; }
  const CcssNode& node(NodeRef r) const { return nodes_[r]; }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }
  std::size_t level_count() const noexcept { return level_offsets_.empty() ? 0 : level_offsets_.size() - 1; }
  std::size_t root_count() const noexcept { return level_count() == 0 ? 0 : level_offsets_[1]; }

  /// Nodes at `level` (1-based) occupy [level_begin(level), level_begin(level + 1)).
  std::size_t level_begin(std::size_t level) const { return level_offsets_.at(level - 1); }
  std::size_t level_size(std::size_t level) const {
    return level_offsets_.at(level) - level_offsets_.at(level - 1);
  }

  std::span<const SpecialLeaf> leaves_of(NodeRef r) const {
    const CcssNode& nd = nodes_[r];
    return {leaves_.data() + nd.leaf_begin, nd.leaf_end - nd.leaf_begin};
  }

  /// Labels on the path from the root down to r.
  std::vector<VertexId> path(NodeRef r) const {
    std::vector<VertexId> out(nodes_[r].level);
    for (NodeRef u = r; u != kNoParent; u = nodes_[u].parent) out[nodes_[u].level - 1] = nodes_[u].label;
    return out;
  }

  friend bool operator==(const CcssForest&, const CcssForest&) = default;

 private:
  friend CcssForest build_ccss(const Hypergraph&, CcssMode);
  friend CcssForest read_ccss(std::istream&);

  std::size_t order_ = 0;
  std::size_t n_ = 0;
  CcssMode mode_ = CcssMode::trimmed;
  std::uint64_t fingerprint_ = 0;
  std::vector<CcssNode> nodes_;
  std::vector<SpecialLeaf> leaves_;
  std::vector<std::size_t> level_offsets_;
};

/// Upper limit on the number of subset paths materialized in full mode.
inline constexpr std::uint64_t kFullModePathLimit = std::uint64_t{1} << 24;

namespace detail {

struct PathSet {
  std::vector<VertexId> labels;
  std::vector<std::size_t> offsets{0};
  std::vector<std::int64_t> leaf_of;  // index into pending leaves, or -1

  void add(std::span<const VertexId> p, std::int64_t leaf) {
    labels.insert(labels.end(), p.begin(), p.end());
    offsets.push_back(labels.size());
    leaf_of.push_back(leaf);
  }
  std::size_t size() const { return leaf_of.size(); }
  std::span<const VertexId> at(std::size_t i) const {
    return {labels.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

struct PendingLeaf {
  VertexId dropped;
  std::uint32_t edge_size;
  double scaled_value;
  double leaf_weight;
};

}  // namespace detail

/// Builds the forest. Trimmed mode inserts, for every edge e with |e| >= 2 and
/// every v in e, the path e \ {v} and attaches a special leaf for (e, v) to its
/// last node. Full mode also inserts every other proper subset of every edge.
/// Singleton edges contribute nothing.
inline CcssForest build_ccss(const Hypergraph& h, CcssMode mode = CcssMode::trimmed) {
  CcssForest f;
  f.order_ = h.rank();
  f.n_ = h.n();
  f.mode_ = mode;
  f.fingerprint_ = fingerprint(h);
  if (h.rank() > kMaxOrder) {
    throw Error(Errc::order_too_large, fmt::format("rank {} exceeds {}", h.rank(), kMaxOrder));
  }

  detail::PathSet paths;
  std::vector<detail::PendingLeaf> pending;
  if (mode == CcssMode::full) {
    std::uint64_t total = 0;
    for (const Edge& e : h.edges()) {
      if (e.size() >= 2) total += (e.size() >= 63) ? kFullModePathLimit : (std::uint64_t{1} << e.size()) - 2;
      if (total >= kFullModePathLimit) {
        throw Error(Errc::invalid_argument, "full-mode forest exceeds the subset path limit");
      }
    }
  }

  const BlowupTable table = h.empty() ? BlowupTable() : BlowupTable(static_cast<unsigned>(h.rank()));
  std::vector<VertexId> scratch;
  for (const Edge& e : h.edges()) {
    const std::size_t k = e.size();
    if (k < 2) continue;
    const double value = table.scaled_value(static_cast<unsigned>(k), e.weight);
    const double weight = e.weight * table.leaf_scale(static_cast<unsigned>(k));
    for (std::size_t j = 0; j < k; ++j) {
      scratch.clear();
      for (std::size_t i = 0; i < k; ++i) {
        if (i != j) scratch.push_back(e.vertices[i]);
      }
      paths.add(scratch, static_cast<std::int64_t>(pending.size()));
      pending.push_back({e.vertices[j], static_cast<std::uint32_t>(k), value, weight});
    }
    if (mode == CcssMode::full && k > 2) {
      const std::uint64_t all = (std::uint64_t{1} << k) - 1;
      for (std::uint64_t mask = 1; mask < all; ++mask) {
        if (std::popcount(mask) >= static_cast<int>(k) - 1) continue;  // size k-1 already added
        scratch.clear();
        for (std::size_t i = 0; i < k; ++i) {
          if (mask & (std::uint64_t{1} << i)) scratch.push_back(e.vertices[i]);
        }
        paths.add(scratch, -1);
      }
    }
  }

  // Sorting the paths lexicographically lets the trie be built in one sweep:
  // each path shares exactly its common prefix with the previous one.
  std::vector<std::size_t> order(paths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto pa = paths.at(a), pb = paths.at(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  });

  struct Pre {
    VertexId label;
    std::uint32_t parent;
    std::uint32_t level;
  };
  std::vector<Pre> pre;                     // preorder
  std::vector<std::uint32_t> leaf_owner_pre(pending.size());
  std::vector<std::uint32_t> stack;         // preorder ids along the previous path
  std::span<const VertexId> prev;
  for (const std::size_t idx : order) {
    const auto p = paths.at(idx);
    std::size_t common = 0;
    while (common < p.size() && common < prev.size() && p[common] == prev[common]) ++common;
    stack.resize(common);
    for (std::size_t d = common; d < p.size(); ++d) {
      const std::uint32_t parent = d == 0 ? kNoParent : stack[d - 1];
      stack.push_back(static_cast<std::uint32_t>(pre.size()));
      pre.push_back({p[d], parent, static_cast<std::uint32_t>(d + 1)});
    }
    if (paths.leaf_of[idx] >= 0) leaf_owner_pre[static_cast<std::size_t>(paths.leaf_of[idx])] = stack.back();
    prev = p;
  }
  if (pre.size() >= kNoParent) throw Error(Errc::overflow, "forest exceeds 2^32 nodes");

  // Regroup by level; a stable partition keeps lexicographic order per level.
  const std::size_t levels = pre.empty() ? 0 : std::max_element(pre.begin(), pre.end(), [](auto& a, auto& b) {
                                                   return a.level < b.level;
                                                 })->level;
  f.level_offsets_.assign(levels + 1, 0);
  for (const Pre& p : pre) ++f.level_offsets_[p.level];
  std::partial_sum(f.level_offsets_.begin(), f.level_offsets_.end(), f.level_offsets_.begin());
  std::vector<NodeRef> remap(pre.size());
  {
    std::vector<std::size_t> cursor(f.level_offsets_.begin(), f.level_offsets_.end() - 1);
    for (std::size_t i = 0; i < pre.size(); ++i) remap[i] = static_cast<NodeRef>(cursor[pre[i].level - 1]++);
  }
  f.nodes_.resize(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const NodeRef parent = pre[i].parent == kNoParent ? kNoParent : remap[pre[i].parent];
    f.nodes_[remap[i]] = CcssNode{pre[i].label, parent, pre[i].level, 0, 0, 0, 0};
  }
  for (std::size_t r = 0; r < f.nodes_.size(); ++r) {
    CcssNode& nd = f.nodes_[r];
    nd.child_begin = nd.child_end = static_cast<NodeRef>(nd.level < levels ? f.level_offsets_[nd.level] : f.nodes_.size());
  }
  // Children are contiguous in the next level, in parent order.
  for (std::size_t r = f.root_count(); r < f.nodes_.size(); ++r) {
    CcssNode& parent = f.nodes_[f.nodes_[r].parent];
    if (parent.child_end == parent.child_begin) parent.child_begin = static_cast<NodeRef>(r);
    parent.child_end = static_cast<NodeRef>(r + 1);
  }
  for (CcssNode& nd : f.nodes_) {
    if (nd.child_end == nd.child_begin) nd.child_begin = nd.child_end = 0;
  }

  f.leaves_.resize(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    f.leaves_[i] = SpecialLeaf{remap[leaf_owner_pre[i]], pending[i].dropped, pending[i].edge_size,
                               pending[i].scaled_value, pending[i].leaf_weight};
  }
  std::sort(f.leaves_.begin(), f.leaves_.end(), [](const SpecialLeaf& a, const SpecialLeaf& b) {
    return std::tie(a.owner, a.dropped, a.edge_size, a.leaf_weight) <
           std::tie(b.owner, b.dropped, b.edge_size, b.leaf_weight);
  });
  for (std::uint32_t i = 0; i < f.leaves_.size(); ++i) {
    CcssNode& nd = f.nodes_[f.leaves_[i].owner];
    if (nd.leaf_end == nd.leaf_begin) nd.leaf_begin = i;
    nd.leaf_end = i + 1;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Statistics

struct CcssStats {
  std::uint64_t node_count = 0;
  std::uint64_t leaf_count = 0;
  std::uint64_t root_count = 0;
  std::vector<std::uint64_t> level_nodes;  // index 0 is level 1
  std::uint64_t coo_units = 0;   // sum over edges of |e| + 1
  std::uint64_t ccss_units = 0;  // node_count + 2 * leaf_count
  double compression_ratio = 1.0;
};

inline CcssStats ccss_stats(const CcssForest& f, const Hypergraph& h) {
  CcssStats s;
  s.node_count = f.node_count();
  s.leaf_count = f.leaf_count();
  s.root_count = f.root_count();
  for (std::size_t l = 1; l <= f.level_count(); ++l) s.level_nodes.push_back(f.level_size(l));
  for (const Edge& e : h.edges()) s.coo_units += e.size() + 1;
  s.ccss_units = s.node_count + 2 * s.leaf_count;
  if (s.ccss_units > 0) s.compression_ratio = static_cast<double>(s.coo_units) / static_cast<double>(s.ccss_units);
  return s;
}

/// Sum over edges of 2^|e| - 1, saturating at 2^64 - 1.
inline std::uint64_t worst_case_bound(const Hypergraph& h) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 0;
  for (const Edge& e : h.edges()) {
    const std::uint64_t term = e.size() >= 64 ? kMax : (std::uint64_t{1} << e.size()) - 1;
    if (total > kMax - term) return kMax;
    total += term;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Binary serialization (layout in docs/ccss-format.md)

inline constexpr char kCcssMagic[8] = {'C', 'C', 'S', 'S', 'F', 'R', 'S', 'T'};
inline constexpr std::uint32_t kCcssVersion = 1;

namespace detail {

template <class T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U u = std::bit_cast<U>(value);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>(u & 0xffu);
    u >>= 8;
  }
  out.write(buf, sizeof(U));
}

template <class T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) throw Error(Errc::format, "truncated forest file");
  U u = 0;
  for (std::size_t i = sizeof(U); i-- > 0;) u = (u << 8) | buf[i];
  return std::bit_cast<T>(u);
}

}  // namespace detail

inline void write_ccss(std::ostream& out, const CcssForest& f) {
  using detail::put_le;
  out.write(kCcssMagic, sizeof kCcssMagic);
  put_le<std::uint32_t>(out, kCcssVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.mode()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.order()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.level_count()));
  put_le<std::uint64_t>(out, f.vertex_count());
  put_le<std::uint64_t>(out, f.source_fingerprint());
  put_le<std::uint64_t>(out, f.node_count());
  put_le<std::uint64_t>(out, f.leaf_count());
  for (const CcssNode& nd : f.nodes()) {
    put_le(out, nd.label);
    put_le(out, nd.parent);
    put_le(out, nd.level);
    put_le(out, nd.child_begin);
    put_le(out, nd.child_end);
    put_le(out, nd.leaf_begin);
    put_le(out, nd.leaf_end);
  }
  for (const SpecialLeaf& lf : f.leaves()) {
    put_le(out, lf.owner);
    put_le(out, lf.dropped);
    put_le(out, lf.edge_size);
    put_le<std::uint32_t>(out, 0);
    put_le(out, lf.scaled_value);
    put_le(out, lf.leaf_weight);
  }
  if (!out) throw Error(Errc::io, "forest write failure");
}

/// Reads and structurally validates a forest written by write_ccss.
inline CcssForest read_ccss(std::istream& in) {
  using detail::get_le;
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCcssMagic, sizeof magic) != 0) {
    throw Error(Errc::format, "not a CCSS forest file");
  }
  if (const auto v = get_le<std::uint32_t>(in); v != kCcssVersion) {
    throw Error(Errc::format, fmt::format("unsupported forest version {}", v));
  }
  CcssForest f;
  const auto mode = get_le<std::uint32_t>(in);
  if (mode > 1) throw Error(Errc::format, "bad forest mode");
  f.mode_ = static_cast<CcssMode>(mode);
  f.order_ = get_le<std::uint32_t>(in);
  const auto levels = get_le<std::uint32_t>(in);
  f.n_ = get_le<std::uint64_t>(in);
  f.fingerprint_ = get_le<std::uint64_t>(in);
  const auto node_count = get_le<std::uint64_t>(in);
  const auto leaf_count = get_le<std::uint64_t>(in);
  if (node_count >= kNoParent || leaf_count >= kNoParent || levels > kMaxOrder) {
    throw Error(Errc::format, "forest header out of range");
  }
  f.nodes_.resize(node_count);
  f.leaves_.resize(leaf_count);
  f.level_offsets_.assign(levels + 1, 0);
  for (std::size_t r = 0; r < node_count; ++r) {
    CcssNode& nd = f.nodes_[r];
    nd.label = get_le<std::uint32_t>(in);
    nd.parent = get_le<std::uint32_t>(in);
    nd.level = get_le<std::uint32_t>(in);
    nd.child_begin = get_le<std::uint32_t>(in);
    nd.child_end = get_le<std::uint32_t>(in);
    nd.leaf_begin = get_le<std::uint32_t>(in);
    nd.leaf_end = get_le<std::uint32_t>(in);
    const bool ok = nd.level >= 1 && nd.level <= levels && nd.label < f.n_ &&
                    (r == 0 || f.nodes_[r - 1].level <= nd.level) &&
                    ((nd.level == 1) == (nd.parent == kNoParent)) &&
                    (nd.parent == kNoParent || (nd.parent < r && f.nodes_[nd.parent].level + 1 == nd.level &&
                                                f.nodes_[nd.parent].label < nd.label)) &&
                    nd.child_begin <= nd.child_end && nd.child_end <= node_count &&
                    nd.leaf_begin <= nd.leaf_end && nd.leaf_end <= leaf_count;
    if (!ok) throw Error(Errc::format, fmt::format("invalid forest node {}", r));
    ++f.level_offsets_[nd.level];
  }
  for (NodeRef r = 0; r < node_count; ++r) {
    const NodeRef p = f.nodes_[r].parent;
    if (p != kNoParent && (r < f.nodes_[p].child_begin || r >= f.nodes_[p].child_end)) {
      throw Error(Errc::format, fmt::format("node {} lies outside its parent's child range", r));
    }
  }
  std::partial_sum(f.level_offsets_.begin(), f.level_offsets_.end(), f.level_offsets_.begin());
  for (std::size_t i = 0; i < leaf_count; ++i) {
    SpecialLeaf& lf = f.leaves_[i];
    lf.owner = get_le<std::uint32_t>(in);
    lf.dropped = get_le<std::uint32_t>(in);
    lf.edge_size = get_le<std::uint32_t>(in);
    (void)get_le<std::uint32_t>(in);
    lf.scaled_value = get_le<double>(in);
    lf.leaf_weight = get_le<double>(in);
    if (lf.owner >= node_count || lf.dropped >= f.n_ || lf.edge_size != f.nodes_[lf.owner].level + 1 ||
        i < f.nodes_[lf.owner].leaf_begin || i >= f.nodes_[lf.owner].leaf_end) {
      throw Error(Errc::format, fmt::format("invalid special leaf {}", i));
    }
  }
  return f;
}

}  // namespace hyperttsv
