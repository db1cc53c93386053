#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "test_support.hpp"

namespace hyperttsv {
namespace {

using testing::fig1;
using testing::single_edge;

std::set<std::vector<VertexId>> path_set(const CcssForest& f) {
  std::set<std::vector<VertexId>> out;
  for (NodeRef r = 0; r < f.node_count(); ++r) out.insert(f.path(r));
  return out;
}

NodeRef find_path(const CcssForest& f, const std::vector<VertexId>& p) {
  for (NodeRef r = 0; r < f.node_count(); ++r) {
    if (f.path(r) == p) return r;
  }
  return kNoParent;
}

/// Every leaf's path plus its dropped vertex is a source edge, and each edge's
/// vertices are each dropped exactly once.
void expect_reconstruction(const CcssForest& f, const Hypergraph& h) {
  std::map<std::vector<VertexId>, std::multiset<VertexId>> dropped_by_edge;
  for (const SpecialLeaf& lf : f.leaves()) {
    auto e = f.path(lf.owner);
    e.push_back(lf.dropped);
    std::sort(e.begin(), e.end());
    EXPECT_EQ(std::adjacent_find(e.begin(), e.end()), e.end());
    EXPECT_EQ(lf.edge_size, e.size());
    EXPECT_EQ(f.node(lf.owner).level + 1, lf.edge_size);
    dropped_by_edge[e].insert(lf.dropped);
  }
  std::map<std::vector<VertexId>, std::size_t> multiplicity;
  for (const Edge& e : h.edges()) {
    if (e.size() >= 2) ++multiplicity[e.vertices];
  }
  ASSERT_EQ(dropped_by_edge.size(), multiplicity.size());
  for (const auto& [verts, count] : multiplicity) {
    std::multiset<VertexId> want;
    for (std::size_t c = 0; c < count; ++c) want.insert(verts.begin(), verts.end());
    EXPECT_EQ(dropped_by_edge[verts], want);
  }
}

void expect_structure(const CcssForest& f) {
  std::set<std::pair<NodeRef, VertexId>> seen;
  for (NodeRef r = 0; r < f.node_count(); ++r) {
    const CcssNode& nd = f.node(r);
    const auto p = f.path(r);
    EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
    EXPECT_EQ(std::adjacent_find(p.begin(), p.end()), p.end());
    EXPECT_TRUE(seen.insert({nd.parent, nd.label}).second) << "duplicate child label";
    for (NodeRef c = nd.child_begin; c < nd.child_end; ++c) {
      EXPECT_EQ(f.node(c).parent, r);
      if (c > nd.child_begin) {
        EXPECT_LT(f.node(c - 1).label, f.node(c).label);
      }
    }
    if (r > 0) {
      EXPECT_LE(f.node(r - 1).level, nd.level);
    }
  }
  EXPECT_LE(f.level_count() + 1, std::max<std::size_t>(f.order(), 1));
}

TEST(Build, Fig1SharedPrefix) {
  const Hypergraph h = fig1();
  const CcssForest f = build_ccss(h);
  expect_structure(f);
  // path (1,4) is shared by {1,4,6} and {1,3,4,6}; ids are 0-based here
  const NodeRef n14 = find_path(f, {0, 3});
  ASSERT_NE(n14, kNoParent);
  const auto own = f.leaves_of(n14);
  ASSERT_EQ(own.size(), 1u);
  EXPECT_EQ(own[0].dropped, 5u);
  EXPECT_EQ(own[0].edge_size, 3u);
  EXPECT_DOUBLE_EQ(own[0].scaled_value, 3.0 / 36.0);  // |beta| = 3! S(4,3) = 36
  const NodeRef n146 = find_path(f, {0, 3, 5});
  ASSERT_NE(n146, kNoParent);
  EXPECT_EQ(f.node(n146).parent, n14);
  ASSERT_EQ(f.leaves_of(n146).size(), 1u);
  EXPECT_EQ(f.leaves_of(n146)[0].dropped, 2u);
  EXPECT_DOUBLE_EQ(f.leaves_of(n146)[0].scaled_value, 4.0 / 24.0);
}

TEST(Build, Fig1Counts) {
  const Hypergraph h = fig1();
  const CcssForest f = build_ccss(h);
  EXPECT_EQ(f.leaf_count(), 21u);
  EXPECT_EQ(worst_case_bound(h), 70u);
  expect_reconstruction(f, h);
  const CcssStats s = ccss_stats(f, h);
  EXPECT_EQ(s.coo_units, 27u);
  EXPECT_EQ(s.ccss_units, f.node_count() + 42);
  EXPECT_GT(s.compression_ratio, 0.0);
}

TEST(Build, PairEdgeHasTwoRootLeaves) {
  const Hypergraph h = testing::from_lists(7, {{5, 7}});
  const CcssForest f = build_ccss(h);
  EXPECT_EQ(f.root_count(), 2u);
  EXPECT_EQ(f.node_count(), 2u);
  EXPECT_EQ(f.node(0).label, 4u);
  EXPECT_EQ(f.node(1).label, 6u);
  EXPECT_EQ(f.leaves_of(0).size(), 1u);
  EXPECT_EQ(f.leaves_of(0)[0].dropped, 6u);
  EXPECT_EQ(f.leaves_of(1)[0].dropped, 4u);
}

TEST(Build, SingleEdgeTrimmedMatchesPrefixOracle) {
  for (std::size_t k = 2; k <= 12; ++k) {
    const CcssForest f = build_ccss(single_edge(k));
    EXPECT_EQ(f.node_count(), testing::count_trimmed_prefixes(k)) << k;
    EXPECT_EQ(f.node_count(), k * (k + 1) / 2 - 1) << k;
    EXPECT_EQ(f.root_count(), 2u);
    EXPECT_EQ(f.leaf_count(), k);
  }
}

TEST(Build, SingleEdgeFullMatchesSubsetOracle) {
  for (std::size_t k = 2; k <= 12; ++k) {
    const CcssForest f = build_ccss(single_edge(k), CcssMode::full);
    EXPECT_EQ(f.node_count(), testing::count_proper_subsets(k)) << k;
    EXPECT_EQ(f.node_count(), (std::size_t{1} << k) - 2) << k;
    for (std::size_t l = 1; l < k; ++l) {
      std::size_t binom = 1;
      for (std::size_t i = 0; i < l; ++i) binom = binom * (k - i) / (i + 1);
      EXPECT_EQ(f.level_size(l), binom);
    }
  }
}

TEST(Build, SingletonsProduceNothing) {
  const Hypergraph h = testing::from_lists(3, {{1}, {2}, {3}});
  const CcssForest f = build_ccss(h);
  EXPECT_EQ(f.node_count(), 0u);
  EXPECT_EQ(f.leaf_count(), 0u);
}

TEST(Build, RandomInvariants) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Hypergraph h = testing::random_small(seed, 10, 6, 10);
    const CcssForest trimmed = build_ccss(h);
    const CcssForest full = build_ccss(h, CcssMode::full);
    expect_structure(trimmed);
    expect_structure(full);
    expect_reconstruction(trimmed, h);
    expect_reconstruction(full, h);
    const auto tp = path_set(trimmed);
    const auto fp = path_set(full);
    EXPECT_TRUE(std::includes(fp.begin(), fp.end(), tp.begin(), tp.end()));
    EXPECT_LE(full.node_count(), worst_case_bound(h));
    std::size_t leaves = 0;
    for (const Edge& e : h.edges()) leaves += e.size() >= 2 ? e.size() : 0;
    EXPECT_EQ(trimmed.leaf_count(), leaves);
  }
}

TEST(Build, IndependentOfEdgeOrder) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Hypergraph h = testing::random_small(seed, 9, 5, 8);
    auto edges = h.edges();
    std::reverse(edges.begin(), edges.end());
    const Hypergraph r(h.n(), edges);
    EXPECT_EQ(build_ccss(h), build_ccss(r));
    EXPECT_EQ(build_ccss(h, CcssMode::full), build_ccss(r, CcssMode::full));
  }
}

TEST(Build, DisjointEdgesReachTheBound) {
  const Hypergraph h = testing::from_lists(9, {{1, 2, 3}, {4, 5, 6, 7}, {8, 9}});
  const CcssForest full = build_ccss(h, CcssMode::full);
  // each edge stores all its proper non-empty subsets but not itself
  EXPECT_EQ(full.node_count(), worst_case_bound(h) - h.edge_count());
}

TEST(Stats, EmptyHypergraph) {
  const Hypergraph h(4, {});
  const CcssStats s = ccss_stats(build_ccss(h), h);
  EXPECT_EQ(s.node_count, 0u);
  EXPECT_EQ(s.leaf_count, 0u);
  EXPECT_EQ(s.coo_units, 0u);
  EXPECT_EQ(s.compression_ratio, 1.0);
  EXPECT_EQ(worst_case_bound(h), 0u);
  EXPECT_EQ(worst_case_bound(testing::from_lists(2, {{1, 2}})), 3u);
}

TEST(Serialize, RoundTrip) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Hypergraph h = testing::random_small(seed, 10, 6, 10);
    for (const CcssMode mode : {CcssMode::trimmed, CcssMode::full}) {
      const CcssForest f = build_ccss(h, mode);
      std::stringstream buf;
      write_ccss(buf, f);
      EXPECT_EQ(read_ccss(buf), f);
    }
  }
}

TEST(Serialize, RejectsGarbage) {
  std::stringstream junk("not a forest at all");
  EXPECT_THROW(read_ccss(junk), Error);
  std::stringstream buf;
  write_ccss(buf, build_ccss(fig1()));
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 5);
  std::stringstream truncated(bytes);
  try {
    read_ccss(truncated);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::format);
  }
}

}  // namespace
}  // namespace hyperttsv
