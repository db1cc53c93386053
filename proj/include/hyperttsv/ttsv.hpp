#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "hyperttsv/ccss.hpp"
#include "hyperttsv/combinatorics.hpp"
#include "hyperttsv/error.hpp"
#include "hyperttsv/genpoly.hpp"
#include "hyperttsv/hypergraph.hpp"
#include "hyperttsv/oracle.hpp"
#include "hyperttsv/parallel.hpp"

#if !defined(NDEBUG) || defined(HYPERTTSV_CHECK_INVARIANTS)
#define HYPERTTSV_ASSERT(cond) \
  ((cond) ? void(0) : ::hyperttsv::detail::assert_fail(#cond, __FILE__, __LINE__))
#else
#define HYPERTTSV_ASSERT(cond) void(0)
#endif

namespace hyperttsv {

namespace detail {
[[noreturn]] inline void assert_fail(const char* expr, const char* file, int line) {
  std::fprintf(stderr, "%s:%d: invariant violated: %s\n", file, line, expr);
  std::abort();
}
}  // namespace detail

enum class Algo { aay, direct, fft, memo, oracle };

constexpr std::string_view to_string(Algo a) noexcept {
  switch (a) {
    case Algo::aay: return "aay";
    case Algo::direct: return "direct";
    case Algo::fft: return "fft";
    case Algo::memo: return "memo";
    case Algo::oracle: return "oracle";
  }
  return "?";
}

inline Algo parse_algo(std::string_view name) {
  for (const Algo a : {Algo::aay, Algo::direct, Algo::fft, Algo::memo, Algo::oracle}) {
    if (name == to_string(a)) return a;
  }
  throw Error(Errc::invalid_argument, fmt::format("unknown algorithm '{}'", name));
}

enum class ConvBackend { direct, fft };

struct TtsvOptions {
  int workers = 1;
  /// Buffer contributions and reduce them in a fixed order, making s
  /// bit-identical for every worker count.
  bool deterministic = false;
  /// FFT is used for a leaf only when (number of factors) * N exceeds this.
  std::size_t fft_crossover = 64;
  const StopCondition* stop = nullptr;
};

struct TtsvReport {
  std::vector<double> s;
  std::uint64_t conv_count = 0;  // pairwise truncated products performed
  Algo algo = Algo::memo;
  int workers = 1;
  std::chrono::duration<double> wall_time{0};
};

namespace detail {

struct alignas(64) WorkerCounter {
  std::uint64_t value = 0;
};

inline std::uint64_t total(const std::vector<WorkerCounter>& counters) {
  std::uint64_t sum = 0;
  for (const auto& c : counters) sum += c.value;
  return sum;
}

inline void check_inputs(const Hypergraph& h, std::span<const double> b) {
  if (b.size() != h.n()) {
    throw Error(Errc::dimension_mismatch, fmt::format("vector length {} != n = {}", b.size(), h.n()));
  }
  if (h.rank() > kMaxOrder) {
    throw Error(Errc::order_too_large, fmt::format("rank {} exceeds {}", h.rank(), kMaxOrder));
  }
}

inline void check_forest(const CcssForest& f, const Hypergraph& h) {
  if (f.order() != h.rank() || f.vertex_count() != h.n() || f.source_fingerprint() != fingerprint(h)) {
    throw Error(Errc::forest_mismatch, "forest was not built from this hypergraph");
  }
}

inline int clamp_workers(int w) { return std::max(1, w); }

/// Singleton edges have |beta| = 1 and contribute w(e) * b_v^(N-1).
inline void singleton_prepass(const Hypergraph& h, std::span<const double> b, std::span<double> s) {
  const int power = static_cast<int>(h.rank()) - 1;
  for (const Edge& e : h.edges()) {
    if (e.size() != 1) continue;
    const VertexId v = e.vertices.front();
    s[v] += e.weight * std::pow(b[v], power);
  }
}

/// Per-worker scratch for walking one leaf-to-root chain.
struct ChainScratch {
  std::vector<double> acc, tmp, ebar;
  std::unique_ptr<FftConvolver> fft;

  explicit ChainScratch(std::size_t order) : acc(order), tmp(order), ebar(order) {}

  static std::vector<ChainScratch> per_worker(int workers, std::size_t order) {
    std::vector<ChainScratch> out;
    out.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) out.emplace_back(order);
    return out;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Edge-loop baseline

/// For every vertex v and edge e containing v, adds
/// w(e)/|beta(e)| * (N-1)! * [E(b_v) * prod_{u in e\v} Ebar(b_u)][N-1] to s[v].
/// Vertices are distributed over workers; each s[v] is written by one worker.
inline TtsvReport ttsv1_aay(const Hypergraph& h, const Incidence& inc, std::span<const double> b,
                            const TtsvOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  detail::check_inputs(h, b);
  const int workers = detail::clamp_workers(opts.workers);
  TtsvReport rep{std::vector<double>(h.n(), 0.0), 0, Algo::aay, workers, {}};
  if (!h.empty()) {
    const std::size_t N = h.rank();
    const BlowupTable table(static_cast<unsigned>(N));
    auto scratch = detail::ChainScratch::per_worker(workers, N);
    std::vector<detail::WorkerCounter> convs(static_cast<std::size_t>(workers));

    parallel_for(
        h.n(), workers,
        [&](std::size_t vi, int w) {
          auto& ws = scratch[static_cast<std::size_t>(w)];
          const auto v = static_cast<VertexId>(vi);
          double c = 0.0;
          for (const std::uint32_t ei : inc.of(v)) {
            const Edge& e = h.edge(ei);
            detail::fill_e(ws.acc, b[v]);
            std::size_t lo = 0;
            for (const VertexId u : e.vertices) {
              if (u == v) continue;
              detail::fill_ebar(ws.ebar, b[u]);
              detail::mul_trunc(ws.acc, lo, ws.ebar, 1, ws.tmp);
              std::swap(ws.acc, ws.tmp);
              ++lo;
            }
            convs[static_cast<std::size_t>(w)].value += e.size() - 1;
            c += e.weight * table.leaf_scale(static_cast<unsigned>(e.size())) * ws.acc[N - 1];
          }
          rep.s[v] = c;
        },
        opts.stop, 64);
    rep.conv_count = detail::total(convs);
  }
  rep.wall_time = std::chrono::steady_clock::now() - start;
  return rep;
}

inline TtsvReport ttsv1_aay(const Hypergraph& h, std::span<const double> b, const TtsvOptions& opts = {}) {
  detail::check_inputs(h, b);
  return ttsv1_aay(h, incidence(h), b, opts);
}

// ---------------------------------------------------------------------------
// Leaf-to-root traversal of the forest

/// Processes special leaves level by level, largest edges first. Each leaf
/// (e, v) starts from E(b_v) and multiplies in Ebar(b_u) for every ancestor u
/// of its owner node. With the FFT backend, leaves whose factor count times N
/// exceeds opts.fft_crossover use FFT products.
inline TtsvReport ttsv1_ccss_direct(const CcssForest& f, const Hypergraph& h, std::span<const double> b,
                                    ConvBackend backend = ConvBackend::direct, const TtsvOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  detail::check_inputs(h, b);
  detail::check_forest(f, h);
  const int workers = detail::clamp_workers(opts.workers);
  TtsvReport rep{std::vector<double>(h.n(), 0.0), 0,
                 backend == ConvBackend::fft ? Algo::fft : Algo::direct, workers, {}};
  detail::singleton_prepass(h, b, rep.s);

  const std::size_t N = f.order();
  if (f.leaf_count() > 0) {
    auto scratch = detail::ChainScratch::per_worker(workers, N);
    if (backend == ConvBackend::fft) {
      for (auto& ws : scratch) ws.fft = std::make_unique<FftConvolver>(N);
    }
    std::vector<detail::WorkerCounter> convs(static_cast<std::size_t>(workers));
    std::vector<double> deltas(opts.deterministic ? f.leaf_count() : 0);
    const auto leaves = f.leaves();

    // Leaves are ordered by owner and owners by level, so each edge size is
    // one contiguous run.
    std::vector<std::size_t> run_begin(N + 2, leaves.size());
    for (std::size_t i = leaves.size(); i-- > 0;) run_begin[leaves[i].edge_size] = i;
    for (std::size_t k = N + 1; k-- > 0;) run_begin[k] = std::min(run_begin[k], run_begin[k + 1]);

    for (std::size_t k = N; k >= 2; --k) {
      const std::size_t first = run_begin[k];
      const std::size_t count = run_begin[k + 1] - first;
      const bool use_fft = backend == ConvBackend::fft && k * N > opts.fft_crossover;
      parallel_for(
          count, workers,
          [&](std::size_t off, int w) {
            auto& ws = scratch[static_cast<std::size_t>(w)];
            const SpecialLeaf& lf = leaves[first + off];
            // FFT round-off is absolute, about eps * max coefficient, while
            // the wanted t^(N-1) coefficient can be far below the maximum.
            // Substituting t -> alpha t moves the peak of the product to
            // degree N-1; the result is divided by alpha^(N-1) afterwards.
            double alpha = 1.0;
            if (use_fft) {
              double mass = std::abs(b[lf.dropped]);
              for (NodeRef u = lf.owner; u != kNoParent; u = f.node(u).parent) mass += std::abs(b[f.node(u).label]);
              if (mass > 0.0) alpha = static_cast<double>(N - 1) / mass;
            }
            detail::fill_e(ws.acc, alpha * b[lf.dropped]);
            // After j factors of Ebar the product starts at degree j, and each
            // remaining factor adds at least one degree, so only degrees j..N-k+j
            // can reach t^(N-1). Everything outside that window is round-off or
            // unused mass, and is cleared before it can leak into the result.
            if (use_fft) std::fill(ws.acc.begin() + static_cast<std::ptrdiff_t>(N - k + 1), ws.acc.end(), 0.0);
            std::size_t lo = 0;
            for (NodeRef u = lf.owner; u != kNoParent; u = f.node(u).parent) {
              detail::fill_ebar(ws.ebar, alpha * b[f.node(u).label]);
              if (use_fft) {
                std::fill(ws.ebar.begin() + static_cast<std::ptrdiff_t>(N - k + 2), ws.ebar.end(), 0.0);
                ws.fft->multiply(ws.ebar, ws.acc, ws.acc);
                std::fill(ws.acc.begin(), ws.acc.begin() + static_cast<std::ptrdiff_t>(lo + 1), 0.0);
                std::fill(ws.acc.begin() + static_cast<std::ptrdiff_t>(N - k + lo + 2), ws.acc.end(), 0.0);
              } else {
                detail::mul_trunc(ws.acc, lo, ws.ebar, 1, ws.tmp);
                std::swap(ws.acc, ws.tmp);
              }
              ++lo;
            }
            convs[static_cast<std::size_t>(w)].value += lo;
            const double top = use_fft ? detail::unscale(ws.acc[N - 1], alpha, N - 1) : ws.acc[N - 1];
            const double delta = lf.leaf_weight * top;
            if (opts.deterministic) {
              deltas[first + off] = delta;
            } else {
              accumulate(rep.s, lf.dropped, delta);
            }
          },
          opts.stop, 16);
    }
    if (opts.deterministic) {
      for (std::size_t i = 0; i < leaves.size(); ++i) rep.s[leaves[i].dropped] += deltas[i];
    }
    rep.conv_count = detail::total(convs);
  }
  rep.wall_time = std::chrono::steady_clock::now() - start;
  return rep;
}

// ---------------------------------------------------------------------------
// Memoized root-to-leaf traversal

namespace detail {

/// Row l of `prefix` holds P_l, the truncated product of Ebar(b) over the
/// first l labels of the current DFS path; P_l[d] = 0 for d < l.
class MemoWalker {
 public:
  MemoWalker(const CcssForest& f, std::span<const double> b)
      : f_(f), b_(b), order_(f.order()), prefix_(order_ * order_), ebar_(order_) {}

  template <class Emit>
  std::uint64_t walk_tree(NodeRef root, Emit&& emit) {
    convs_ = 0;
    fill_ebar(row(1), b_[f_.node(root).label]);
    visit(root, 1, emit);
    return convs_;
  }

 private:
  std::span<double> row(std::size_t l) { return {prefix_.data() + l * order_, order_}; }

  template <class Emit>
  void visit(NodeRef r, std::size_t level, Emit& emit) {
    const CcssNode& nd = f_.node(r);
    const auto p = row(level);
#if !defined(NDEBUG) || defined(HYPERTTSV_CHECK_INVARIANTS)
    for (std::size_t d = 0; d < level; ++d) HYPERTTSV_ASSERT(p[d] == 0.0);
#endif
    for (const SpecialLeaf& lf : f_.leaves_of(r)) {
      // [E(b_u) * P_l][N-1]; only degrees d <= N-1-l of E(b_u) can pair with
      // a non-zero entry of P_l.
      const double c = b_[lf.dropped];
      double term = 1.0;
      double dot = 0.0;
      for (std::size_t d = 0; d + level < order_; ++d) {
        if (d > 0) term *= c / static_cast<double>(d);
        dot += term * p[order_ - 1 - d];
      }
      emit(lf.dropped, lf.leaf_weight * dot);
    }
    for (NodeRef c = nd.child_begin; c < nd.child_end; ++c) {
      fill_ebar(ebar_, b_[f_.node(c).label]);
      mul_trunc(p, level, ebar_, 1, row(level + 1));
      ++convs_;
      visit(c, level + 1, emit);
    }
  }

  const CcssForest& f_;
  std::span<const double> b_;
  std::size_t order_;
  std::vector<double> prefix_;
  std::vector<double> ebar_;
  std::uint64_t convs_ = 0;
};

}  // namespace detail

/// Depth-first over every tree of the forest, one tree per work item. Each
/// forest edge costs one convolution and each special leaf one dot product,
/// so conv_count = node_count - root_count.
inline TtsvReport ttsv1_ccss_memo(const CcssForest& f, const Hypergraph& h, std::span<const double> b,
                                  const TtsvOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  detail::check_inputs(h, b);
  detail::check_forest(f, h);
  const int workers = detail::clamp_workers(opts.workers);
  TtsvReport rep{std::vector<double>(h.n(), 0.0), 0, Algo::memo, workers, {}};
  detail::singleton_prepass(h, b, rep.s);

  const std::size_t roots = f.root_count();
  if (roots > 0) {
    std::vector<detail::MemoWalker> walkers;
    walkers.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) walkers.emplace_back(f, b);
    std::vector<detail::WorkerCounter> convs(static_cast<std::size_t>(workers));
    std::vector<std::vector<std::pair<VertexId, double>>> buffers(opts.deterministic ? roots : 0);

    parallel_for(
        roots, workers,
        [&](std::size_t r, int w) {
          auto& walker = walkers[static_cast<std::size_t>(w)];
          std::uint64_t n;
          if (opts.deterministic) {
            auto& buf = buffers[r];
            n = walker.walk_tree(static_cast<NodeRef>(r), [&](VertexId v, double d) { buf.emplace_back(v, d); });
          } else {
            n = walker.walk_tree(static_cast<NodeRef>(r), [&](VertexId v, double d) { accumulate(rep.s, v, d); });
          }
          convs[static_cast<std::size_t>(w)].value += n;
        },
        opts.stop);
    if (opts.deterministic) {
      for (const auto& buf : buffers) {
        for (const auto& [v, d] : buf) rep.s[v] += d;
      }
    }
    rep.conv_count = detail::total(convs);
  }
  rep.wall_time = std::chrono::steady_clock::now() - start;
  return rep;
}

// ---------------------------------------------------------------------------
// Engine selection

/// Binds a hypergraph to one algorithm and caches what that algorithm needs
/// (incidence lists, forest or explicit tensor). The hypergraph must outlive
/// the engine.
class TtsvEngine {
 public:
  TtsvEngine(const Hypergraph& h, Algo algo, TtsvOptions opts = {}) : h_(&h), algo_(algo), opts_(opts) {
    if (h.rank() > kMaxOrder) {
      throw Error(Errc::order_too_large, fmt::format("rank {} exceeds {}", h.rank(), kMaxOrder));
    }
    switch (algo) {
      case Algo::aay: inc_ = incidence(h); break;
      case Algo::direct:
      case Algo::fft:
      case Algo::memo: forest_ = build_ccss(h, CcssMode::trimmed); break;
      case Algo::oracle: tensor_ = build_explicit(h); break;
    }
  }

  TtsvEngine(const Hypergraph& h, CcssForest forest, Algo algo, TtsvOptions opts = {})
      : h_(&h), algo_(algo), opts_(opts), forest_(std::move(forest)) {
    detail::check_forest(*forest_, h);
    if (algo == Algo::aay) inc_ = incidence(h);
    if (algo == Algo::oracle) tensor_ = build_explicit(h);
  }

  Algo algo() const noexcept { return algo_; }
  const Hypergraph& hypergraph() const noexcept { return *h_; }
  const CcssForest* forest() const noexcept { return forest_ ? &*forest_ : nullptr; }
  TtsvOptions& options() noexcept { return opts_; }
  const TtsvOptions& options() const noexcept { return opts_; }

  TtsvReport run(std::span<const double> b) const {
    switch (algo_) {
      case Algo::aay: return ttsv1_aay(*h_, *inc_, b, opts_);
      case Algo::direct: return ttsv1_ccss_direct(*forest_, *h_, b, ConvBackend::direct, opts_);
      case Algo::fft: return ttsv1_ccss_direct(*forest_, *h_, b, ConvBackend::fft, opts_);
      case Algo::memo: return ttsv1_ccss_memo(*forest_, *h_, b, opts_);
      case Algo::oracle: {
        const auto start = std::chrono::steady_clock::now();
        detail::check_inputs(*h_, b);
        TtsvReport rep{ttsv1_oracle(*tensor_, b), 0, Algo::oracle, 1, {}};
        rep.wall_time = std::chrono::steady_clock::now() - start;
        return rep;
      }
    }
    throw Error(Errc::invalid_argument, "unknown algorithm");
  }

 private:
  const Hypergraph* h_;
  Algo algo_;
  TtsvOptions opts_;
  std::optional<CcssForest> forest_;
  std::optional<Incidence> inc_;
  std::optional<ExplicitBlowup> tensor_;
};

/// One-shot convenience wrapper around TtsvEngine.
inline TtsvReport ttsv1(const Hypergraph& h, std::span<const double> b, Algo algo, const TtsvOptions& opts = {}) {
  return TtsvEngine(h, algo, opts).run(b);
}

}  // namespace hyperttsv
