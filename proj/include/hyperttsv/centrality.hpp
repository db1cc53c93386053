#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "hyperttsv/error.hpp"
#include "hyperttsv/hypergraph.hpp"
#include "hyperttsv/ttsv.hpp"

namespace hyperttsv {

struct HecOptions {
  Algo algo = Algo::memo;
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  int workers = 1;
  bool deterministic = false;
  /// Run on a disconnected hypergraph anyway; uniqueness of x is then lost.
  bool force_disconnected = false;
  const StopCondition* stop = nullptr;
};

struct CentralityResult {
  std::vector<double> x;  // positive, sums to 1
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  double lambda() const noexcept { return 0.5 * (lambda_min + lambda_max); }
};

/// Floor for x^(N-1) in the eigenvalue ratios.
inline constexpr double kRatioFloor = 1e-300;

/// Rejects inputs that have no positive H-eigenvector: isolated vertices
/// always, disconnected hypergraphs unless forced.
inline void check_centrality_input(const Hypergraph& h, bool force_disconnected) {
  if (h.n() == 0) throw Error(Errc::invalid_argument, "hypergraph has no vertices");
  if (h.rank() < 2) throw Error(Errc::invalid_argument, "centrality needs an edge with at least 2 vertices");
  const auto deg = degrees(h);
  for (std::size_t v = 0; v < deg.size(); ++v) {
    if (deg[v] <= 0.0) throw Error(Errc::isolated_vertex, fmt::format("vertex {} has no incident edge", v + 1));
  }
  if (!force_disconnected && !is_connected(h)) {
    throw Error(Errc::disconnected,
                "hypergraph is disconnected; compute each component separately or force the run");
  }
}

/// NQZ iteration driven by an existing engine:
///   y = 1/n, z = T y^(N-1);
///   repeat x = z^(1/(N-1)) / |z^(1/(N-1))|_1, z = T x^(N-1),
///          lambda_min/max = min/max(z ./ x^[N-1])
///   until (lambda_max - lambda_min) / lambda_min < tol.
/// Returns the last iterate with converged = false if max_iters is reached.
inline CentralityResult hec_nqz(const TtsvEngine& engine, double tol, std::size_t max_iters) {
  const Hypergraph& h = engine.hypergraph();
  if (!(tol > 0.0)) throw Error(Errc::invalid_argument, "tolerance must be positive");
  const std::size_t n = h.n();
  const double p = static_cast<double>(h.rank()) - 1.0;

  CentralityResult res;
  std::vector<double> y(n, 1.0 / static_cast<double>(n));
  std::vector<double> z = engine.run(y).s;
  res.x.assign(n, 0.0);
  while (res.iterations < max_iters) {
    double norm = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      res.x[v] = std::pow(z[v], 1.0 / p);
      norm += res.x[v];
    }
    for (double& xv : res.x) xv /= norm;
    z = engine.run(res.x).s;
    res.lambda_min = std::numeric_limits<double>::infinity();
    res.lambda_max = -std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < n; ++v) {
      const double ratio = z[v] / std::max(std::pow(res.x[v], p), kRatioFloor);
      res.lambda_min = std::min(res.lambda_min, ratio);
      res.lambda_max = std::max(res.lambda_max, ratio);
    }
    ++res.iterations;
    if ((res.lambda_max - res.lambda_min) / res.lambda_min < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// H-eigenvector centrality of h. Throws IsolatedVertex, Disconnected (unless
/// forced) or InvalidArgument; non-convergence is reported in the result.
inline CentralityResult hec_nqz(const Hypergraph& h, const HecOptions& opts = {}) {
  check_centrality_input(h, opts.force_disconnected);
  TtsvOptions topts;
  topts.workers = opts.workers;
  topts.deterministic = opts.deterministic;
  topts.stop = opts.stop;
  const TtsvEngine engine(h, opts.algo, topts);
  return hec_nqz(engine, opts.tol, opts.max_iters);
}

/// max_v |[T x^(N-1)]_v - lambda * x_v^(N-1)| / max(lambda, 1).
inline double eig_residual(const TtsvEngine& engine, std::span<const double> x, double lambda) {
  const Hypergraph& h = engine.hypergraph();
  if (x.size() != h.n()) throw Error(Errc::dimension_mismatch, "eigenvector length differs from n");
  for (const double xv : x) {
    if (!(xv > 0.0)) throw Error(Errc::non_positive_vector, "eigenvector entries must be positive");
  }
  const auto z = engine.run(x).s;
  const double p = static_cast<double>(h.rank()) - 1.0;
  double worst = 0.0;
  for (std::size_t v = 0; v < x.size(); ++v) {
    worst = std::max(worst, std::abs(z[v] - lambda * std::pow(x[v], p)));
  }
  return worst / std::max(lambda, 1.0);
}

inline double eig_residual(const Hypergraph& h, std::span<const double> x, double lambda, Algo algo = Algo::aay) {
  for (const double xv : x) {
    if (!(xv > 0.0)) throw Error(Errc::non_positive_vector, "eigenvector entries must be positive");
  }
  return eig_residual(TtsvEngine(h, algo), x, lambda);
}

}  // namespace hyperttsv
