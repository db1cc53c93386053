#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hyperttsv/hyperttsv.hpp"

namespace hyperttsv::cli {

/// Process exit codes.
enum Exit : int {
  kOk = 0,
  kIoFailure = 1,
  kBadFlags = 2,
  kDimensionMismatch = 3,
  kOracleGuard = 4,
  kRankTooLarge = 5,
  kNotConverged = 6,
  kDisconnected = 7,
  kCheckFailed = 8,
  kInterrupted = 130,
};

inline int exit_code_for(Errc code) {
  switch (code) {
    case Errc::dimension_mismatch:
    case Errc::forest_mismatch: return kDimensionMismatch;
    case Errc::oracle_too_large: return kOracleGuard;
    case Errc::order_too_large: return kRankTooLarge;
    case Errc::disconnected:
    case Errc::isolated_vertex: return kDisconnected;
    case Errc::invalid_argument:
    case Errc::rank_exceeds_vertices: return kBadFlags;
    case Errc::cancelled: return kInterrupted;
    default: return kIoFailure;
  }
}

inline std::atomic<bool>& interrupted() {
  static std::atomic<bool> flag{false};
  return flag;
}

extern "C" inline void on_sigint(int) { interrupted().store(true); }

inline std::string num(double v) { return fmt::format("{:.17g}", v); }

struct InputFlags {
  std::string path;
  bool weighted = false;
  std::optional<std::size_t> max_size;

  void attach(CLI::App& cmd, bool with_filter) {
    cmd.add_option("--input,-i", path, "Edge-list file")->required();
    cmd.add_flag("--weighted", weighted, "Each line ends with a real edge weight");
    if (with_filter) cmd.add_option("--max-size", max_size, "Drop edges larger than this")->check(CLI::PositiveNumber);
  }

  Hypergraph load(std::ostream& err) const {
    ParseReport report;
    Hypergraph h = load_hypergraph(path, weighted, &report);
    for (const std::size_t line : report.deduplicated_lines) {
      fmt::print(err, "warning: {}:{}: repeated vertex ids removed\n", path, line);
    }
    if (max_size) h = filter_by_max_size(h, *max_size);
    return h;
  }
};

/// Writes to --out when given, else to the command's stdout stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(Errc::io, "cannot write " + path);
    }
    stream_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& operator*() { return *stream_; }
  void close() {
    stream_->flush();
    if (!*stream_) throw Error(Errc::io, "write failure");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

inline std::vector<double> read_vector(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path);
  std::vector<double> b;
  std::vector<std::pair<std::size_t, double>> indexed;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first.front() == '#') continue;
    std::string second;
    try {
      if (ls >> second) {
        indexed.emplace_back(std::stoull(first), std::stod(second));
      } else {
        b.push_back(std::stod(first));
      }
    } catch (const std::exception&) {
      throw Error(Errc::malformed_line, "bad vector line: " + line);
    }
  }
  if (!indexed.empty()) {
    if (!b.empty()) throw Error(Errc::malformed_line, "vector file mixes indexed and plain lines");
    b.assign(n, 0.0);
    for (const auto& [id, value] : indexed) {
      if (id == 0 || id > n) throw Error(Errc::dimension_mismatch, fmt::format("vector index {} outside 1..{}", id, n));
      b[id - 1] = value;
    }
    if (indexed.size() != n) {
      throw Error(Errc::dimension_mismatch, fmt::format("vector has {} entries, n = {}", indexed.size(), n));
    }
  }
  if (b.size() != n) throw Error(Errc::dimension_mismatch, fmt::format("vector has {} entries, n = {}", b.size(), n));
  return b;
}

inline double max_relative_difference(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    if (scale > 0.0) worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen

struct GenCommand {
  GenSpec spec;
  std::string out_path;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen", "Generate a synthetic non-uniform hypergraph");
    cmd->add_option("--nodes", spec.n, "Vertex count")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--edges", spec.m, "Total edge count")->required();
    cmd->add_option("--rank", spec.rank, "Largest edge size (multiple of 5)")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--seed", spec.seed, "Random seed")->required();
    cmd->add_option("--out,-o", out_path, "Output file (default stdout)");
  }

  int run(std::ostream& out, std::ostream& err) const {
    const Hypergraph h = generate_synthetic(spec);
    std::ostream& summary = out_path.empty() ? err : out;
    Sink sink(out_path, out);
    write_hypergraph(*sink, h, false);
    sink.close();
    fmt::print(summary, "n {}\nm {}\nrank {}\n", h.n(), h.edge_count(), h.rank());
    const auto hist = size_histogram(h);
    for (std::size_t k = 1; k < hist.size(); ++k) {
      if (hist[k] > 0) fmt::print(summary, "order {} {}\n", k, hist[k]);
    }
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// ttsv1

struct TtsvCommand {
  InputFlags input;
  bool ones = false;
  std::string vector_path;
  std::optional<std::uint64_t> random_seed;
  std::string algo = "memo";
  std::string compare;
  std::string forest_path;
  int threads = default_workers();
  bool deterministic = false;
  bool stats = false;
  std::size_t fft_crossover = 64;
  std::string out_path;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("ttsv1", "Compute s = B b^(N-1) for the blowup tensor");
    input.attach(*cmd, true);
    auto* group = cmd->add_option_group("vector", "Input vector b (default: ones)");
    group->add_flag("--ones", ones, "b = all ones");
    group->add_option("--vector", vector_path, "File with one value per line, or 'vertex value' lines");
    group->add_option("--random-seed", random_seed, "b uniform in [0.1, 2) from this seed");
    group->require_option(0, 1);
    cmd->add_option("--algo", algo, "aay | direct | fft | memo | oracle")
        ->check(CLI::IsMember({"aay", "direct", "fft", "memo", "oracle"}));
    cmd->add_option("--compare", compare, "Also run this algorithm and report the max relative difference")
        ->check(CLI::IsMember({"aay", "direct", "fft", "memo", "oracle"}));
    cmd->add_option("--forest", forest_path, "Reuse a forest saved by 'stats --save'");
    cmd->add_option("--threads,-t", threads, "Worker threads (default $HYPERTTSV_THREADS)")->check(CLI::PositiveNumber);
    cmd->add_flag("--deterministic", deterministic, "Bit-identical results for any thread count");
    cmd->add_option("--fft-crossover", fft_crossover, "Use FFT products only when factors*N exceeds this");
    cmd->add_flag("--stats", stats, "Print convolution count and wall time");
    cmd->add_option("--out,-o", out_path, "Output file (default stdout)");
  }

  TtsvOptions options() const {
    TtsvOptions o;
    o.workers = threads;
    o.deterministic = deterministic;
    o.fft_crossover = fft_crossover;
    return o;
  }

  std::optional<CcssForest> load_forest() const {
    if (forest_path.empty()) return std::nullopt;
    std::ifstream in(forest_path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + forest_path);
    return read_ccss(in);
  }

  int run(std::ostream& out, std::ostream& err) const {
    const Hypergraph h = input.load(err);
    std::vector<double> b;
    if (!vector_path.empty()) {
      b = read_vector(vector_path, h.n());
    } else if (random_seed) {
      b = random_vector(h.n(), *random_seed);
    } else {
      b.assign(h.n(), 1.0);
    }

    const Algo primary = parse_algo(algo);
    auto forest = load_forest();
    const bool uses_forest = primary == Algo::direct || primary == Algo::fft || primary == Algo::memo;
    const TtsvEngine engine = forest && uses_forest ? TtsvEngine(h, std::move(*forest), primary, options())
                                                    : TtsvEngine(h, primary, options());
    const TtsvReport rep = engine.run(b);

    Sink sink(out_path, out);
    std::string buf;
    for (std::size_t v = 0; v < rep.s.size(); ++v) fmt::format_to(std::back_inserter(buf), "{} {:.17g}\n", v + 1, rep.s[v]);
    *sink << buf;
    if (stats) {
      fmt::print(*sink, "# algo {}\n# workers {}\n# conv_count {}\n# wall_time_s {}\n", to_string(rep.algo), rep.workers,
                 rep.conv_count, num(rep.wall_time.count()));
    }
    int code = kOk;
    if (!compare.empty()) {
      const TtsvReport other = TtsvEngine(h, parse_algo(compare), options()).run(b);
      const double diff = max_relative_difference(rep.s, other.s);
      fmt::print(*sink, "# compare_algo {}\n# max_rel_diff {}\n", compare, num(diff));
      if (!(diff <= 1e-9)) {
        fmt::print(err, "error: {} and {} differ by {} (> 1e-9)\n", algo, compare, num(diff));
        code = kCheckFailed;
      }
    }
    sink.close();
    return code;
  }
};

// ---------------------------------------------------------------------------
// hec

struct HecCommand {
  InputFlags input;
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  std::string algo = "memo";
  int threads = default_workers();
  bool deterministic = false;
  bool force = false;
  std::optional<std::size_t> top;
  std::string out_path;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("hec", "H-eigenvector centrality by the NQZ iteration");
    input.attach(*cmd, true);
    cmd->add_option("--tol", tol, "Stop when (lambda_max - lambda_min)/lambda_min < tol")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", max_iters, "Iteration cap");
    cmd->add_option("--algo", algo, "TTSV1 engine")->check(CLI::IsMember({"aay", "direct", "fft", "memo", "oracle"}));
    cmd->add_option("--threads,-t", threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--deterministic", deterministic, "Bit-identical results for any thread count");
    cmd->add_flag("--force-disconnected", force, "Run even if the hypergraph is disconnected");
    cmd->add_option("--top", top, "Print only the K most central vertices")->check(CLI::PositiveNumber);
    cmd->add_option("--out,-o", out_path, "Output file (default stdout)");
  }

  int run(std::ostream& out, std::ostream& err) const {
    const Hypergraph h = input.load(err);
    check_centrality_input(h, force);
    if (force && !is_connected(h)) fmt::print(err, "warning: hypergraph is disconnected; the centrality is not unique\n");
    TtsvOptions topts;
    topts.workers = threads;
    topts.deterministic = deterministic;
    const TtsvEngine engine(h, parse_algo(algo), topts);
    const CentralityResult res = hec_nqz(engine, tol, max_iters);
    const double residual = eig_residual(engine, res.x, res.lambda());

    Sink sink(out_path, out);
    fmt::print(*sink, "# lambda_min {}\n# lambda_max {}\n# lambda {}\n# iterations {}\n# converged {}\n# residual {}\n",
               num(res.lambda_min), num(res.lambda_max), num(res.lambda()), res.iterations, res.converged,
               num(residual));
    std::vector<std::size_t> order(res.x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (top) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return res.x[a] > res.x[b]; });
      order.resize(std::min(order.size(), *top));
    }
    std::string buf;
    for (const std::size_t v : order) fmt::format_to(std::back_inserter(buf), "{} {:.17g}\n", v + 1, res.x[v]);
    *sink << buf;
    sink.close();
    if (!res.converged) {
      fmt::print(err, "error: not converged after {} iterations\n", res.iterations);
      return kNotConverged;
    }
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// stats

struct StatsCommand {
  InputFlags input;
  bool full = false;
  std::string save_path;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("stats", "Forest size and storage statistics");
    input.attach(*cmd, true);
    cmd->add_flag("--full", full, "Also build the untrimmed forest of all proper subsets");
    cmd->add_option("--save", save_path, "Write the trimmed forest in binary form");
  }

  static void print(std::ostream& out, const std::string& prefix, const CcssStats& s) {
    fmt::print(out, "{}node_count {}\n{}root_count {}\n{}leaf_count {}\n", prefix, s.node_count, prefix, s.root_count,
               prefix, s.leaf_count);
    for (std::size_t l = 0; l < s.level_nodes.size(); ++l) fmt::print(out, "{}level_{}_nodes {}\n", prefix, l + 1, s.level_nodes[l]);
    fmt::print(out, "{}coo_units {}\n{}ccss_units {}\n{}compression_ratio {}\n", prefix, s.coo_units, prefix,
               s.ccss_units, prefix, num(s.compression_ratio));
  }

  int run(std::ostream& out, std::ostream& err) const {
    const Hypergraph h = input.load(err);
    fmt::print(out, "vertices {}\nedges {}\nrank {}\n", h.n(), h.edge_count(), h.rank());
    auto t0 = std::chrono::steady_clock::now();
    const CcssForest trimmed = build_ccss(h, CcssMode::trimmed);
    const std::chrono::duration<double> trimmed_time = std::chrono::steady_clock::now() - t0;
    print(out, "", ccss_stats(trimmed, h));
    fmt::print(out, "worst_case_bound {}\nbuild_time_s {}\n", worst_case_bound(h), num(trimmed_time.count()));
    if (full) {
      t0 = std::chrono::steady_clock::now();
      const CcssForest all = build_ccss(h, CcssMode::full);
      const std::chrono::duration<double> full_time = std::chrono::steady_clock::now() - t0;
      print(out, "full_", ccss_stats(all, h));
      fmt::print(out, "full_build_time_s {}\n", num(full_time.count()));
    }
    if (!save_path.empty()) {
      std::ofstream file(save_path, std::ios::binary);
      if (!file) throw Error(Errc::io, "cannot write " + save_path);
      write_ccss(file, trimmed);
    }
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// bench

struct BenchRecord {
  std::string dataset;
  Algo algo;
  int workers;
  std::size_t repeat;
  double wall_time_s;
  std::optional<std::uint64_t> conv_count;
  std::optional<double> checksum;
  std::string status;
};

inline constexpr const char* kBenchHeader = "dataset,algo,workers,repeat,wall_time_s,conv_count,checksum,status";

inline std::string to_csv(const BenchRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{}", r.dataset, to_string(r.algo), r.workers, r.repeat, num(r.wall_time_s),
                     r.conv_count ? std::to_string(*r.conv_count) : std::string(),
                     r.checksum ? num(*r.checksum) : std::string(), r.status);
}

struct BenchCommand {
  InputFlags input;
  std::string algos = "direct,fft,memo";
  std::string threads_list = "1,2,4,8";
  std::size_t repeats = 3;
  double timeout_s = 0.0;
  std::string csv_path;
  std::uint64_t seed = 1;
  std::string dataset;
  bool deterministic = false;
  std::size_t fft_crossover = 64;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("bench", "Time TTSV1 engines over thread counts and write CSV");
    input.attach(*cmd, true);
    cmd->add_option("--algos", algos, "Comma-separated engines");
    cmd->add_option("--threads-list", threads_list, "Comma-separated worker counts");
    cmd->add_option("--repeats", repeats, "Runs per (algo, workers) cell")->check(CLI::PositiveNumber);
    cmd->add_option("--timeout", timeout_s, "Per-run time limit in seconds (0 = none)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--csv", csv_path, "CSV output file (default stdout)");
    cmd->add_option("--seed", seed, "Seed of the random input vector");
    cmd->add_option("--dataset", dataset, "Dataset id for the CSV (default: input file stem)");
    cmd->add_flag("--deterministic", deterministic, "Use deterministic accumulation");
    cmd->add_option("--fft-crossover", fft_crossover, "Use FFT products only when factors*N exceeds this");
  }

  int run(std::ostream& out, std::ostream& err) const {
    std::vector<Algo> algo_list;
    for (const auto& a : split_csv(algos)) algo_list.push_back(parse_algo(a));
    std::vector<int> worker_list;
    for (const auto& t : split_csv(threads_list)) {
      int w = 0;
      try {
        w = std::stoi(t);
      } catch (const std::exception&) {
        throw Error(Errc::invalid_argument, "bad thread count '" + t + "'");
      }
      if (w < 1) throw Error(Errc::invalid_argument, "thread counts must be positive");
      worker_list.push_back(w);
    }
    if (algo_list.empty() || worker_list.empty()) throw Error(Errc::invalid_argument, "empty --algos or --threads-list");

    const Hypergraph h = input.load(err);
    const std::string id = dataset.empty() ? std::filesystem::path(input.path).stem().string() : dataset;
    const std::vector<double> b = random_vector(h.n(), seed);
    const CcssForest forest = build_ccss(h, CcssMode::trimmed);

    Sink sink(csv_path, out);
    *sink << kBenchHeader << '\n' << std::flush;
    std::optional<double> reference;
    double worst = 0.0;
    int code = kOk;
    for (const Algo algo : algo_list) {
      for (const int workers : worker_list) {
        TtsvOptions opts;
        opts.workers = workers;
        opts.deterministic = deterministic;
        opts.fft_crossover = fft_crossover;
        const bool uses_forest = algo == Algo::direct || algo == Algo::fft || algo == Algo::memo;
        const TtsvEngine engine = uses_forest ? TtsvEngine(h, forest, algo, opts) : TtsvEngine(h, algo, opts);
        bool timed_out = false;
        for (std::size_t rep = 0; rep < repeats; ++rep) {
          BenchRecord rec{id, algo, workers, rep, 0.0, std::nullopt, std::nullopt, "ok"};
          if (timed_out) {
            rec.wall_time_s = timeout_s;
            rec.status = "timeout";
          } else {
            StopCondition stop;
            stop.cancel = &interrupted();
            const auto t0 = std::chrono::steady_clock::now();
            if (timeout_s > 0) {
              stop.deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                       std::chrono::duration<double>(timeout_s));
            }
            TtsvEngine timed = engine;
            timed.options().stop = &stop;
            try {
              const TtsvReport r = timed.run(b);
              rec.wall_time_s = std::max(r.wall_time.count(), 1e-9);
              rec.conv_count = r.conv_count;
              const double checksum = std::accumulate(r.s.begin(), r.s.end(), 0.0);
              rec.checksum = checksum;
              if (!reference) reference = checksum;
              const double scale = std::max(std::abs(*reference), std::abs(checksum));
              if (scale > 0.0) worst = std::max(worst, std::abs(checksum - *reference) / scale);
            } catch (const Error& e) {
              if (e.code() != Errc::timeout) {
                if (e.code() == Errc::cancelled) sink.close();
                throw;
              }
              timed_out = true;
              rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
              rec.status = "timeout";
            }
          }
          *sink << to_csv(rec) << '\n' << std::flush;
        }
      }
    }
    sink.close();
    fmt::print(err, "checksum max relative spread {}\n", num(worst));
    if (!(worst <= 1e-7)) {
      fmt::print(err, "error: checksums disagree beyond 1e-7\n");
      code = kCheckFailed;
    }
    return code;
  }
};

// ---------------------------------------------------------------------------

/// Parses argv and dispatches to a subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Tensor-times-same-vector and H-eigenvector centrality for non-uniform hypergraphs", "hyperttsv"};
  app.require_subcommand(1);
  GenCommand gen;
  TtsvCommand ttsv;
  HecCommand hec;
  StatsCommand stats;
  BenchCommand bench;
  gen.attach(app);
  ttsv.attach(app);
  hec.attach(app);
  stats.attach(app);
  bench.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadFlags;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "gen") return gen.run(out, err);
    if (name == "ttsv1") return ttsv.run(out, err);
    if (name == "hec") return hec.run(out, err);
    if (name == "stats") return stats.run(out, err);
    if (name == "bench") return bench.run(out, err);
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kIoFailure;
  }
  return kBadFlags;
}

}  // namespace hyperttsv::cli
