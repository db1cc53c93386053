#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hyperttsv/error.hpp"
#include "hyperttsv/hypergraph.hpp"

namespace hyperttsv {

/// Worker count from HYPERTTSV_THREADS, else the hardware concurrency.
inline int default_workers() {
  if (const char* env = std::getenv("HYPERTTSV_THREADS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Optional deadline and external cancellation flag, polled between work items.
struct StopCondition {
  std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max();
  const std::atomic<bool>* cancel = nullptr;

  void check() const {
    if (cancel != nullptr && cancel->load(std::memory_order_relaxed)) throw Error(Errc::cancelled, "interrupted");
    if (deadline != std::chrono::steady_clock::time_point::max() && std::chrono::steady_clock::now() > deadline) {
      throw Error(Errc::timeout, "time limit exceeded");
    }
  }
};

/// Runs body(i, worker) for i in [0, count) on `workers` threads. Items are
/// claimed one `chunk` at a time from a shared counter, so uneven items
/// balance dynamically. The first exception stops all workers and is
/// rethrown on the caller.
template <class Body>
void parallel_for(std::size_t count, int workers, Body&& body, const StopCondition* stop = nullptr,
                  std::size_t chunk = 1) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(count, 1))));
  chunk = std::max<std::size_t>(chunk, 1);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto run = [&](int worker) {
    try {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t begin = next.fetch_add(chunk, std::memory_order_relaxed);
        if (begin >= count) break;
        if (stop != nullptr) stop->check();
        const std::size_t end = std::min(count, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) body(i, worker);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      failed.store(true, std::memory_order_relaxed);
    }
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back([&run, w] { run(w); });
    run(0);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

/// Lock-free s[v] += delta, safe against concurrent adds to the same entry.
inline void accumulate(std::span<double> s, VertexId v, double delta) {
  std::atomic_ref<double>(s[v]).fetch_add(delta, std::memory_order_relaxed);
}

}  // namespace hyperttsv
