#pragma once

#include <algorithm>
#include <bit>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "hyperttsv/combinatorics.hpp"
#include "hyperttsv/error.hpp"

namespace hyperttsv {

/// Coefficients of a polynomial truncated at degree N-1; entry d multiplies
/// t^d. Generating functions are stored pre-divided by d!.
class CoeffVec {
 public:
  CoeffVec() = default;
  explicit CoeffVec(std::size_t order) : c_(order, 0.0) {}
  explicit CoeffVec(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

  static CoeffVec unit(std::size_t order) {
    CoeffVec u(order);
    if (order > 0) u.c_[0] = 1.0;
    return u;
  }

  std::size_t order() const noexcept { return c_.size(); }
  double operator[](std::size_t d) const { return c_[d]; }
  double& operator[](std::size_t d) { return c_[d]; }
  std::span<const double> coeffs() const noexcept { return c_; }
  std::span<double> coeffs() noexcept { return c_; }

  friend bool operator==(const CoeffVec&, const CoeffVec&) = default;

 private:
  std::vector<double> c_;
};

namespace detail {

inline void check_order(std::size_t order) {
  if (order < 1) throw Error(Errc::invalid_argument, "polynomial order must be >= 1");
  if (order > kMaxOrder) {
    throw Error(Errc::order_too_large,
                "order " + std::to_string(order) + " exceeds " + std::to_string(kMaxOrder));
  }
}

/// out[d] = c^d / d!, built by the running product c/d to stay finite.
inline void fill_e(std::span<double> out, double c) {
  double term = 1.0;
  for (std::size_t d = 0; d < out.size(); ++d) {
    if (d > 0) term *= c / static_cast<double>(d);
    out[d] = term;
  }
}

inline void fill_ebar(std::span<double> out, double c) {
  fill_e(out, c);
  if (!out.empty()) out[0] = 0.0;
}

/// out = trunc(a * b) where a[i] = 0 for i < a_lo and b[j] = 0 for j < b_lo.
/// Entries of out below a_lo + b_lo are zeroed. out must not alias a or b.
inline void mul_trunc(std::span<const double> a, std::size_t a_lo, std::span<const double> b,
                      std::size_t b_lo, std::span<double> out) {
  const std::size_t n = out.size();
  const std::size_t lo = std::min(n, a_lo + b_lo);
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(lo), 0.0);
  for (std::size_t k = lo; k < n; ++k) {
    double acc = 0.0;
    const std::size_t i_end = k - b_lo;
    for (std::size_t i = a_lo; i <= i_end; ++i) acc += a[i] * b[k - i];
    out[k] = acc;
  }
}

}  // namespace detail

/// E_N(c) = [1, c, c^2/2!, ..., c^(N-1)/(N-1)!].
inline CoeffVec e_vec(double c, std::size_t order) {
  detail::check_order(order);
  CoeffVec v(order);
  detail::fill_e(v.coeffs(), c);
  return v;
}

/// E_N(c) with the constant term removed.
inline CoeffVec ebar_vec(double c, std::size_t order) {
  detail::check_order(order);
  CoeffVec v(order);
  detail::fill_ebar(v.coeffs(), c);
  return v;
}

/// Direct O(N^2) product truncated at degree N-1.
inline CoeffVec conv_trunc(const CoeffVec& a, const CoeffVec& b) {
  if (a.order() != b.order()) {
    throw Error(Errc::order_mismatch, "conv_trunc of orders " + std::to_string(a.order()) +
                                          " and " + std::to_string(b.order()));
  }
  CoeffVec out(a.order());
  detail::mul_trunc(a.coeffs(), 0, b.coeffs(), 0, out.coeffs());
  return out;
}

// ---------------------------------------------------------------------------
// FFT backend

namespace detail {

/// FFTW's planner is not thread-safe; plan creation and destruction share
/// this lock. Executing an existing plan needs no lock.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

struct FftwPlanDestroy {
  void operator()(fftw_plan p) const noexcept {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

using FftwPlan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;

}  // namespace detail

namespace detail {

/// value / alpha^power, computed without overflow or underflow in the
/// intermediate power when the quotient itself is representable.
inline double unscale(double value, double alpha, std::size_t power) {
  const double f = std::pow(alpha, -static_cast<double>(power));
  if (std::isnormal(f)) return value * f;
  const double inv = 1.0 / alpha;
  for (std::size_t i = 0; i < power; ++i) value *= inv;
  return value;
}

}  // namespace detail

/// Per-worker FFT scratch for truncated products of order-N polynomials:
/// real buffers of length L (the smallest power of two >= 2N) and the
/// forward/inverse plans bound to them. Not shareable between threads.
class FftConvolver {
 public:
  explicit FftConvolver(std::size_t order)
      : order_(order), length_(std::bit_ceil(std::max<std::size_t>(2 * order, 2))) {
    detail::check_order(order);
    const std::size_t spectrum = length_ / 2 + 1;
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * length_)));
    spec_a_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * spectrum)));
    spec_b_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * spectrum)));
    if (!real_ || !spec_a_ || !spec_b_) throw std::bad_alloc();
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int len = static_cast<int>(length_);
    forward_a_.reset(fftw_plan_dft_r2c_1d(len, real_.get(), spec_a_.get(), FFTW_ESTIMATE));
    forward_b_.reset(fftw_plan_dft_r2c_1d(len, real_.get(), spec_b_.get(), FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_dft_c2r_1d(len, spec_a_.get(), real_.get(), FFTW_ESTIMATE));
  }

  std::size_t order() const noexcept { return order_; }
  std::size_t length() const noexcept { return length_; }

  /// out = trunc(a * b). out may alias a or b.
  void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    if (a.size() != order_ || b.size() != order_ || out.size() != order_) {
      throw Error(Errc::order_mismatch, "FFT operands must all have order " + std::to_string(order_));
    }
    load(a);
    fftw_execute(forward_a_.get());
    load(b);
    fftw_execute(forward_b_.get());
    const std::size_t spectrum = length_ / 2 + 1;
    for (std::size_t i = 0; i < spectrum; ++i) {
      const double ar = spec_a_.get()[i][0], ai = spec_a_.get()[i][1];
      const double br = spec_b_.get()[i][0], bi = spec_b_.get()[i][1];
      spec_a_.get()[i][0] = ar * br - ai * bi;
      spec_a_.get()[i][1] = ar * bi + ai * br;
    }
    fftw_execute(inverse_.get());  // c2r overwrites spec_a_
    const double scale = 1.0 / static_cast<double>(length_);
    for (std::size_t d = 0; d < order_; ++d) out[d] = real_.get()[d] * scale;
  }

  CoeffVec multiply(const CoeffVec& a, const CoeffVec& b) {
    CoeffVec out(order_);
    multiply(a.coeffs(), b.coeffs(), out.coeffs());
    return out;
  }

 private:
  void load(std::span<const double> v) {
    std::copy(v.begin(), v.end(), real_.get());
    std::fill(real_.get() + order_, real_.get() + length_, 0.0);
  }

  std::size_t order_;
  std::size_t length_;
  std::unique_ptr<double, detail::FftwFree> real_;
  std::unique_ptr<fftw_complex, detail::FftwFree> spec_a_;
  std::unique_ptr<fftw_complex, detail::FftwFree> spec_b_;
  detail::FftwPlan forward_a_;
  detail::FftwPlan forward_b_;
  detail::FftwPlan inverse_;
};

/// Product of every polynomial in the list, truncated at degree N-1 after
/// each pairwise FFT product.
inline CoeffVec conv_trunc_fft(std::span<const CoeffVec> vecs) {
  if (vecs.empty()) throw Error(Errc::invalid_argument, "conv_trunc_fft of an empty list");
  const std::size_t order = vecs.front().order();
  for (const CoeffVec& v : vecs) {
    if (v.order() != order) throw Error(Errc::order_mismatch, "conv_trunc_fft operands differ in order");
  }
  CoeffVec acc = vecs.front();
  if (vecs.size() == 1) return acc;
  FftConvolver fft(order);
  for (std::size_t i = 1; i < vecs.size(); ++i) {
    fft.multiply(acc.coeffs(), vecs[i].coeffs(), acc.coeffs());
  }
  return acc;
}

}  // namespace hyperttsv
