#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "hyperttsv/error.hpp"

namespace hyperttsv {

using BigInt = boost::multiprecision::cpp_int;
/// Wide-exponent float for ratios of exact integers beyond the double range.
using BigFloat = boost::multiprecision::cpp_bin_float_50;

/// Largest tensor order handled anywhere in the library; 170! is the last
/// factorial representable as a double.
inline constexpr unsigned kMaxOrder = 170;

namespace detail {

template <class Int>
Int checked_add(const Int& a, const Int& b) {
  if constexpr (std::is_integral_v<Int>) {
    Int r{};
    if (__builtin_add_overflow(a, b, &r)) {
      throw Error(Errc::overflow, "integer addition exceeds " +
                                      std::to_string(sizeof(Int) * 8) + "-bit width");
    }
    return r;
  } else {
    return a + b;
  }
}

template <class Int>
Int checked_mul(const Int& a, const Int& b) {
  if constexpr (std::is_integral_v<Int>) {
    Int r{};
    if (__builtin_mul_overflow(a, b, &r)) {
      throw Error(Errc::overflow, "integer product exceeds " +
                                      std::to_string(sizeof(Int) * 8) + "-bit width");
    }
    return r;
  } else {
    return a * b;
  }
}

/// Row n of the Stirling triangle, S(n, 0..n).
template <class Int>
std::vector<Int> stirling2_row(unsigned n) {
  std::vector<Int> row(n + 1, Int(0));
  row[0] = Int(1);
  for (unsigned i = 1; i <= n; ++i) {
    // S(i,k) = k*S(i-1,k) + S(i-1,k-1); sweep k downward to reuse the row.
    for (unsigned k = i; k >= 1; --k) {
      row[k] = checked_add<Int>(checked_mul<Int>(Int(k), row[k]), row[k - 1]);
    }
    row[0] = Int(0);
  }
  return row;
}

}  // namespace detail

/// Stirling number of the second kind S(n, k): partitions of an n-set into k
/// non-empty blocks. Builtin integer types are overflow-checked.
template <class Int = BigInt>
Int stirling2(unsigned n, unsigned k) {
  if (k > n) throw Error(Errc::invalid_argument, "stirling2 requires k <= n");
  return detail::stirling2_row<Int>(n)[k];
}

template <class Int = BigInt>
Int factorial(unsigned d) {
  Int r(1);
  for (unsigned i = 2; i <= d; ++i) r = detail::checked_mul<Int>(r, Int(i));
  return r;
}

/// |beta(e)| for an edge of size k in an order-N blowup tensor: the number of
/// length-N tuples over e whose support is all of e, k! * S(N, k).
template <class Int = BigInt>
Int blowup_size(unsigned edge_size, unsigned order) {
  if (edge_size < 1 || edge_size > order) {
    throw Error(Errc::invalid_argument, "blowup_size requires 1 <= k <= N");
  }
  return detail::checked_mul<Int>(factorial<Int>(edge_size), stirling2<Int>(order, edge_size));
}

inline double to_double(const BigInt& v) {
  const double r = v.convert_to<double>();
  if (!std::isfinite(r)) throw Error(Errc::overflow, "exact integer not representable as double");
  return r;
}

/// d! as a double, correctly rounded from the exact integer.
inline double factorial_real(unsigned d) {
  if (d > kMaxOrder) {
    throw Error(Errc::order_too_large, "factorial_real(" + std::to_string(d) + ") overflows double");
  }
  static const std::array<double, kMaxOrder + 1> table = [] {
    std::array<double, kMaxOrder + 1> t{};
    BigInt f(1);
    for (unsigned i = 0; i <= kMaxOrder; ++i) {
      if (i > 1) f *= i;
      t[i] = f.convert_to<double>();
    }
    return t;
  }();
  return table[d];
}

/// Blowup-set sizes for every edge size 1..N of one order-N tensor, kept both
/// exact and as doubles.
class BlowupTable {
 public:
  BlowupTable() = default;

  explicit BlowupTable(unsigned order) : order_(order) {
    if (order < 1) throw Error(Errc::invalid_argument, "blowup table order must be >= 1");
    if (order > kMaxOrder) {
      throw Error(Errc::order_too_large, "order " + std::to_string(order) + " exceeds " +
                                             std::to_string(kMaxOrder));
    }
    const auto row = detail::stirling2_row<BigInt>(order);
    exact_.resize(order + 1);
    real_.assign(order + 1, 0.0);
    leaf_scale_.assign(order + 1, 0.0);
    inv_.resize(order + 1);
    BigInt kfact(1);
    const BigFloat top(factorial<BigInt>(order - 1));
    for (unsigned k = 1; k <= order; ++k) {
      kfact *= k;
      exact_[k] = kfact * row[k];
      const BigFloat size(exact_[k]);
      real_[k] = size.convert_to<double>();
      inv_[k] = (BigFloat(1) / size);
      leaf_scale_[k] = (top / size).convert_to<double>();
    }
  }

  unsigned order() const noexcept { return order_; }

  const BigInt& exact(unsigned edge_size) const { return exact_.at(checked(edge_size)); }
  /// |beta| as a double; +inf once it leaves the double range (orders above ~140).
  double size(unsigned edge_size) const { return real_.at(checked(edge_size)); }

  /// w / |beta| rounded once from the wide ratio. Underflows to 0 only for
  /// very large orders; engines use leaf_scale instead.
  double scaled_value(unsigned edge_size, double weight) const {
    return (BigFloat(weight) * inv_.at(checked(edge_size))).convert_to<double>();
  }

  /// (N-1)! / |beta| for an edge of this size; multiply by w(e) to obtain the
  /// weight applied to the t^(N-1) coefficient of a leaf's generating function.
  double leaf_scale(unsigned edge_size) const { return leaf_scale_.at(checked(edge_size)); }

 private:
  unsigned checked(unsigned edge_size) const {
    if (edge_size < 1 || edge_size > order_) {
      throw Error(Errc::order_too_large, "edge size " + std::to_string(edge_size) +
                                             " outside 1.." + std::to_string(order_));
    }
    return edge_size;
  }

  unsigned order_ = 0;
  std::vector<BigInt> exact_;
  std::vector<double> real_;
  std::vector<double> leaf_scale_;
  std::vector<BigFloat> inv_;
};

}  // namespace hyperttsv
