#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace ncfam {

inline constexpr double kPi = 3.14159265358979323846;

// Raised where a matrix that must be invertible is numerically singular.
struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 1/(1+exp(-x)) without forming exp of a large positive argument.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1+exp(x)); saturates to x above 36 where log1p would lose the tail.
inline double softplus(double x) {
  if (x > 36.0) return x;
  if (x < -36.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// Sum of term(i) over [begin, end) with a fixed pairwise reduction tree, so
// accumulation error stays O(log n) and the result does not depend on how a
// caller shards the range.
template <class T, class F>
T pairwise_sum(std::size_t begin, std::size_t end, const F& term) {
  const std::size_t n = end - begin;
  if (n == 0) throw std::invalid_argument("pairwise_sum: empty range");
  if (n <= 64) {
    T acc = term(begin);
    for (std::size_t i = begin + 1; i < end; ++i) acc += term(i);
    return acc;
  }
  const std::size_t mid = begin + n / 2;
  T left = pairwise_sum<T>(begin, mid, term);
  T right = pairwise_sum<T>(mid, end, term);
  left += right;
  return left;
}

}  // namespace ncfam
