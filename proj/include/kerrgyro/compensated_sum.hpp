#pragma once

#include <cmath>
#include <complex>

namespace kerrgyro {

// Neumaier's variant of Kahan summation. Moments of the Kerr generator reach
// N^6 weights with alternating signs, so plain accumulation loses digits.
template <class T>
class compensated_sum {
 public:
  compensated_sum() = default;
  explicit compensated_sum(T init) : sum_(init) {}

  compensated_sum& operator+=(T x) {
    const T t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  compensated_sum& operator-=(T x) { return *this += -x; }

  T value() const { return sum_ + comp_; }

 private:
  T sum_{};
  T comp_{};
};

template <class T>
class compensated_sum<std::complex<T>> {
 public:
  compensated_sum& operator+=(std::complex<T> z) {
    re_ += z.real();
    im_ += z.imag();
    return *this;
  }
  std::complex<T> value() const { return {re_.value(), im_.value()}; }

 private:
  compensated_sum<T> re_;
  compensated_sum<T> im_;
};

}  // namespace kerrgyro
