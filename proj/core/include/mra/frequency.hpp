#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>

#include "mra/errors.hpp"

namespace mra {

/// The frequency set ±[p/2] = {-p/2,...,-1,1,...,p/2} in canonical storage
/// order. Position k holds frequency k - p/2 for k < p/2 and k - p/2 + 1
/// otherwise, so negation is the reversal k -> p - 1 - k.
class Frequencies {
 public:
  explicit Frequencies(int p) : p_(p) {
    if (p <= 0 || p % 2 != 0) {
      throw InvalidInput("frequency set needs an even positive p, got " + std::to_string(p));
    }
  }

  int p() const noexcept { return p_; }
  int half() const noexcept { return p_ / 2; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(p_); }

  bool contains(int freq) const noexcept { return freq != 0 && std::abs(freq) <= p_ / 2; }

  int value(std::size_t pos) const noexcept {
    const int k = static_cast<int>(pos);
    return k < p_ / 2 ? k - p_ / 2 : k - p_ / 2 + 1;
  }

  std::size_t position(int freq) const {
    if (!contains(freq)) {
      throw InvalidInput("frequency " + std::to_string(freq) + " outside ±[" +
                         std::to_string(p_ / 2) + "]");
    }
    return static_cast<std::size_t>(freq < 0 ? freq + p_ / 2 : freq + p_ / 2 - 1);
  }

  /// Position of `freq`, or -1 when it is 0 or out of range.
  int position_or_invalid(int freq) const noexcept {
    if (!contains(freq)) return -1;
    return freq < 0 ? freq + p_ / 2 : freq + p_ / 2 - 1;
  }

  std::size_t negated(std::size_t pos) const noexcept { return size() - 1 - pos; }

 private:
  int p_;
};

/// A validated element of ±[p/2].
class FreqIndex {
 public:
  FreqIndex(int value, int p) : value_(value) {
    if (!Frequencies(p).contains(value)) {
      throw InvalidInput("frequency " + std::to_string(value) + " not in ±[" +
                         std::to_string(p / 2) + "]");
    }
  }
  int value() const noexcept { return value_; }
  FreqIndex operator-() const noexcept { return FreqIndex(-value_); }
  friend bool operator==(FreqIndex, FreqIndex) = default;

 private:
  explicit FreqIndex(int value) : value_(value) {}
  int value_;
};

}  // namespace mra
