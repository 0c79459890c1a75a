#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "mra/moments.hpp"
#include "mra/rng.hpp"
#include "mra/tensor.hpp"

namespace testing_util {

inline mra::RealTensor random_real(std::size_t order, std::size_t p, std::uint64_t seed) {
  mra::Stream rng(seed, "test-tensor");
  auto t = mra::RealTensor::cube(order, p);
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

inline mra::ComplexTensor random_complex(std::size_t order, std::size_t p, std::uint64_t seed) {
  mra::Stream rng(seed, "test-ctensor");
  auto t = mra::ComplexTensor::cube(order, p);
  for (auto& v : t.data()) v = {rng.normal(), rng.normal()};
  return t;
}

inline mra::RealVector random_vector(int p, std::uint64_t seed) {
  mra::Stream rng(seed, "test-vector");
  mra::RealVector v(p);
  for (int i = 0; i < p; ++i) v(i) = rng.normal();
  return v;
}

// Frequency value at storage position k.
inline int fv(int p, std::size_t k) { return mra::Frequencies(p).value(k); }
inline bool valid(int p, int f) { return mra::Frequencies(p).contains(f); }
inline std::size_t fp(int p, int f) { return mra::Frequencies(p).position(f); }

}  // namespace testing_util
